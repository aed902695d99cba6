#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "conelab/crack.hpp"
#include "conelab/flatness.hpp"
#include "conelab/harmonic.hpp"

namespace conelab {

enum class ScenarioKind { Decay, Eigen, Whitney, Flatness, Counterexample, Monotonicity };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

/// Malformed or out-of-range configuration. `key` names the offending entry
/// ("section.key") when there is one.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& key, const std::string& what);
  std::string key;
};

/// A failure inside a scenario's module pipeline, with the stage prefixed.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Config layout:
///
///   [scenario]  kind, name, seed, trials
///   [parameters] cone, resolution, eps0, eps, gamma, radii, h, bc,
///                magnitude, overlap_bound
///   [output]    dir
///
/// radii is a comma-separated list. Unused parameters keep their defaults.
struct Scenario {
  ScenarioKind kind = ScenarioKind::Decay;
  std::string name = "scenario";
  std::uint64_t seed = 1;
  int trials = 1;

  ConeType cone = ConeType::Y;
  int resolution = 64;
  double eps0 = 1e-5;
  double eps = 0.01;
  double gamma = 0.75;
  std::vector<double> radii{0.5};
  double h = 0.02;            // spherical mesh size
  std::string bc = "neumann";  // neumann | dirichlet
  double magnitude = 1.0;     // tube data M
  int overlap_bound = 61;

  std::string output_dir = "out";

  /// Throws ConfigError on the first out-of-range field.
  void validate() const;
  /// Canonical text: every field, fixed order, shortest round-trip numbers.
  std::string serialize() const;
  static Scenario parse(const std::string& text);
  static Scenario load(const std::filesystem::path& path);

  bool operator==(const Scenario&) const = default;
};

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Everything one run produced. Summary metrics are also written as
/// metrics.csv, so each number in summary.json has a CSV row.
struct ResultStore {
  std::string run_id;
  std::string config;                          // canonical snapshot
  std::map<std::string, std::string> tables;   // file name -> CSV text
  std::map<std::string, std::string> plots;    // file name -> SVG text
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Verdict> verdicts;

  bool pass() const;
  std::string summary_json() const;
  /// config.ini, summary.json, metrics.csv, verdicts.csv, tables and plots.
  void write(const std::filesystem::path& dir) const;
};

/// Runs the scenario with trials spread over `jobs` threads. Output does not
/// depend on `jobs`. Module errors are rethrown as ScenarioError.
ResultStore run(const Scenario& s, int jobs = 1);
/// load + optional seed override + run.
ResultStore run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed = {}, int jobs = 1);

/// Log-log SVG of omega2 against r with reference slopes 0.8 and 1 through
/// the largest-radius point. Throws std::invalid_argument when no row has
/// positive r and omega2.
std::string loglog_svg(const EnergyProfile& profile, const std::string& title = "");
/// Reads an r,E,omega2 CSV and plots it; throws std::invalid_argument on an
/// empty table.
std::string plot_profile_csv(std::istream& csv, const std::string& title = "");

/// Cone crack used by the scenarios: mesh spacing 0.04, samples every 0.02.
CrackSet standard_cone_crack(const MinimalCone& cone);

/// Reference cone Z0 with wrinkles of support 0.8 eps and amplitude 0.1 eps
/// inside `count` bad balls of radius eps, away from spines. The mesh spacing
/// is 0.02, refined to 0.1 eps within 1.5 eps of each wrinkle.
struct WrinkledCone {
  MinimalCone cone;
  CrackSet crack;
  BadBallFamily bad;
};
WrinkledCone wrinkled_cone(ConeType type, std::uint64_t seed, double eps, int count = 3);

/// Certification options used for wrinkled cones.
EpsMinimalOptions certification_options();

}  // namespace conelab
