// conelab: scenario runner and spot-check tool.
//
// Exit codes: 0 every verdict passed, 1 some verdict failed or a module
// error, 2 usage or configuration error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "conelab/lab.hpp"
#include "conelab/spherical.hpp"
#include "conelab/whitney.hpp"
#include "json.hpp"

using namespace conelab;
using nlohmann::ordered_json;

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2;

int report(const ResultStore& st, const std::string& out_dir) {
  if (!out_dir.empty()) st.write(out_dir);
  std::cout << st.summary_json() << "\n";
  return st.pass() ? kPass : kFail;
}

void error_json(const std::string& kind, const std::string& message, const std::string& key = "") {
  ordered_json j{{"error", kind}, {"message", message}};
  if (!key.empty()) j["key"] = key;
  std::cerr << j.dump() << "\n";
}

Vec3 parse_point(const std::string& s) {
  Vec3 p;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> p.x >> c1 >> p.y >> c2 >> p.z) || c1 != ',' || c2 != ',' || !(in >> std::ws).eof())
    throw CLI::ValidationError("--point", "expected x,y,z");
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal-cone energy decay laboratory"};
  app.require_subcommand(1);

  // run CONFIG [--out DIR] [--seed N] [--jobs N]
  auto* run_cmd = app.add_subcommand("run", "Run a scenario config and write its result store");
  std::string config_path, run_out;
  std::uint64_t run_seed = 0;
  int jobs = 1;
  run_cmd->add_option("config", config_path, "Scenario config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run_out, "Output directory (default: the config's output.dir)");
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Override the scenario seed");
  run_cmd->add_option("--jobs", jobs, "Worker threads over trials")->check(CLI::Range(1, 256));

  // decay
  auto* decay_cmd = app.add_subcommand("decay", "omega2(r/2)/omega2(r) on a cone crack");
  Scenario decay;
  decay.kind = ScenarioKind::Decay;
  decay.name = "decay";
  std::string decay_cone = "Y", decay_out;
  decay_cmd->add_option("--cone", decay_cone, "P, Y or T")->check(CLI::IsMember({"P", "Y", "T"}));
  decay_cmd->add_option("--resolution", decay.resolution, "Cells across the unit ball");
  decay_cmd->add_option("--gamma", decay.gamma, "Decay exponent to test");
  decay_cmd->add_option("--r", decay.radii, "Radii r (comma separated)")->delimiter(',');
  decay_cmd->add_option("--trials", decay.trials, "Number of random boundary data");
  decay_cmd->add_option("--seed", decay.seed, "Seed");
  decay_cmd->add_option("--out", decay_out, "Write the result store here");

  // eigen
  auto* eigen_cmd = app.add_subcommand("eigen", "First Laplace-Beltrami eigenvalue of a cone component");
  eigen_cmd->set_help_flag("--help", "Print this help message and exit");
  Scenario eigen;
  eigen.kind = ScenarioKind::Eigen;
  eigen.name = "eigen";
  std::string eigen_cone = "Y";
  eigen_cmd->add_option("--cone", eigen_cone, "P (hemisphere), Y (lune) or T (triangle)")
      ->check(CLI::IsMember({"P", "Y", "T"}));
  eigen_cmd->add_option("--h", eigen.h, "Target mesh size");
  eigen_cmd->add_option("--bc", eigen.bc, "neumann or dirichlet")->check(CLI::IsMember({"neumann", "dirichlet"}));

  // partition
  auto* part_cmd = app.add_subcommand("partition", "Evaluate the Whitney partition of a random instance");
  std::uint64_t part_seed = 1;
  std::string point_text, cover_out;
  part_cmd->add_option("--seed", part_seed, "Instance seed");
  part_cmd->add_option("--point", point_text, "x,y,z (default: near the first ball)");
  part_cmd->add_option("--cover", cover_out, "Also write the cover CSV here");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Log-log SVG of an r,E,omega2 profile CSV");
  std::string csv_path, svg_out, title;
  plot_cmd->add_option("csv", csv_path, "Profile CSV")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", svg_out, "SVG file (default: stdout)");
  plot_cmd->add_option("--title", title, "Plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*run_cmd) {
      Scenario s = Scenario::load(config_path);
      if (*seed_opt) s.seed = run_seed;
      return report(run(s, jobs), run_out.empty() ? s.output_dir : run_out);
    }
    if (*decay_cmd) {
      decay.cone = cone_type_from_string(decay_cone);
      return report(run(decay), decay_out);
    }
    if (*eigen_cmd) {
      eigen.cone = cone_type_from_string(eigen_cone);
      const ResultStore st = run(eigen);
      ordered_json j;
      for (const auto& [k, v] : st.metrics) j[k] = v;
      j["pass"] = st.pass();
      std::cout << j.dump(2) << "\n";
      return st.pass() ? kPass : kFail;
    }
    if (*part_cmd) {
      const WhitneyInstance in = random_whitney_instance(part_seed);
      const WhitneyCover& cover = *in.cover;
      if (cover.balls.empty()) throw std::runtime_error("instance has no Whitney balls");
      const Vec3 x = point_text.empty()
                         ? cover.balls[0].center + Vec3{9.0 * cover.balls[0].radius, 0, 0}
                         : parse_point(point_text);
      const PartitionValue pv = evaluate_partition(cover, x);
      ordered_json j{{"point", {x.x, x.y, x.z}}, {"phi0", pv.phi0}, {"total", pv.total}, {"theta0", pv.theta0()}};
      j["weights"] = ordered_json::array();
      for (const auto& [b, w] : pv.weights)
        j["weights"].push_back({{"ball", b},
                                {"theta", w},
                                {"radius", cover.balls[static_cast<std::size_t>(b)].radius},
                                {"distance", dist(x, cover.balls[static_cast<std::size_t>(b)].center)}});
      if (!cover_out.empty()) {
        std::ofstream out(cover_out);
        if (!out) throw std::runtime_error("cannot write " + cover_out);
        cover.write_csv(out);
      }
      std::cout << j.dump(2) << "\n";
      return kPass;
    }
    if (*plot_cmd) {
      std::ifstream in(csv_path);
      const std::string svg = plot_profile_csv(in, title);
      if (svg_out.empty()) {
        std::cout << svg;
      } else {
        std::ofstream out(svg_out);
        if (!out) throw std::runtime_error("cannot write " + svg_out);
        out << svg;
      }
      return kPass;
    }
  } catch (const CLI::ValidationError& e) {
    error_json("usage", e.what());
    return kUsage;
  } catch (const ConfigError& e) {
    error_json("config", e.what(), e.key);
    return kUsage;
  } catch (const std::invalid_argument& e) {
    error_json("input", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    error_json("run", e.what());
    return kFail;
  }
  return kUsage;
}
