#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "conelab/crack.hpp"
#include "conelab/flatness.hpp"
#include "conelab/grid.hpp"
#include "conelab/solvers.hpp"

namespace conelab {

/// Cells of a uniform grid whose centers lie in the ball, with face edges cut
/// by the crack removed. Cells with a face neighbour outside the ball carry
/// Dirichlet data.
struct CrackGraph {
  CellGrid grid;
  Ball ball;
  std::vector<char> node;
  std::vector<char> boundary;
  std::vector<std::uint8_t> cuts;
  Components components;
  std::vector<char> floating;  // per component label - 1
  std::string warning;         // set when a nonempty crack separates nothing

  int dimension() const { return grid.dimension(); }
  double step() const { return grid.step; }
  std::size_t node_count() const;
  /// Uncut face edge from cell idx along +axis to another domain cell.
  bool has_edge(std::size_t idx, int axis) const;
};

/// resolution cells across the ball's bounding box; dimension 2 uses the
/// plane z = ball.center.z and expects vertical crack strips.
CrackGraph discretize(const CrackSet& crack, int resolution, int dimension, const Ball& ball = {});

using BoundaryData = std::function<double(const Vec3&)>;

struct ScalarField {
  std::shared_ptr<const CrackGraph> graph;
  std::vector<double> values;  // per cell; 0 off the domain and on floating components
  CgResult solve;

  /// Sum over uncut edges of (difference / step)^2 * step^d, each edge
  /// weighted by its ramped inclusion in B(x, r).
  double energy(const Vec3& x, double r) const;
};

/// Reusable solver for one graph: the AMG hierarchy is built once.
class HarmonicSolver {
 public:
  explicit HarmonicSolver(std::shared_ptr<const CrackGraph> graph);
  ScalarField solve(const BoundaryData& g, double rtol = 1e-10) const;
  std::size_t unknowns() const { return static_cast<std::size_t>(a_.rows()); }

 private:
  std::shared_ptr<const CrackGraph> graph_;
  std::vector<int> unknown_;  // cell -> unknown index or -1
  SparseMatrix a_;
  std::unique_ptr<AmgPreconditioner> amg_;
};

/// Discrete Dirichlet minimizer; throws std::runtime_error when CG fails.
ScalarField minimize_energy(std::shared_ptr<const CrackGraph> graph, const BoundaryData& g);

/// omega_2(x, r) = E(x, r) / r^{N-1}; throws std::invalid_argument when r is
/// below four cells.
double normalized_energy(const ScalarField& u, const Vec3& x, double r);

struct EnergyProfile {
  std::vector<double> radii, energy, omega2;
  double gamma_hat = 0.0;
  double gamma_lo = 0.0, gamma_hi = 0.0;  // two standard errors
  double fit_lo = 0.1, fit_hi = 0.7;
  std::vector<std::pair<double, double>> violations;  // (r, relative drop of omega2)
  bool vacuous = false;                               // no energy at all

  /// Largest relative decrease of omega2 between consecutive radii.
  double worst_drop() const;
  void write_csv(std::ostream& out) const;  // r,E,omega2
  static EnergyProfile read_csv(std::istream& in);
};

/// Profile about the origin of the graph's ball on the given radii (fit
/// window [fit_lo, fit_hi]).
EnergyProfile energy_profile(const ScalarField& u, const std::vector<double>& radii,
                             double fit_lo = 0.1, double fit_hi = 0.7);

/// n equally spaced radii on [lo, hi].
std::vector<double> radius_sweep(double lo, double hi, int n);

struct DifferentialReport {
  double max_ratio = 0.0;  // max of E / (r E')
  double at_radius = 0.0;
  bool vacuous = false;
};
/// E' by centered differences over the sweep.
DifferentialReport differential_inequality_check(const ScalarField& u, const std::vector<double>& radii);

struct TubeResult {
  EnergyProfile profile;
  double total_energy = 0.0;
  ScalarField field;
};
/// Two crack segments y = +-eps across the unit disk; data m on the left
/// mouth arc, 0 elsewhere. Throws std::invalid_argument if eps < 4 cells.
TubeResult tube_counterexample(double eps, double m, int resolution);
/// The tube crack as vertical strips for a 2D graph.
CrackSet tube_crack(double eps, double spacing);

/// Smooth random data: a sum of six plane waves with |k| <= 3.
BoundaryData random_smooth_data(std::uint64_t seed, int dimension);

struct DecayReport {
  std::vector<double> ratios;  // omega2(0, r) / omega2(0, 1) per sample
  double bound = 0.0;          // r^gamma (1 + tol)
  double worst = 0.0;
  bool pass = false;
};
/// Normalized decay check for a certified crack. Throws std::invalid_argument
/// when the certificate is missing or failed.
DecayReport decay_experiment(const CrackSet& crack, const FlatnessReport& certificate,
                             const std::vector<BoundaryData>& samples, double r, double gamma,
                             int resolution, double tol = 0.05);

}  // namespace conelab
