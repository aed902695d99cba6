#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "conelab/flatness.hpp"
#include "conelab/harmonic.hpp"

namespace conelab {

/// delta(x) = max(|h - d(x, G)|, sum_i psi_i(x)) with G = Z0 cut to the ball
/// of radius rho about the cone center, so the first term is the distance to
/// the boundary of the tube {d(., G) < h} along normals to G, and
/// psi_i = clamp(2 r_i - |x - c_i|, 0, r_i).
struct GeometricFunction {
  BadBallFamily bad;
  MinimalCone cone0;
  double rho = 0.75;
  double h = 0.25;
  double lipschitz_constant = 1.0;  // measured max slope
  double lipschitz_bound = 1.0;     // max(1, overlap of the doubled bad balls)

  double tube_term(const Vec3& x) const;
  double bump_sum(const Vec3& x) const;
  double operator()(const Vec3& x) const;
};

/// Throws std::invalid_argument unless 0 < h <= 1/4 and every bad ball lies
/// in the unit ball. The Lipschitz constant is the largest slope over 10^4
/// seeded point pairs.
GeometricFunction build_delta(const BadBallFamily& bad, double rho, double h, const MinimalCone& cone0,
                              std::uint64_t seed = 1);

struct WhitneyBall {
  Vec3 center;
  double radius = 0.0;       // after recentering
  double base_radius = 0.0;  // delta(center) / U
  int inflation = 1;         // 1, 2 or 4
  MinimalCone cone;          // almost centered: center within radius / 2
};

struct WhitneyCover {
  std::vector<WhitneyBall> balls;
  double U = 30.0;
  double C0 = 1.0;
  Ball domain;

  /// Indices of balls with |x - x_j| < R.
  std::vector<int> within(const Vec3& x, double R) const;
  /// Indices of balls j with |x - x_j| < factor r_j.
  std::vector<int> containing(const Vec3& x, double factor) const;
  /// Most balls 10W_j containing one point, over the centers and the given
  /// probe points.
  int overlap(const std::vector<Vec3>& probes = {}) const;
  /// x,y,z,r,cone_type
  void write_csv(std::ostream& out) const;
  /// Rebuilds the lookup used by containing(); call after editing balls.
  void build_index();

 private:
  double cell_ = 0.0;
  double rmax_ = 0.0;
  std::vector<std::pair<std::uint64_t, int>> hash_;  // sorted (cell key, ball)
};

/// Greedy maximal family over crack samples in the domain with delta > 0, in
/// decreasing delta (ties by lexicographic center), keeping cores
/// B(x, delta(x) / (100 U)) pairwise disjoint. Each ball then gets the cone
/// through its center parallel to delta.cone0, recentered with factor 2.
/// Throws std::invalid_argument when U < 30 C0.
WhitneyCover select_whitney_balls(const CrackSet& crack, const GeometricFunction& delta, double U,
                                  const Ball& domain);

/// 0 on [0, 8], 1 on [10, inf), quintic smoothstep in between.
double whitney_ramp(double t);
double whitney_ramp_derivative(double t);

struct PartitionValue {
  double phi0 = 1.0;
  double total = 1.0;                         // phi0 + sum_j phi_j
  std::vector<std::pair<int, double>> weights;  // (j, theta_j), theta_j > 0
  double theta0() const { return phi0 / total; }
};
/// phi_j = 1 - l(|x - x_j| / r_j) and theta_j = phi_j / total.
PartitionValue evaluate_partition(const WhitneyCover& cover, const Vec3& x);
/// Gradient of phi0 by central differences with step fd.
Vec3 phi0_gradient(const WhitneyCover& cover, const Vec3& x, double fd = 1e-6);

struct CoverAudit {
  int instances = 0;
  int core_violations = 0;
  int comparability_violations = 0;
  double worst_ratio = 1.0;       // max r_j / r_j' over meeting 10W pairs
  int overlap = 0;                // measured
  int maximality_violations = 0;
  int phi0_violations = 0;        // phi0 != 1 off the 10W_j, != 0 on some 8W_j
  int sum_violations = 0;         // phi0 + sum phi_j < 1, or weights not summing to 1
  int gradient_violations = 0;    // |grad phi0| r_j above (15/16) N_x worst_ratio on an annulus
  double worst_gradient = 0.0;    // max |grad phi0| r_j on annuli
  double partition_error = 0.0;   // max |theta0 + sum theta_j - 1|

  bool pass(int overlap_bound) const;
  void merge(const CoverAudit& o);
};

/// Checks the cover invariants at `points` random points of the domain and
/// at all crack samples in it. Core disjointness and maximality use the
/// radii before recentering. N_x is the number of annuli 10W_j \ 8W_j
/// holding x.
CoverAudit audit_cover(const WhitneyCover& cover, const CrackSet& crack, const GeometricFunction& delta,
                       int points, std::uint64_t seed);

/// v_k = theta0 u + sum_j m_k^j theta_j on the graph nodes. Balls whose
/// annulus 10W_j \ 8W_j holds no node of component k are inactive for k.
struct ExtensionField {
  std::shared_ptr<const WhitneyCover> cover;
  const ScalarField* u = nullptr;
  int component = 0;
  std::vector<char> active;   // per ball
  std::vector<Vec3> anchor;   // a_k^j
  std::vector<double> mean;   // m_k^j
  std::vector<double> clearance;

  /// v_k at a node of the graph; u's value outside every 10W_j and NaN where
  /// an inactive ball has weight.
  double value_at(std::size_t cell) const;
};

/// Throws std::runtime_error when an active ball has no node of component k
/// in 10W_j \ 8W_j with crack distance >= 7 r_j - 14 grid steps.
ExtensionField build_extension(const ScalarField& u, std::shared_ptr<const WhitneyCover> cover, int component,
                               const CrackSet& crack);

struct EnergyComparison {
  double lhs = 0.0;        // v_k on Delta_k \ V_rho
  // Delta_k: nodes of component k in the domain plus nodes of V(10) where
  // phi0 = 0, minus nodes where an inactive ball has weight.
  double rhs_main = 0.0;   // u on Delta_k \ V(1/3)
  double rhs_zone = 0.0;   // u on V(30) \ V(1/10)
  double empirical_C = 0.0;
  int nodes = 0;           // nodes of Delta_k \ V_rho
};
/// Energies are sums over uncut grid edges with both ends in the region.
/// Throws std::invalid_argument when the extension was built on another field.
EnergyComparison energy_comparison(const ScalarField& u, const ExtensionField& v, const CrackSet& crack,
                                   const GeometricFunction& delta);

/// Segments [a_k^j, a_k^j'] for active balls with meeting 10W balls that
/// cross the crack.
int segment_clearance_violations(const ExtensionField& v, const CrackSet& crack);

/// A randomized cover instance: cone Z0 of random type, rotation and small
/// offset; the crack is Z0 wrinkled inside 0 to 3 bad balls; h, rho and
/// U / (30 C0) drawn from [0.05, 0.25], [0.5, 0.75] and [1, 3].
struct WhitneyInstance {
  MinimalCone cone0;
  CrackSet crack;
  BadBallFamily bad;
  GeometricFunction delta;
  std::shared_ptr<const WhitneyCover> cover;
};
WhitneyInstance random_whitney_instance(std::uint64_t seed, double spacing = 0.05);

/// C1 = 2 + 10 C0 / U.
double c1_inflation(double U, double C0);
/// The balls C1 B_i.
std::vector<Ball> inflated_balls(const BadBallFamily& bad, double U, double C0);

}  // namespace conelab
