#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "conelab/cone.hpp"
#include "conelab/crack.hpp"

namespace conelab {

/// (1/r) max over crack samples in the ball of d(sample, cone); 0 when the
/// ball holds no sample.
double one_sided_deviation(const CrackSet& crack, const MinimalCone& cone, const Ball& ball);

struct BetaOptions {
  int starts = 32;            // quasi-random starts per cone type
  int max_samples = 400;      // subsample used inside the local search
  double tol = 1e-4;          // local search tolerance, relative to r
  double stop_below = -1.0;   // return as soon as a cone reaches this value
  bool planes = true, ys = true, ts = true;
  bool data_starts = true;    // starts fitted to triangle normals near x
};

struct BetaResult {
  double value = 0.0;
  MinimalCone cone;
};

/// Upper bound on inf over cones Z containing x of (1/r) sup d(y, Z) over
/// crack samples y in B(x, r). Doubling `starts` never raises the value.
/// Throws std::invalid_argument if x is off the crack.
BetaResult beta(const CrackSet& crack, const Vec3& x, double r, const BetaOptions& opt = {});

/// Bilateral flatness against planes through x: inf over P of D_{x,r}(crack, P).
BetaResult plane_flatness(const CrackSet& crack, const Vec3& x, double r, int starts = 32);

/// (1/r) max of the two one-sided sup-distances within the ball; +inf if
/// exactly one of the sets has samples in the ball.
double hausdorff_distance_normalized(const CrackSet& E, const CrackSet& F, const Ball& ball);

/// Bilateral distance to a cone: samples of E in the ball against the cone,
/// and points of the cone in the ball against E.
double bilateral_cone_distance(const CrackSet& E, const MinimalCone& cone, const Ball& ball,
                               int cone_points = 256);

struct FlatnessRecord {
  Vec3 x;
  double r = 0.0;
  double beta = 0.0;
  MinimalCone cone;
  bool pass = true;
};

struct FlatnessReport {
  std::vector<FlatnessRecord> records;  // sorted by (x, r) lexicographically
  double threshold = 0.0;
  double worst_beta = 0.0;
  Vec3 worst_x;
  double worst_r = 0.0;
  bool pass = true;
  std::string failed_clause;  // empty on pass; "i".."v" for the (eps0, eps) suite
  std::string detail;

  void add(const FlatnessRecord& rec);
  void finalize();
  /// x,y,z,r,beta,type,pass
  void write_csv(std::ostream& out) const;
};

struct SweepOptions {
  int n_centers = 16;
  int n_radii = 3;
  double min_radius = 0.0;  // 0: ten sample spacings
  std::uint64_t seed = 1;
};

FlatnessReport check_reifenberg(const CrackSet& crack, const Ball& ball, double eps0,
                                const SweepOptions& opt = {});
FlatnessReport check_eps_minimal(const CrackSet& crack, const Ball& ball, double eps0,
                                 const SweepOptions& opt = {});

/// Balls centered on the crack with radii <= eps.
struct BadBallFamily {
  std::vector<Ball> balls;
  double overlap_constant = 1.0;

  /// Largest number of the doubled balls 2B_i containing a common point,
  /// checked at the centers and at pairwise-overlap witnesses.
  int measured_overlap() const;
  void write_csv(std::ostream& out) const;  // cx,cy,cz,r
  static BadBallFamily read_csv(std::istream& in);
};

struct EpsMinimalOptions {
  SweepOptions sweep;
  int clause_iv_radii = 3;
  int separation_resolution = 64;
  int cone_points = 2000;  // containment samples for clause iii
};

/// Clauses i) to v) of the (eps0, eps)-minimal definition, stopping at the
/// first failure. Clause ii) is tested at centers outside the doubled bad
/// balls.
FlatnessReport check_eps0_eps_minimal(const CrackSet& crack, const Ball& ball, double eps0,
                                      double eps, const BadBallFamily& bad,
                                      const MinimalCone& cone0,
                                      const EpsMinimalOptions& opt = {});

}  // namespace conelab
