#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "conelab/cone.hpp"
#include "conelab/crack.hpp"
#include "conelab/grid.hpp"

namespace conelab {

/// Components of ball \ Z_gap, Z_gap = {d(., cone) < gap}, on a cell grid.
struct RegionLabeling {
  MinimalCone cone;
  Ball ball;
  double gap = 0.0;
  CellGrid grid;
  Components components;

  int count() const { return components.count; }
  /// Label of the cell containing p (0 if blocked or outside).
  int label_at(const Vec3& p) const;
  /// Cell of region k (1-based) farthest from the cone.
  std::size_t deepest_cell(int k) const;
};

/// `resolution` cells across the ball's diameter; requires gap < r/10 and
/// grid step <= gap/2.
RegionLabeling label_regions(const MinimalCone& cone, const Ball& ball, double gap,
                             int resolution);

/// Thrown when crack samples in the ball leave the slab around the cone.
struct ContainmentError : std::domain_error {
  using std::domain_error::domain_error;
};

struct SeparationReport {
  bool separating = false;
  double containment = 0.0;  // max d(sample, cone) / r over samples in the ball
  double slab = 0.0;         // absolute slab half-width used for the regions
  int regions = 0;
  std::vector<int> crack_component;  // per region: component of ball \ crack
};

/// Slab half-width max(r*eps0, 2*step): the grid cannot resolve thinner slabs.
SeparationReport separation_report(const CrackSet& crack, const MinimalCone& cone,
                                   const Ball& ball, double eps0, int resolution);
bool is_separating(const CrackSet& crack, const MinimalCone& cone, const Ball& ball,
                   double eps0, int resolution);

struct OrientationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OrientationMap {
  std::vector<int> map;  // map[k-1] = l(k), 1-based outer region index
  int inner_regions = 0;
  int outer_regions = 0;
  bool radius_warning = false;  // inner radius above outer/32
};

/// Sends each inner cone region to the outer region sharing its component of
/// outer-ball \ crack. Throws OrientationError if the inner ball is not
/// separated, an inner region finds no outer region, or l is not injective.
OrientationMap orientation_map(const CrackSet& crack, const Ball& inner_ball,
                               const MinimalCone& inner_cone, const Ball& outer_ball,
                               const MinimalCone& outer_cone, double eps0, int resolution);

struct Recentered {
  double r1 = 0.0;
  MinimalCone cone;
};

/// Finds r1 in {r0, V r0, V^2 r0} (smallest first) and a cone equal to `cone`
/// in B(origin, r1) whose center lies in B(origin, r1/V). Candidates at each
/// radius: plane through the local sheet, a Y cone along the nearby spine
/// line, the cone itself. Throws std::invalid_argument if origin is off the
/// cone, std::domain_error if no candidate qualifies.
Recentered recenter(const MinimalCone& cone, const Vec3& origin, double r0, double V);

}  // namespace conelab
