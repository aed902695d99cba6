#include "conelab/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conelab {

int RegionLabeling::label_at(const Vec3& p) const {
  const long long idx = grid.locate(p);
  return idx < 0 ? 0 : components.label[static_cast<std::size_t>(idx)];
}

std::size_t RegionLabeling::deepest_cell(int k) const {
  std::size_t best = 0;
  double depth = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (components.label[i] != k) continue;
    const double d = cone.distance(grid.center(i));
    if (d > depth) {
      depth = d;
      best = i;
    }
  }
  return best;
}

RegionLabeling label_regions(const MinimalCone& cone, const Ball& ball, double gap,
                             int resolution) {
  if (!(gap > 0.0) || gap >= ball.radius / 10.0)
    throw std::invalid_argument("label_regions: gap must lie in (0, r/10)");
  RegionLabeling out;
  out.cone = cone;
  out.ball = ball;
  out.gap = gap;
  out.grid = CellGrid::cube(ball, resolution);
  if (out.grid.step > gap / 2.0)
    throw std::invalid_argument("label_regions: grid step exceeds gap/2; raise the resolution");
  std::vector<char> active = cells_in_ball(out.grid, ball);
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i] && cone.distance(out.grid.center(i)) < gap) active[i] = 0;
  out.components = connected_components(out.grid, active);
  return out;
}

namespace {

double containment_ratio(const CrackSet& crack, const MinimalCone& cone, const Ball& ball) {
  double worst = 0.0;
  for (int i : crack.samples_in_ball(ball))
    worst = std::max(worst, cone.distance(crack.samples()[i]));
  return worst / ball.radius;
}

/// Component of the crack complement reached from p by a crack-free segment
/// to a nearby active cell; 0 if none within a few cells.
int component_from_point(const CellGrid& g, const Components& comp, const CrackSet& crack,
                         const Vec3& p) {
  const long long home = g.locate(p);
  if (home < 0) return 0;
  const auto c = g.coords(static_cast<std::size_t>(home));
  std::vector<std::pair<double, std::size_t>> near;
  const int reach = 3;
  for (int dk = -reach; dk <= reach; ++dk)
    for (int dj = -reach; dj <= reach; ++dj)
      for (int di = -reach; di <= reach; ++di) {
        const int i = c[0] + di, j = c[1] + dj, k = c[2] + dk;
        if (i < 0 || j < 0 || k < 0 || i >= g.nx || j >= g.ny || k >= g.nz) continue;
        const std::size_t idx = g.index(i, j, k);
        if (comp.label[idx] == 0) continue;
        near.emplace_back(dist(p, g.center(idx)), idx);
      }
  std::sort(near.begin(), near.end());
  for (const auto& [d, idx] : near)
    if (!crack.segment_crosses(p, g.center(idx))) return comp.label[idx];
  return 0;
}

}  // namespace

SeparationReport separation_report(const CrackSet& crack, const MinimalCone& cone,
                                   const Ball& ball, double eps0, int resolution) {
  SeparationReport rep;
  rep.containment = containment_ratio(crack, cone, ball);
  if (rep.containment > eps0 * (1.0 + 1e-9) + 1e-12)
    throw ContainmentError("crack leaves the slab of half-width eps0*r around the cone");
  const CellGrid grid = CellGrid::cube(ball, resolution);
  rep.slab = std::max(ball.radius * eps0, 2.0 * grid.step);
  const RegionLabeling regions = label_regions(cone, ball, rep.slab, resolution);
  rep.regions = regions.count();

  const std::vector<char> active = cells_in_ball(grid, ball);
  const Components comp = connected_components(grid, active, cut_edges(grid, crack, active));
  for (int k = 1; k <= regions.count(); ++k)
    rep.crack_component.push_back(comp.label[regions.deepest_cell(k)]);

  std::vector<int> sorted = rep.crack_component;
  std::sort(sorted.begin(), sorted.end());
  rep.separating = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  return rep;
}

bool is_separating(const CrackSet& crack, const MinimalCone& cone, const Ball& ball, double eps0,
                   int resolution) {
  return separation_report(crack, cone, ball, eps0, resolution).separating;
}

OrientationMap orientation_map(const CrackSet& crack, const Ball& inner_ball,
                               const MinimalCone& inner_cone, const Ball& outer_ball,
                               const MinimalCone& outer_cone, double eps0, int resolution) {
  OrientationMap out;
  out.radius_warning = inner_ball.radius > outer_ball.radius / 32.0;

  const SeparationReport inner = separation_report(crack, inner_cone, inner_ball, eps0, resolution);
  if (!inner.separating) throw OrientationError("crack is not separating in the inner ball");
  const SeparationReport outer = separation_report(crack, outer_cone, outer_ball, eps0, resolution);
  out.inner_regions = inner.regions;
  out.outer_regions = outer.regions;

  const CellGrid grid = CellGrid::cube(outer_ball, resolution);
  const std::vector<char> active = cells_in_ball(grid, outer_ball);
  const Components comp = connected_components(grid, active, cut_edges(grid, crack, active));
  const RegionLabeling inner_regions =
      label_regions(inner_cone, inner_ball, inner.slab, resolution);

  for (int k = 1; k <= inner_regions.count(); ++k) {
    const Vec3 p = inner_regions.grid.center(inner_regions.deepest_cell(k));
    const int c = component_from_point(grid, comp, crack, p);
    int target = 0;
    for (int j = 0; j < outer.regions && c != 0; ++j)
      if (outer.crack_component[j] == c) {
        target = j + 1;
        break;
      }
    if (target == 0)
      throw OrientationError("inner region " + std::to_string(k) +
                             " meets no outer region of the crack complement");
    out.map.push_back(target);
  }
  std::vector<int> sorted = out.map;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw OrientationError("orientation map is not injective");
  return out;
}

}  // namespace conelab
