#include <cmath>
#include <limits>

#include "conelab/regions.hpp"

namespace conelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double min_distance(const std::vector<Sector>& pieces, const Vec3& p) {
  double d = kInf;
  for (const Sector& s : pieces) d = std::min(d, s.distance(p));
  return d;
}

/// Plane through the sheet of `cone` nearest to p, centered at p, together
/// with the distance from p to where the plane and the cone differ.
std::pair<MinimalCone, double> sheet_plane(const MinimalCone& cone, const Vec3& p) {
  const auto sectors = cone.sectors();
  const int s = cone.nearest_sector(p);
  std::vector<Sector> others;
  for (int i = 0; i < static_cast<int>(sectors.size()); ++i)
    if (i != s) others.push_back(sectors[i]);
  double reach = min_distance(others, p);
  const Sector& sheet = sectors[s];
  if (sheet.kind == Sector::Kind::HalfPlane) {
    // the missing half of the plane begins at the edge line
    reach = std::min(reach, SpineComponent{sheet.apex, sheet.ray_a, true}.distance(p));
  } else if (sheet.kind == Sector::Kind::Wedge) {
    reach = std::min(reach, SpineComponent{sheet.apex, sheet.ray_a, false}.distance(p));
    reach = std::min(reach, SpineComponent{sheet.apex, sheet.ray_b, false}.distance(p));
  }
  return {plane_cone(p, sheet.normal), reach};
}

/// Y cone along the full line through T ray j, and the distance from p to
/// where it differs from the T cone.
std::pair<MinimalCone, double> ray_y(const MinimalCone& T, int j, const Vec3& p) {
  const Mat3& R = T.rotation();
  const Vec3 c = T.center();
  const Vec3 aj = R * reference::kTetraVertices[j];
  std::vector<Sector> diff;
  Vec3 first_inward;
  bool have_first = false;
  for (const auto& [a, b] : reference::kTetraEdges) {
    const Vec3 va = R * reference::kTetraVertices[a];
    const Vec3 vb = R * reference::kTetraVertices[b];
    if (a != j && b != j) {
      diff.push_back(Sector::wedge(c, va, vb));  // wedge absent from the Y
      continue;
    }
    const Vec3 ak = a == j ? vb : va;
    diff.push_back(Sector::wedge(c, ak, -aj));  // half-plane extension beyond A_k
    if (!have_first) {
      first_inward = normalized(ak - aj * dot(ak, aj));
      have_first = true;
    }
  }
  const SpineComponent line{c, aj, true};
  const Vec3 center = line.closest_point(p);
  const Mat3 rot = orthonormalize(Mat3::from_columns(first_inward, cross(aj, first_inward), aj));
  return {make_cone(ConeType::Y, center, rot), min_distance(diff, p)};
}

}  // namespace

Recentered recenter(const MinimalCone& cone, const Vec3& origin, double r0, double V) {
  if (!(r0 > 0.0) || !(V >= 1.0)) throw std::invalid_argument("recenter: need r0 > 0 and V >= 1");
  if (cone.distance(origin) > 1e-9 * r0) throw std::invalid_argument("recenter: origin not on cone");

  const auto [plane, plane_reach] = sheet_plane(cone, origin);
  for (double r1 : {r0, V * r0, V * V * r0}) {
    const double inner = r1 / V;
    switch (cone.type()) {
      case ConeType::P:
        return {r1, plane};
      case ConeType::Y: {
        if (plane_reach >= r1) return {r1, plane};
        const SpineComponent line = cone.spine()[0];
        if (line.distance(origin) < inner) {
          const Vec3 c = line.closest_point(origin);
          return {r1, make_cone(ConeType::Y, c, cone.rotation())};
        }
        break;
      }
      case ConeType::T: {
        if (plane_reach >= r1) return {r1, plane};
        int best = -1;
        double best_line = kInf;
        MinimalCone best_cone;
        for (int j = 0; j < 4; ++j) {
          const auto [y, reach] = ray_y(cone, j, origin);
          const double dl = dist(y.center(), origin);
          if (reach >= r1 && dl < inner && dl < best_line) {
            best = j;
            best_line = dl;
            best_cone = y;
          }
        }
        if (best >= 0) return {r1, best_cone};
        if (dist(cone.center(), origin) < inner) return {r1, cone};
        break;
      }
    }
  }
  throw std::domain_error("recenter: no admissible cone at r0, V r0 or V^2 r0");
}

}  // namespace conelab
