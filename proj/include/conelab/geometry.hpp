#pragma once

#include <array>
#include <optional>

#include "conelab/vec.hpp"

namespace conelab {

struct Ball {
  Vec3 center;
  double radius = 1.0;

  Ball() = default;
  Ball(const Vec3& c, double r);

  bool contains(const Vec3& p) const { return norm2(p - center) < radius * radius; }
  Ball scaled(double factor) const { return Ball(center, radius * factor); }
};

using Triangle = std::array<Vec3, 3>;

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Closest point of the closed triangle (Ericson's region test).
Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t);
double point_triangle_distance(const Vec3& p, const Triangle& t);

/// True iff the closed segment [p, q] meets the closed triangle, with an
/// absolute slack on the barycentric and segment-parameter tests.
bool segment_intersects_triangle(const Vec3& p, const Vec3& q, const Triangle& t,
                                 double slack = 1e-12);

double triangle_area(const Triangle& t);
Vec3 triangle_normal(const Triangle& t);  // unit; zero for degenerate triangles

/// Planar convex pieces a minimal cone is made of, optionally truncated to
/// the disk of radius `truncation` about the apex (infinite when <= 0).
///   Plane      : all of the plane through apex with unit normal `normal`.
///   HalfPlane  : {apex + s*edge + t*inward : t >= 0}, edge unit, inward unit.
///   Wedge      : {apex + a*ray_a + b*ray_b : a, b >= 0}, opening angle < pi.
struct Sector {
  enum class Kind { Plane, HalfPlane, Wedge };
  Kind kind = Kind::Plane;
  Vec3 apex;
  Vec3 normal;
  Vec3 ray_a;   // HalfPlane: edge direction; Wedge: first bounding ray
  Vec3 ray_b;   // HalfPlane: inward direction; Wedge: second bounding ray
  double truncation = 0.0;

  static Sector plane(const Vec3& apex, const Vec3& normal);
  static Sector half_plane(const Vec3& apex, const Vec3& edge, const Vec3& inward);
  static Sector wedge(const Vec3& apex, const Vec3& ray_a, const Vec3& ray_b);

  Sector truncated(double radius) const {
    Sector s = *this;
    s.truncation = radius;
    return s;
  }

  Vec3 closest_point(const Vec3& p) const;
  double distance(const Vec3& p) const { return dist(p, closest_point(p)); }
};

}  // namespace conelab
