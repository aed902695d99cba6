#pragma once

#include <array>
#include <string>
#include <vector>

#include "conelab/geometry.hpp"
#include "conelab/rng.hpp"
#include "conelab/vec.hpp"

namespace conelab {

/// The three minimal cone types of R^3; the numeric value is the "type" used
/// when counting complementary regions (type + 1 of them near the center).
enum class ConeType { P = 1, Y = 2, T = 3 };

std::string to_string(ConeType t);
ConeType cone_type_from_string(const std::string& s);

namespace reference {
/// Sheet directions of Prop in the (x1, x2) plane: angles 0, 120, 240 degrees.
extern const std::array<Vec3, 3> kPropRays;
/// Tetrahedron vertices A1..A4.
extern const std::array<Vec3, 4> kTetraVertices;
/// Index pairs (i, j) of the six edges [A_i, A_j].
extern const std::array<std::array<int, 2>, 6> kTetraEdges;
}  // namespace reference

/// A ray c + t*dir, t >= 0, or (full_line) the whole line through c.
struct SpineComponent {
  Vec3 origin;
  Vec3 direction;
  bool full_line = false;

  double distance(const Vec3& p) const;
  Vec3 closest_point(const Vec3& p) const;
};

/// R(Z_ref) + center with Z_ref the plane {x2 = 0}, Y0 = Prop x R, or T0.
class MinimalCone {
 public:
  MinimalCone() = default;

  ConeType type() const { return type_; }
  const Vec3& center() const { return center_; }
  const Mat3& rotation() const { return rotation_; }

  double distance(const Vec3& p) const;
  Vec3 closest_point(const Vec3& p) const;

  /// World-frame planar pieces: 1 plane, 3 half-planes, or 6 wedges.
  std::vector<Sector> sectors() const;
  /// Index into sectors() of the piece nearest to p.
  int nearest_sector(const Vec3& p) const;

  /// Empty for planes; one full line for Y; four rays for T.
  std::vector<SpineComponent> spine() const;
  /// +inf for planes.
  double spine_distance(const Vec3& p) const;

  /// Rigid motion x -> rot*x + shift applied to the cone.
  MinimalCone transformed(const Mat3& rot, const Vec3& shift) const;

  friend MinimalCone make_cone(ConeType, const Vec3&, const Mat3&);

 private:
  ConeType type_ = ConeType::P;
  Vec3 center_;
  Mat3 rotation_;
};

/// Throws std::invalid_argument unless rotation is a proper rotation with
/// |R^T R - I| <= 1e-12 entrywise.
MinimalCone make_cone(ConeType type, const Vec3& center, const Mat3& rotation);

inline double cone_distance(const MinimalCone& cone, const Vec3& p) { return cone.distance(p); }

/// Plane through `point` with unit normal `normal` as a P cone.
MinimalCone plane_cone(const Vec3& point, const Vec3& normal);

/// Points of the cone inside the ball, via projection of uniform ball samples.
std::vector<Vec3> sample_cone_points(const MinimalCone& cone, const Ball& ball, int n,
                                     CounterRng& rng);

/// {"type":"Y","center":[..3],"rotation":[..9 row-major]}
std::string to_json_text(const MinimalCone& cone);
MinimalCone cone_from_json_text(const std::string& text);

}  // namespace conelab
