#include "conelab/cone.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace conelab {

namespace reference {
const std::array<Vec3, 3> kPropRays = {Vec3{1.0, 0.0, 0.0}, Vec3{-0.5, std::sqrt(3.0) / 2.0, 0.0},
                                       Vec3{-0.5, -std::sqrt(3.0) / 2.0, 0.0}};
const std::array<Vec3, 4> kTetraVertices = {
    Vec3{1.0, 0.0, 0.0}, Vec3{-1.0 / 3.0, 2.0 * std::sqrt(2.0) / 3.0, 0.0},
    Vec3{-1.0 / 3.0, -std::sqrt(2.0) / 3.0, std::sqrt(6.0) / 3.0},
    Vec3{-1.0 / 3.0, -std::sqrt(2.0) / 3.0, -std::sqrt(6.0) / 3.0}};
const std::array<std::array<int, 2>, 6> kTetraEdges = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
}  // namespace reference

namespace {

const std::array<Sector, 6>& reference_wedges() {
  static const std::array<Sector, 6> wedges = [] {
    std::array<Sector, 6> w;
    for (int e = 0; e < 6; ++e) {
      const auto [i, j] = reference::kTetraEdges[e];
      w[e] = Sector::wedge({}, reference::kTetraVertices[i], reference::kTetraVertices[j]);
    }
    return w;
  }();
  return wedges;
}

/// Distance from the reference-frame point q to Prop x R.
double prop_distance2(const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& d : reference::kPropRays) {
    const double s = q.x * d.x + q.y * d.y;
    double d2;
    if (s > 0.0) {
      const double px = q.x - s * d.x, py = q.y - s * d.y;
      d2 = px * px + py * py;
    } else {
      d2 = q.x * q.x + q.y * q.y;
    }
    best = std::min(best, d2);
  }
  return best;
}

Vec3 prop_closest(const Vec3& q, int* which = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    const Vec3& d = reference::kPropRays[k];
    const double s = std::max(0.0, q.x * d.x + q.y * d.y);
    const Vec3 c{s * d.x, s * d.y, q.z};
    const double d2 = norm2(q - c);
    if (d2 < best) {
      best = d2;
      out = c;
      if (which) *which = k;
    }
  }
  return out;
}

Vec3 tetra_closest(const Vec3& q, int* which = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 out;
  const auto& w = reference_wedges();
  for (int k = 0; k < 6; ++k) {
    const Vec3 c = w[k].closest_point(q);
    const double d2 = norm2(q - c);
    if (d2 < best) {
      best = d2;
      out = c;
      if (which) *which = k;
    }
  }
  return out;
}

}  // namespace

std::string to_string(ConeType t) {
  switch (t) {
    case ConeType::P: return "P";
    case ConeType::Y: return "Y";
    case ConeType::T: return "T";
  }
  return "?";
}

ConeType cone_type_from_string(const std::string& s) {
  if (s == "P" || s == "1") return ConeType::P;
  if (s == "Y" || s == "2") return ConeType::Y;
  if (s == "T" || s == "3") return ConeType::T;
  throw std::invalid_argument("unknown cone type '" + s + "'");
}

double SpineComponent::distance(const Vec3& p) const { return dist(p, closest_point(p)); }

Vec3 SpineComponent::closest_point(const Vec3& p) const {
  double t = dot(p - origin, direction);
  if (!full_line) t = std::max(0.0, t);
  return origin + direction * t;
}

MinimalCone make_cone(ConeType type, const Vec3& center, const Mat3& rotation) {
  if (orthonormality_defect(rotation) > 1e-12 || rotation.determinant() <= 0.0)
    throw std::invalid_argument("make_cone: rotation is not a proper orthonormal matrix");
  MinimalCone c;
  c.type_ = type;
  c.center_ = center;
  c.rotation_ = rotation;
  return c;
}

MinimalCone plane_cone(const Vec3& point, const Vec3& normal) {
  const Vec3 n = normalized(normal);
  const Vec3 u = any_orthogonal(n);
  const Vec3 w = cross(u, n);
  // columns map e1 -> u, e2 -> n, e3 -> w; det = u . (n x w) = 1
  return make_cone(ConeType::P, point, Mat3::from_columns(u, n, w));
}

double MinimalCone::distance(const Vec3& p) const {
  const Vec3 q = rotation_.transpose_times(p - center_);
  switch (type_) {
    case ConeType::P: return std::abs(q.y);
    case ConeType::Y: return std::sqrt(prop_distance2(q));
    case ConeType::T: return dist(q, tetra_closest(q));
  }
  return 0.0;
}

Vec3 MinimalCone::closest_point(const Vec3& p) const {
  const Vec3 q = rotation_.transpose_times(p - center_);
  Vec3 c;
  switch (type_) {
    case ConeType::P: c = {q.x, 0.0, q.z}; break;
    case ConeType::Y: c = prop_closest(q); break;
    case ConeType::T: c = tetra_closest(q); break;
  }
  return center_ + rotation_ * c;
}

std::vector<Sector> MinimalCone::sectors() const {
  std::vector<Sector> out;
  switch (type_) {
    case ConeType::P:
      out.push_back(Sector::plane(center_, rotation_.column(1)));
      break;
    case ConeType::Y:
      for (const Vec3& d : reference::kPropRays)
        out.push_back(Sector::half_plane(center_, rotation_.column(2), rotation_ * d));
      break;
    case ConeType::T:
      for (const auto& [i, j] : reference::kTetraEdges)
        out.push_back(Sector::wedge(center_, rotation_ * reference::kTetraVertices[i],
                                    rotation_ * reference::kTetraVertices[j]));
      break;
  }
  return out;
}

int MinimalCone::nearest_sector(const Vec3& p) const {
  const Vec3 q = rotation_.transpose_times(p - center_);
  int which = 0;
  switch (type_) {
    case ConeType::P: break;
    case ConeType::Y: prop_closest(q, &which); break;
    case ConeType::T: tetra_closest(q, &which); break;
  }
  return which;
}

std::vector<SpineComponent> MinimalCone::spine() const {
  std::vector<SpineComponent> out;
  if (type_ == ConeType::Y) {
    out.push_back({center_, rotation_.column(2), true});
  } else if (type_ == ConeType::T) {
    for (const Vec3& a : reference::kTetraVertices) out.push_back({center_, rotation_ * a, false});
  }
  return out;
}

double MinimalCone::spine_distance(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : spine()) best = std::min(best, s.distance(p));
  return best;
}

MinimalCone MinimalCone::transformed(const Mat3& rot, const Vec3& shift) const {
  return make_cone(type_, rot * center_ + shift, orthonormalize(rot * rotation_));
}

std::vector<Vec3> sample_cone_points(const MinimalCone& cone, const Ball& ball, int n,
                                     CounterRng& rng) {
  std::vector<Vec3> out;
  out.reserve(n);
  int guard = 0;
  while (static_cast<int>(out.size()) < n && guard < 1000 * n + 1000) {
    ++guard;
    const Vec3 p = cone.closest_point(rng.in_ball(ball.center, ball.radius));
    if (ball.contains(p)) out.push_back(p);
  }
  return out;
}

std::string to_json_text(const MinimalCone& cone) {
  nlohmann::json j;
  j["type"] = to_string(cone.type());
  j["center"] = {cone.center().x, cone.center().y, cone.center().z};
  j["rotation"] = cone.rotation().a;
  return j.dump();
}

MinimalCone cone_from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto c = j.at("center").get<std::array<double, 3>>();
  const auto r = j.at("rotation").get<std::array<double, 9>>();
  return make_cone(cone_type_from_string(j.at("type").get<std::string>()), {c[0], c[1], c[2]},
                   Mat3::from_rows(r));
}

}  // namespace conelab
