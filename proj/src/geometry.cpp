#include "conelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conelab {

Ball::Ball(const Vec3& c, double r) : center(c), radius(r) {
  if (!(r > 0.0)) throw std::invalid_argument("Ball: radius must be positive");
}

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = norm2(ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  return dist(p, closest_point_on_segment(p, a, b));
}

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t) {
  const Vec3& a = t[0];
  const Vec3& b = t[1];
  const Vec3& c = t[2];
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double point_triangle_distance(const Vec3& p, const Triangle& t) {
  return dist(p, closest_point_on_triangle(p, t));
}

bool segment_intersects_triangle(const Vec3& p, const Vec3& q, const Triangle& t, double slack) {
  const Vec3 e1 = t[1] - t[0];
  const Vec3 e2 = t[2] - t[0];
  const Vec3 d = q - p;
  const Vec3 h = cross(d, e2);
  const double a = dot(e1, h);
  const double scale = norm(d) * norm(e1) * norm(e2);
  if (std::abs(a) <= 1e-14 * scale) return false;  // parallel
  const double f = 1.0 / a;
  const Vec3 s = p - t[0];
  const double u = f * dot(s, h);
  if (u < -slack || u > 1.0 + slack) return false;
  const Vec3 qv = cross(s, e1);
  const double v = f * dot(d, qv);
  if (v < -slack || u + v > 1.0 + slack) return false;
  const double tt = f * dot(e2, qv);
  return tt >= -slack && tt <= 1.0 + slack;
}

double triangle_area(const Triangle& t) { return 0.5 * norm(cross(t[1] - t[0], t[2] - t[0])); }

Vec3 triangle_normal(const Triangle& t) {
  const Vec3 n = cross(t[1] - t[0], t[2] - t[0]);
  const double len = norm(n);
  return len > 0.0 ? n / len : Vec3{};
}

Sector Sector::plane(const Vec3& apex, const Vec3& normal) {
  Sector s;
  s.kind = Kind::Plane;
  s.apex = apex;
  s.normal = normalized(normal);
  return s;
}

Sector Sector::half_plane(const Vec3& apex, const Vec3& edge, const Vec3& inward) {
  Sector s;
  s.kind = Kind::HalfPlane;
  s.apex = apex;
  s.ray_a = normalized(edge);
  s.ray_b = normalized(inward);
  s.normal = cross(s.ray_a, s.ray_b);
  return s;
}

Sector Sector::wedge(const Vec3& apex, const Vec3& ray_a, const Vec3& ray_b) {
  Sector s;
  s.kind = Kind::Wedge;
  s.apex = apex;
  s.ray_a = normalized(ray_a);
  s.ray_b = normalized(ray_b);
  s.normal = normalized(cross(s.ray_a, s.ray_b));
  return s;
}

namespace {

/// Nearest point to w (in-plane, apex-relative) on the ray/segment t*dir,
/// t in [0, limit] (limit <= 0 means unbounded).
Vec3 clamp_to_ray(const Vec3& w, const Vec3& dir, double limit) {
  double t = std::max(0.0, dot(w, dir));
  if (limit > 0.0) t = std::min(t, limit);
  return dir * t;
}

}  // namespace

Vec3 Sector::closest_point(const Vec3& p) const {
  const Vec3 v = p - apex;
  const Vec3 w = v - normal * dot(v, normal);  // in-plane component
  const double R = truncation;
  Vec3 q;
  switch (kind) {
    case Kind::Plane: {
      q = w;
      if (R > 0.0) {
        const double len = norm(w);
        if (len > R) q = w * (R / len);
      }
      break;
    }
    case Kind::HalfPlane: {
      const double s = dot(w, ray_a);
      const double t = dot(w, ray_b);
      if (R <= 0.0) {
        q = ray_a * s + ray_b * std::max(0.0, t);
      } else if (t >= 0.0 && s * s + t * t <= R * R) {
        q = w;
      } else {
        const Vec3 on_diameter = ray_a * std::clamp(s, -R, R);
        q = on_diameter;
        if (t > 0.0) {
          const Vec3 on_arc = w * (R / norm(w));
          if (norm2(w - on_arc) < norm2(w - on_diameter)) q = on_arc;
        }
      }
      break;
    }
    case Kind::Wedge: {
      const double c = dot(ray_a, ray_b);
      const double wa = dot(w, ray_a), wb = dot(w, ray_b);
      const double det = 1.0 - c * c;
      const double alpha = (wa - c * wb) / det;
      const double beta = (wb - c * wa) / det;
      if (alpha >= 0.0 && beta >= 0.0) {
        q = w;
        if (R > 0.0) {
          const double len = norm(w);
          if (len > R) q = w * (R / len);
        }
      } else {
        const Vec3 qa = clamp_to_ray(w, ray_a, R);
        const Vec3 qb = clamp_to_ray(w, ray_b, R);
        q = norm2(w - qa) <= norm2(w - qb) ? qa : qb;
      }
      break;
    }
  }
  return apex + q;
}

}  // namespace conelab
