#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace conelab {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  constexpr Vec3& operator/=(double s) { x /= s; y /= s; z /= s; return *this; }
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a /= s; }
constexpr bool operator==(const Vec3& a, const Vec3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double norm2(const Vec3& a) { return dot(a, a); }
inline double dist(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

/// Lexicographic order, used wherever a deterministic tie-break is needed.
constexpr bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

/// Any unit vector orthogonal to n (n need not be unit).
inline Vec3 any_orthogonal(const Vec3& n) {
  const Vec3 ref = std::abs(n.x) < 0.6 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  return normalized(cross(n, ref));
}

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
  return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> a{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }
  static Mat3 from_rows(const std::array<double, 9>& v) { Mat3 m; m.a = v; return m; }
  static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    return from_rows({c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z});
  }

  double operator()(int r, int c) const { return a[3 * r + c]; }
  double& operator()(int r, int c) { return a[3 * r + c]; }

  Vec3 column(int c) const { return {a[c], a[3 + c], a[6 + c]}; }

  Vec3 operator*(const Vec3& v) const {
    return {a[0] * v.x + a[1] * v.y + a[2] * v.z,
            a[3] * v.x + a[4] * v.y + a[5] * v.z,
            a[6] * v.x + a[7] * v.y + a[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(r, k) * o(k, c);
        m(r, c) = s;
      }
    return m;
  }
  Mat3 transposed() const {
    return from_rows({a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]});
  }
  /// R^T v without forming the transpose.
  Vec3 transpose_times(const Vec3& v) const {
    return {a[0] * v.x + a[3] * v.y + a[6] * v.z,
            a[1] * v.x + a[4] * v.y + a[7] * v.z,
            a[2] * v.x + a[5] * v.y + a[8] * v.z};
  }
  double determinant() const {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  }
};

/// max |R^T R - I| entry.
inline double orthonormality_defect(const Mat3& r) {
  const Mat3 g = r.transposed() * r;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

/// Rodrigues formula: rotation by |w| radians about w.
inline Mat3 rotation_from_vector(const Vec3& w) {
  const double th = norm(w);
  if (th < 1e-300) return Mat3::identity();
  const Vec3 k = w / th;
  const double c = std::cos(th), s = std::sin(th), t = 1.0 - c;
  return Mat3::from_rows({t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y,
                          t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x,
                          t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c});
}

/// Re-orthonormalize via Gram-Schmidt on the columns.
inline Mat3 orthonormalize(const Mat3& m) {
  Vec3 c0 = normalized(m.column(0));
  Vec3 c1 = m.column(1) - c0 * dot(c0, m.column(1));
  c1 = normalized(c1);
  const Vec3 c2 = cross(c0, c1);
  return Mat3::from_columns(c0, c1, c2);
}

}  // namespace conelab
