#include "conelab/crack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace conelab {

// ----------------------------------------------------------------- BoxHash

std::size_t BoxHash::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = static_cast<std::uint64_t>(k.i) * 73856093ULL;
  h ^= static_cast<std::uint64_t>(k.j) * 19349663ULL;
  h ^= static_cast<std::uint64_t>(k.k) * 83492791ULL;
  return static_cast<std::size_t>(mix64(h));
}

BoxHash::Key BoxHash::key(const Vec3& p) const {
  return {static_cast<long long>(std::floor(p.x / cell_)),
          static_cast<long long>(std::floor(p.y / cell_)),
          static_cast<long long>(std::floor(p.z / cell_))};
}

void BoxHash::insert(int id, const Vec3& lo, const Vec3& hi) {
  const Key a = key(lo), b = key(hi);
  for (long long i = a.i; i <= b.i; ++i)
    for (long long j = a.j; j <= b.j; ++j)
      for (long long k = a.k; k <= b.k; ++k) cells_[{i, j, k}].push_back(id);
}

void BoxHash::query(const Vec3& lo, const Vec3& hi, std::vector<int>& out) const {
  const Key a = key(lo), b = key(hi);
  const long long span = (b.i - a.i + 1) * (b.j - a.j + 1) * (b.k - a.k + 1);
  if (span > static_cast<long long>(cells_.size()) * 4) {
    // box larger than the occupied region: scan occupied cells instead
    for (const auto& [k, ids] : cells_)
      if (k.i >= a.i && k.i <= b.i && k.j >= a.j && k.j <= b.j && k.k >= a.k && k.k <= b.k)
        out.insert(out.end(), ids.begin(), ids.end());
    return;
  }
  for (long long i = a.i; i <= b.i; ++i)
    for (long long j = a.j; j <= b.j; ++j)
      for (long long k = a.k; k <= b.k; ++k) {
        auto it = cells_.find({i, j, k});
        if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
      }
}

// ---------------------------------------------------------------- CrackSet

namespace {

void tri_box(const Triangle& t, Vec3& lo, Vec3& hi) {
  lo = hi = t[0];
  for (int v = 1; v < 3; ++v)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], t[v][a]);
      hi[a] = std::max(hi[a], t[v][a]);
    }
}

}  // namespace

CrackSet::CrackSet(std::vector<Triangle> triangles, double h) : triangles_(std::move(triangles)), h_(h) {
  if (!(h > 0.0)) throw std::invalid_argument("CrackSet: sample spacing must be positive");
  if (triangles_.empty()) {
    build_indices();
    return;
  }
  Vec3 lo = triangles_[0][0], hi = lo;
  for (const auto& t : triangles_) {
    Vec3 a, b;
    tri_box(t, a, b);
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], a[k]);
      hi[k] = std::max(hi[k], b[k]);
    }
  }
  extent_ = Ball((lo + hi) * 0.5, std::max(0.5 * dist(lo, hi), 1e-12));

  // Barycentric lattice samples; exact duplicates on shared edges removed by
  // quantized key.
  const double q = 1e-9 * extent_.radius;
  std::unordered_set<std::uint64_t> seen;
  auto key_of = [&](const Vec3& p) {
    std::uint64_t k = 0;
    for (int a = 0; a < 3; ++a)
      k = mix64(k ^ static_cast<std::uint64_t>(std::llround((p[a] - lo[a]) / q)));
    return k;
  };
  for (const auto& t : triangles_) {
    const double longest =
        std::max({dist(t[0], t[1]), dist(t[1], t[2]), dist(t[2], t[0])});
    const int n = std::max(1, static_cast<int>(std::ceil(longest / h - 1e-9)));
    for (int i = 0; i <= n; ++i)
      for (int j = 0; i + j <= n; ++j) {
        const double a = static_cast<double>(i) / n, b = static_cast<double>(j) / n;
        const Vec3 p = t[0] + (t[1] - t[0]) * a + (t[2] - t[0]) * b;
        if (seen.insert(key_of(p)).second) samples_.push_back(p);
      }
  }
  build_indices();
}

void CrackSet::build_indices() {
  double mean_edge = 0.0;
  for (const auto& t : triangles_) mean_edge += dist(t[0], t[1]) + dist(t[1], t[2]) + dist(t[2], t[0]);
  mean_edge = triangles_.empty() ? 1.0 : mean_edge / (3.0 * triangles_.size());
  tri_index_ = BoxHash(std::max(2.0 * mean_edge, 1e-9));
  for (int i = 0; i < static_cast<int>(triangles_.size()); ++i) {
    Vec3 lo, hi;
    tri_box(triangles_[i], lo, hi);
    tri_index_.insert(i, lo, hi);
  }
  sample_index_ = BoxHash(std::max(4.0 * h_, 1e-9));
  for (int i = 0; i < static_cast<int>(samples_.size()); ++i)
    sample_index_.insert(i, samples_[i], samples_[i]);
}

std::vector<int> CrackSet::samples_in_ball(const Ball& ball) const {
  std::vector<int> cand, out;
  const Vec3 r{ball.radius, ball.radius, ball.radius};
  sample_index_.query(ball.center - r, ball.center + r, cand);
  for (int i : cand)
    if (ball.contains(samples_[i])) out.push_back(i);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool CrackSet::any_sample_in_ball(const Ball& ball) const {
  std::vector<int> cand;
  const Vec3 r{ball.radius, ball.radius, ball.radius};
  sample_index_.query(ball.center - r, ball.center + r, cand);
  for (int i : cand)
    if (ball.contains(samples_[i])) return true;
  return false;
}

std::vector<int> CrackSet::triangles_near(const Vec3& lo, const Vec3& hi) const {
  std::vector<int> cand;
  tri_index_.query(lo, hi, cand);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::vector<int> out;
  for (int i : cand) {
    Vec3 a, b;
    tri_box(triangles_[i], a, b);
    if (a.x <= hi.x && b.x >= lo.x && a.y <= hi.y && b.y >= lo.y && a.z <= hi.z && b.z >= lo.z)
      out.push_back(i);
  }
  return out;
}

double CrackSet::distance_capped(const Vec3& p, double cap) const {
  if (triangles_.empty()) return std::numeric_limits<double>::infinity();
  double radius = tri_index_.cell();
  const double far = dist(p, extent_.center) + extent_.radius;
  std::vector<int> cand;
  for (;;) {
    const double reach = std::min(radius, cap);
    cand.clear();
    const Vec3 r{reach, reach, reach};
    tri_index_.query(p - r, p + r, cand);
    double best = std::numeric_limits<double>::infinity();
    for (int i : cand) best = std::min(best, point_triangle_distance(p, triangles_[i]));
    if (best <= reach) return best;
    if (reach >= cap) return cap;
    if (radius > far) {
      for (const auto& t : triangles_) best = std::min(best, point_triangle_distance(p, t));
      return best;
    }
    radius *= 2.0;
  }
}

double CrackSet::distance(const Vec3& p) const {
  return distance_capped(p, std::numeric_limits<double>::infinity());
}

bool CrackSet::segment_crosses(const Vec3& p, const Vec3& q, double slack) const {
  Vec3 lo{std::min(p.x, q.x), std::min(p.y, q.y), std::min(p.z, q.z)};
  Vec3 hi{std::max(p.x, q.x), std::max(p.y, q.y), std::max(p.z, q.z)};
  std::vector<int> cand;
  tri_index_.query(lo, hi, cand);
  for (int i : cand)
    if (segment_intersects_triangle(p, q, triangles_[i], slack)) return true;
  return false;
}

CrackSet CrackSet::without_balls(std::span<const Ball> balls) const {
  auto inside_any = [&](const Vec3& p) {
    for (const Ball& b : balls)
      if (b.contains(p)) return true;
    return false;
  };
  CrackSet out;
  out.h_ = h_;
  out.extent_ = extent_;
  for (const auto& t : triangles_)
    if (!(inside_any(t[0]) && inside_any(t[1]) && inside_any(t[2]))) out.triangles_.push_back(t);
  for (const auto& s : samples_)
    if (!inside_any(s)) out.samples_.push_back(s);
  out.build_indices();
  return out;
}

// ---------------------------------------------------------------- builders

namespace {

/// Lattice mesh of {origin + a*u*s + b*v*s} for integer a in [a0,a1], b in [b0,b1],
/// keeping triangles within `reach` of `keep_center`.
void lattice_mesh(const Vec3& origin, const Vec3& u, const Vec3& v, double s, long a0, long a1,
                  long b0, long b1, const Vec3& keep_center, double reach,
                  std::vector<Triangle>& out) {
  auto pt = [&](long a, long b) {
    return origin + u * (static_cast<double>(a) * s) + v * (static_cast<double>(b) * s);
  };
  for (long a = a0; a < a1; ++a)
    for (long b = b0; b < b1; ++b) {
      const Vec3 p00 = pt(a, b), p10 = pt(a + 1, b), p01 = pt(a, b + 1), p11 = pt(a + 1, b + 1);
      const Triangle t1{p00, p10, p11};
      const Triangle t2{p00, p11, p01};
      if (point_triangle_distance(keep_center, t1) <= reach) out.push_back(t1);
      if (point_triangle_distance(keep_center, t2) <= reach) out.push_back(t2);
    }
}

}  // namespace

std::vector<Triangle> mesh_cone(const MinimalCone& cone, const Ball& ball, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("mesh_cone: spacing must be positive");
  std::vector<Triangle> out;
  const double reach = ball.radius + spacing;
  const double s = spacing;
  for (const Sector& sec : cone.sectors()) {
    const Vec3 rel = ball.center - sec.apex;
    switch (sec.kind) {
      case Sector::Kind::Plane: {
        const Vec3 u = any_orthogonal(sec.normal);
        const Vec3 v = cross(sec.normal, u);
        const Vec3 origin = sec.apex + u * dot(rel, u) + v * dot(rel, v);
        const long m = static_cast<long>(std::ceil(reach / s)) + 1;
        lattice_mesh(origin, u, v, s, -m, m, -m, m, ball.center, reach, out);
        break;
      }
      case Sector::Kind::HalfPlane: {
        // origin on the edge line, shared by all sheets with the same edge
        const Vec3 origin = sec.apex + sec.ray_a * dot(rel, sec.ray_a);
        const long m = static_cast<long>(std::ceil(reach / s)) + 1;
        const double off = dot(rel, sec.ray_b);
        const long b0 = std::max(0L, static_cast<long>(std::floor((off - reach) / s)) - 1);
        const long b1 = std::max(0L, static_cast<long>(std::ceil((off + reach) / s)) + 1);
        if (b1 > b0) lattice_mesh(origin, sec.ray_a, sec.ray_b, s, -m, m, b0, b1, ball.center, reach, out);
        break;
      }
      case Sector::Kind::Wedge: {
        const double c = dot(sec.ray_a, sec.ray_b);
        const double wa = dot(rel, sec.ray_a), wb = dot(rel, sec.ray_b);
        const double alpha = (wa - c * wb) / (1.0 - c * c);
        const double beta = (wb - c * wa) / (1.0 - c * c);
        const double spread = reach / std::sqrt(1.0 - std::abs(c)) + s;
        const long a0 = std::max(0L, static_cast<long>(std::floor((alpha - spread) / s)));
        const long a1 = std::max(0L, static_cast<long>(std::ceil((alpha + spread) / s)));
        const long b0 = std::max(0L, static_cast<long>(std::floor((beta - spread) / s)));
        const long b1 = std::max(0L, static_cast<long>(std::ceil((beta + spread) / s)));
        if (a1 > a0 && b1 > b0)
          lattice_mesh(sec.apex, sec.ray_a, sec.ray_b, s, a0, a1, b0, b1, ball.center, reach, out);
        break;
      }
    }
  }
  return out;
}

std::vector<Triangle> punch_hole(std::vector<Triangle> tris, const Ball& hole) {
  std::erase_if(tris, [&](const Triangle& t) { return hole.contains((t[0] + t[1] + t[2]) / 3.0); });
  return tris;
}

std::vector<Triangle> displace(std::vector<Triangle> tris, const DisplacementField& g) {
  for (auto& t : tris)
    for (auto& v : t) v = v + g(v);
  return tris;
}

double bump(double t) {
  if (t >= 1.0) return 0.0;
  const double a = 1.0 - t * t;
  return a * a * a;
}

Vec3 Wrinkle::operator()(const Vec3& x) const {
  const Vec3 d = x - center;
  const double b = bump(norm(d) / support);
  if (b == 0.0) return {};
  return direction * (amplitude * b * std::cos(wavenumber * dot(d, phase_axis)));
}

std::vector<Triangle> extrude_segments(const std::vector<std::array<Vec3, 2>>& segments,
                                       double half_height, double spacing) {
  std::vector<Triangle> out;
  const Vec3 up{0, 0, 1};
  const int nz = std::max(1, static_cast<int>(std::ceil(half_height / spacing)));
  for (const auto& seg : segments) {
    const double len = dist(seg[0], seg[1]);
    const int ns = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int i = 0; i < ns; ++i) {
      const Vec3 a = seg[0] + (seg[1] - seg[0]) * (static_cast<double>(i) / ns);
      const Vec3 b = seg[0] + (seg[1] - seg[0]) * (static_cast<double>(i + 1) / ns);
      for (int k = -nz; k < nz; ++k) {
        const double z0 = half_height * k / nz, z1 = half_height * (k + 1) / nz;
        const Vec3 a0 = a + up * z0, b0 = b + up * z0, a1 = a + up * z1, b1 = b + up * z1;
        out.push_back({a0, b0, b1});
        out.push_back({a0, b1, a1});
      }
    }
  }
  return out;
}

std::vector<Triangle> sphere_triangles(const Vec3& center, double radius, int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p = normalized(p);
  std::vector<Triangle> tris;
  const int f[20][3] = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (const auto& face : f) tris.push_back({v[face[0]], v[face[1]], v[face[2]]});
  for (int l = 0; l < level; ++l) {
    std::vector<Triangle> next;
    next.reserve(tris.size() * 4);
    for (const auto& tr : tris) {
      const Vec3 ab = normalized(tr[0] + tr[1]), bc = normalized(tr[1] + tr[2]),
                 ca = normalized(tr[2] + tr[0]);
      next.push_back({tr[0], ab, ca});
      next.push_back({ab, tr[1], bc});
      next.push_back({ca, bc, tr[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  for (auto& tr : tris)
    for (auto& p : tr) p = center + p * radius;
  return tris;
}

std::vector<Triangle> read_triangle_soup(std::istream& in) {
  std::vector<Triangle> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Triangle t;
    for (auto& v : t)
      if (!(ls >> v.x >> v.y >> v.z))
        throw std::runtime_error("triangle soup line " + std::to_string(lineno) +
                                 ": expected nine numbers");
    out.push_back(t);
  }
  return out;
}

std::vector<Triangle> read_triangle_soup_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triangle soup '" + path + "'");
  return read_triangle_soup(in);
}

void write_triangle_soup(std::ostream& out, const std::vector<Triangle>& tris) {
  out.precision(17);
  for (const auto& t : tris)
    out << t[0].x << ' ' << t[0].y << ' ' << t[0].z << ' ' << t[1].x << ' ' << t[1].y << ' '
        << t[1].z << ' ' << t[2].x << ' ' << t[2].y << ' ' << t[2].z << '\n';
}

}  // namespace conelab
