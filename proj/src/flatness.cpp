#include "conelab/flatness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "conelab/optimize.hpp"
#include "conelab/regions.hpp"

namespace conelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat3 quaternion_rotation(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  return Mat3::from_rows({1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
                          2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
                          2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)});
}

/// Uniform rotation from three numbers in [0,1) (Shoemake).
Mat3 rotation_from_unit_cube(double u1, double u2, double u3) {
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double t2 = 2 * std::numbers::pi * u2, t3 = 2 * std::numbers::pi * u3;
  return quaternion_rotation(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
}

Vec3 sphere_point(double u, double v) {
  const double z = 1 - 2 * u, s = std::sqrt(std::max(0.0, 1 - z * z));
  return {s * std::cos(2 * std::numbers::pi * v), s * std::sin(2 * std::numbers::pi * v), z};
}

/// Frame whose first two columns are a and the part of b orthogonal to a.
Mat3 frame(const Vec3& a, const Vec3& b) {
  const Vec3 e0 = normalized(a);
  const Vec3 e1 = normalized(b - e0 * dot(e0, b));
  return Mat3::from_columns(e0, e1, cross(e0, e1));
}

double max_distance(const MinimalCone& c, const std::vector<Vec3>& pts) {
  double m = 0.0;
  for (const Vec3& p : pts) m = std::max(m, c.distance(p));
  return m;
}

struct Start {
  ConeType type;
  Mat3 rot;     // P: column 1 is the normal
  Vec3 center;  // T only
  double t = 0; // Y: distance of x from the spine, in units of r
};

/// A posed cone family through x with a local parameterization around a start.
class Family {
 public:
  Family(const Start& s, const Vec3& x, double r) : s_(s), x_(x), r_(r) {}

  int dims() const { return s_.type == ConeType::P ? 2 : (s_.type == ConeType::Y ? 4 : 6); }
  std::vector<double> origin() const {
    std::vector<double> p(dims(), 0.0);
    if (s_.type == ConeType::Y) p[3] = s_.t;
    return p;
  }
  std::vector<double> steps() const {
    switch (s_.type) {
      case ConeType::P: return {0.05, 0.05};
      case ConeType::Y: return {0.1, 0.1, 0.1, 0.1};
      case ConeType::T: return {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    }
    return {};
  }

  MinimalCone cone(const std::vector<double>& p) const {
    switch (s_.type) {
      case ConeType::P: {
        const Vec3 n0 = s_.rot.column(1), u = s_.rot.column(0), v = s_.rot.column(2);
        return plane_cone(x_, n0 + u * p[0] + v * p[1]);
      }
      case ConeType::Y: {
        const Mat3 R = orthonormalize(s_.rot * rotation_from_vector({p[0], p[1], p[2]}));
        return make_cone(ConeType::Y, x_ - R.column(0) * (std::abs(p[3]) * r_), R);
      }
      case ConeType::T: {
        const Mat3 R = orthonormalize(s_.rot * rotation_from_vector({p[0], p[1], p[2]}));
        const auto trial = make_cone(ConeType::T, s_.center + Vec3{p[3], p[4], p[5]} * r_, R);
        return make_cone(ConeType::T, trial.center() + x_ - trial.closest_point(x_), R);
      }
    }
    return {};
  }

 private:
  Start s_;
  Vec3 x_;
  double r_;
};

struct Cluster {
  Vec3 normal_sum;
  Vec3 centroid_sum;
  double area = 0.0;
  Vec3 normal() const { return normalized(normal_sum); }
  Vec3 centroid() const { return centroid_sum / area; }
};

std::vector<Cluster> normal_clusters(const CrackSet& crack, const Vec3& x, double r) {
  const Vec3 span{r, r, r};
  std::vector<Cluster> cl;
  const double cos_tol = std::cos(10.0 * std::numbers::pi / 180.0);
  for (int id : crack.triangles_near(x - span, x + span)) {
    const Triangle& t = crack.triangles()[id];
    if (point_triangle_distance(x, t) >= r) continue;
    const double a = triangle_area(t);
    if (a <= 0.0) continue;
    const Vec3 n = triangle_normal(t);
    const Vec3 c = (t[0] + t[1] + t[2]) / 3.0;
    bool placed = false;
    for (auto& k : cl) {
      const double d = dot(n, k.normal());
      if (std::abs(d) >= cos_tol) {
        k.normal_sum += (d >= 0 ? n : -n) * a;
        k.centroid_sum += c * a;
        k.area += a;
        placed = true;
        break;
      }
    }
    if (!placed) cl.push_back({n * a, c * a, a});
  }
  std::stable_sort(cl.begin(), cl.end(), [](const Cluster& a, const Cluster& b) { return a.area > b.area; });
  double total = 0.0;
  for (const auto& k : cl) total += k.area;
  std::erase_if(cl, [&](const Cluster& k) { return k.area < 0.02 * total; });
  if (cl.size() > 6) cl.resize(6);
  return cl;
}

std::vector<Start> data_starts(const CrackSet& crack, const std::vector<Vec3>& pts, const Vec3& x,
                               double r, const BetaOptions& opt) {
  std::vector<Start> out;
  const auto cl = normal_clusters(crack, x, r);

  if (opt.planes) {
    if (pts.size() >= 3) {
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      Vec3 mean;
      for (const Vec3& p : pts) mean += p / static_cast<double>(pts.size());
      for (const Vec3& p : pts) {
        const Eigen::Vector3d d(p.x - mean.x, p.y - mean.y, p.z - mean.z);
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
      const auto v = es.eigenvectors().col(0);
      const auto pc = plane_cone(x, {v(0), v(1), v(2)});
      out.push_back({ConeType::P, pc.rotation(), x, 0});
    }
    for (std::size_t i = 0; i < std::min<std::size_t>(cl.size(), 3); ++i)
      out.push_back({ConeType::P, plane_cone(x, cl[i].normal()).rotation(), x, 0});
  }

  // Lines where pairs of fitted sheet planes meet.
  struct Line {
    Vec3 point, dir;
    std::size_t i, j;
  };
  std::vector<Line> lines;
  for (std::size_t i = 0; i < cl.size(); ++i)
    for (std::size_t j = i + 1; j < cl.size(); ++j) {
      const Vec3 ni = cl[i].normal(), nj = cl[j].normal();
      const Vec3 e = cross(ni, nj);
      if (norm(e) < std::sin(20.0 * std::numbers::pi / 180.0)) continue;
      const Vec3 d = normalized(e);
      // point on both planes closest to x
      Eigen::Matrix3d A;
      A << ni.x, ni.y, ni.z, nj.x, nj.y, nj.z, d.x, d.y, d.z;
      const Eigen::Vector3d b(dot(ni, cl[i].centroid()), dot(nj, cl[j].centroid()), dot(d, x));
      const Eigen::Vector3d p = A.colPivHouseholderQr().solve(b);
      lines.push_back({{p(0), p(1), p(2)}, d, i, j});
    }

  if (opt.ys) {
    for (const Line& L : lines) {
      Vec3 off = x - L.point;
      off -= L.dir * dot(off, L.dir);
      const double t = norm(off) / r;
      Vec3 d;
      if (t > 1e-9) {
        d = normalized(off);
      } else {
        Vec3 w = cl[L.i].centroid() - L.point;
        w -= L.dir * dot(w, L.dir);
        if (norm(w) < 1e-12) continue;
        d = normalized(w);
      }
      out.push_back({ConeType::Y, Mat3::from_columns(d, cross(L.dir, d), L.dir), x, t});
    }
  }

  if (opt.ts && cl.size() >= 3) {
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (const auto& k : cl) {
      const Vec3 n = k.normal();
      const Eigen::Vector3d ne(n.x, n.y, n.z);
      M += ne * ne.transpose();
      rhs += ne * dot(n, k.centroid());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
    if (es.eigenvalues()(0) <= 0.05 * es.eigenvalues()(2) && !lines.empty()) {
      // sheets around one edge: T with a vertex ray along it, centre unknown
      const Line& L = lines.front();
      Vec3 w = cl[L.i].centroid() - L.point;
      w -= L.dir * dot(w, L.dir);
      if (norm(w) > 1e-12) {
        const Vec3 d = normalized(w);
        const Vec3 foot = L.point + L.dir * dot(x - L.point, L.dir);
        const Mat3 ref = frame(reference::kTetraVertices[0], reference::kTetraVertices[1]);
        for (double sgn : {1.0, -1.0})
          for (double k : {0.5, 1.0, 2.0}) {
            const Vec3 a1 = L.dir * sgn;
            const Vec3 a2 = a1 * (-1.0 / 3.0) + d * (2.0 * std::sqrt(2.0) / 3.0);
            const Mat3 R = orthonormalize(frame(a1, a2) * ref.transposed());
            out.push_back({ConeType::T, R, foot - a1 * (k * r), 0});
          }
      }
    }
    if (es.eigenvalues()(0) > 0.05 * es.eigenvalues()(2)) {
      const Eigen::Vector3d ce = M.ldlt().solve(rhs);
      const Vec3 c{ce(0), ce(1), ce(2)};
      std::vector<Vec3> rays;
      for (const Line& L : lines) {
        const Vec3 side = cl[L.i].centroid() + cl[L.j].centroid() - c * 2.0;
        rays.push_back(dot(side, L.dir) >= 0 ? L.dir : -L.dir);
      }
      int made = 0;
      for (std::size_t a = 0; a < rays.size() && made < 8; ++a)
        for (std::size_t b = a + 1; b < rays.size() && made < 8; ++b) {
          const double cs = dot(rays[a], rays[b]);
          for (double sb : {1.0, -1.0}) {
            if (std::abs(sb * cs + 1.0 / 3.0) > 0.08) continue;
            const Vec3 ub = rays[b] * sb;
            const Mat3 ref = frame(reference::kTetraVertices[0], reference::kTetraVertices[1]);
            const Mat3 R = orthonormalize(frame(rays[a], ub) * ref.transposed());
            out.push_back({ConeType::T, R, c, 0});
            ++made;
          }
        }
    }
  }
  return out;
}

Start halton_start(ConeType type, int i, const Vec3& x, double r) {
  const auto h = [&](int dim) { return halton(static_cast<std::uint64_t>(i) + 1, kHaltonPrimes[dim]); };
  switch (type) {
    case ConeType::P:
      return {type, plane_cone(x, sphere_point(h(0), h(1))).rotation(), x, 0};
    case ConeType::Y:
      return {type, rotation_from_unit_cube(h(0), h(1), h(2)), x, 1.5 * h(3)};
    case ConeType::T: {
      const Vec3 u = sphere_point(h(3), h(4)) * (1.5 * std::cbrt(h(5)));
      return {type, rotation_from_unit_cube(h(0), h(1), h(2)), x + u * r, 0};
    }
  }
  return {};
}

struct Candidate {
  double value;
  MinimalCone cone;
};

/// Local search on the subsample, one repair round with the worst full-set
/// points, then an exact evaluation on all points.
Candidate refine(const Start& s, const Vec3& x, double r, const std::vector<Vec3>& sub,
                 const std::vector<Vec3>& all, double tol) {
  const Family fam(s, x, r);
  std::vector<Vec3> pts = sub;
  auto objective = [&](const std::vector<double>& p) { return max_distance(fam.cone(p), pts) / r; };
  NelderMeadOptions nm;
  nm.max_evals = 80 * fam.dims();
  nm.f_tol = 0.1 * tol;
  nm.x_tol = tol;
  auto res = nelder_mead(objective, fam.origin(), fam.steps(), nm);
  MinimalCone best = fam.cone(res.x);
  double full = max_distance(best, all) / r;
  if (full > res.f * 1.02 + 1e-12 && all.size() > pts.size()) {
    std::vector<std::pair<double, std::size_t>> worst;
    for (std::size_t i = 0; i < all.size(); ++i) worst.emplace_back(-best.distance(all[i]), i);
    const std::size_t k = std::min<std::size_t>(64, worst.size());
    std::partial_sort(worst.begin(), worst.begin() + k, worst.end());
    for (std::size_t i = 0; i < k; ++i) pts.push_back(all[worst[i].second]);
    std::vector<double> step = fam.steps();
    for (double& v : step) v *= 0.2;
    res = nelder_mead(objective, res.x, step, nm);
    const MinimalCone again = fam.cone(res.x);
    const double f2 = max_distance(again, all) / r;
    if (f2 < full) {
      full = f2;
      best = again;
    }
  }
  if (full < 1e-2 && full > 1e-14) {
    // near-exact fits get a tight polish on the full point set
    std::vector<double> step(fam.dims(), 1e-3);
    NelderMeadOptions tight;
    tight.max_evals = 150 * fam.dims();
    tight.f_tol = 1e-13;
    tight.x_tol = 1e-10;
    auto exact = [&](const std::vector<double>& p) { return max_distance(fam.cone(p), all) / r; };
    const auto pol = nelder_mead(exact, res.x, step, tight);
    if (pol.f < full) {
      full = pol.f;
      best = fam.cone(pol.x);
    }
  }
  return {full, best};
}

std::vector<Vec3> subsample(const std::vector<Vec3>& all, int max_n) {
  if (static_cast<int>(all.size()) <= max_n) return all;
  std::vector<Vec3> out;
  out.reserve(max_n);
  for (int i = 0; i < max_n; ++i) out.push_back(all[static_cast<std::size_t>(i) * all.size() / max_n]);
  return out;
}

}  // namespace

double one_sided_deviation(const CrackSet& crack, const MinimalCone& cone, const Ball& ball) {
  double m = 0.0;
  for (int i : crack.samples_in_ball(ball)) m = std::max(m, cone.distance(crack.samples()[i]));
  return m / ball.radius;
}

BetaResult beta(const CrackSet& crack, const Vec3& x, double r, const BetaOptions& opt) {
  if (crack.distance_capped(x, r) > 1e-9 * r) throw std::invalid_argument("beta: x is not on the crack");
  std::vector<Vec3> all;
  for (int i : crack.samples_in_ball(Ball(x, r))) all.push_back(crack.samples()[i]);
  BetaResult best{kInf, plane_cone(x, {0, 0, 1})};
  if (all.empty()) {
    best.value = 0.0;
    return best;
  }
  const std::vector<Vec3> sub = subsample(all, opt.max_samples);
  auto consider = [&](const Start& s) {
    const Candidate c = refine(s, x, r, sub, all, opt.tol);
    if (c.value < best.value - 1e-12 || (best.value == kInf && c.value < kInf)) {
      best.value = c.value;
      best.cone = c.cone;
    }
    return best.value <= std::max(opt.stop_below, 1e-13);
  };

  if (opt.data_starts)
    for (const Start& s : data_starts(crack, sub, x, r, opt))
      if (consider(s)) return best;

  // Quasi-random starts in blocks of eight; the two best openers of each
  // block are refined, so a longer run refines a superset of candidates.
  for (ConeType type : {ConeType::P, ConeType::Y, ConeType::T}) {
    if ((type == ConeType::P && !opt.planes) || (type == ConeType::Y && !opt.ys) ||
        (type == ConeType::T && !opt.ts))
      continue;
    for (int block = 0; block * 8 < opt.starts; ++block) {
      std::vector<std::pair<double, int>> open;
      for (int i = block * 8; i < std::min(opt.starts, block * 8 + 8); ++i) {
        const Start s = halton_start(type, i, x, r);
        const Family fam(s, x, r);
        open.emplace_back(max_distance(fam.cone(fam.origin()), sub), i);
      }
      std::stable_sort(open.begin(), open.end());
      for (std::size_t k = 0; k < std::min<std::size_t>(2, open.size()); ++k)
        if (consider(halton_start(type, open[k].second, x, r))) return best;
    }
  }
  return best;
}

namespace {

std::vector<Vec3> disk_points(const Vec3& x, const Vec3& n, double r) {
  const Vec3 u = any_orthogonal(n), v = cross(n, u);
  std::vector<Vec3> out{x};
  const int rings = 8;
  for (int k = 1; k <= rings; ++k) {
    const double rho = r * (k - 0.01) / rings;
    const int m = 6 * k;
    for (int a = 0; a < m; ++a) {
      const double t = 2 * std::numbers::pi * (a + 0.5 * (k % 2)) / m;
      out.push_back(x + (u * std::cos(t) + v * std::sin(t)) * rho);
    }
  }
  return out;
}

double bilateral_plane(const CrackSet& crack, const std::vector<Vec3>& pts, const Vec3& x,
                       const Vec3& n, double r) {
  double m = 0.0;
  for (const Vec3& p : pts) m = std::max(m, std::abs(dot(p - x, n)));
  for (const Vec3& z : disk_points(x, n, r)) m = std::max(m, crack.distance_capped(z, r));
  return m / r;
}

}  // namespace

BetaResult plane_flatness(const CrackSet& crack, const Vec3& x, double r, int starts) {
  std::vector<Vec3> all;
  for (int i : crack.samples_in_ball(Ball(x, r))) all.push_back(crack.samples()[i]);
  const std::vector<Vec3> sub = subsample(all, 400);

  std::vector<Vec3> normals;
  BetaOptions po;
  po.ys = po.ts = false;
  for (const Start& s : data_starts(crack, sub, x, r, po)) normals.push_back(s.rot.column(1));
  std::vector<std::pair<double, int>> open;
  for (int i = 0; i < starts; ++i) {
    const Vec3 n = halton_start(ConeType::P, i, x, r).rot.column(1);
    open.emplace_back(bilateral_plane(crack, sub, x, n, r), i);
  }
  std::stable_sort(open.begin(), open.end());
  for (std::size_t k = 0; k < std::min<std::size_t>(4, open.size()); ++k)
    normals.push_back(halton_start(ConeType::P, open[k].second, x, r).rot.column(1));

  BetaResult best{kInf, plane_cone(x, {0, 0, 1})};
  for (const Vec3& n0 : normals) {
    const Vec3 u = any_orthogonal(n0), v = cross(n0, u);
    auto f = [&](const std::vector<double>& p) {
      return bilateral_plane(crack, sub, x, normalized(n0 + u * p[0] + v * p[1]), r);
    };
    NelderMeadOptions nm;
    nm.max_evals = 120;
    nm.x_tol = 1e-4;
    nm.f_tol = 1e-5;
    const auto res = nelder_mead(f, {0, 0}, {0.05, 0.05}, nm);
    const Vec3 n = normalized(n0 + u * res.x[0] + v * res.x[1]);
    const double full = bilateral_plane(crack, all, x, n, r);
    if (full < best.value) best = {full, plane_cone(x, n)};
  }
  return best;
}

double hausdorff_distance_normalized(const CrackSet& E, const CrackSet& F, const Ball& ball) {
  const auto ei = E.samples_in_ball(ball);
  const auto fi = F.samples_in_ball(ball);
  if (ei.empty() && fi.empty()) return 0.0;
  if (ei.empty() || fi.empty()) return kInf;
  double m = 0.0;
  for (int i : ei) m = std::max(m, F.distance(E.samples()[i]));
  for (int i : fi) m = std::max(m, E.distance(F.samples()[i]));
  return m / ball.radius;
}

double bilateral_cone_distance(const CrackSet& E, const MinimalCone& cone, const Ball& ball,
                               int cone_points) {
  double m = 0.0;
  for (int i : E.samples_in_ball(ball)) m = std::max(m, cone.distance(E.samples()[i]));
  CounterRng rng(0x5eed, "bilateral");
  for (const Vec3& p : sample_cone_points(cone, ball, cone_points, rng))
    m = std::max(m, E.distance_capped(p, ball.radius));
  return m / ball.radius;
}

// ------------------------------------------------------------------ reports

void FlatnessReport::add(const FlatnessRecord& rec) { records.push_back(rec); }

void FlatnessReport::finalize() {
  std::stable_sort(records.begin(), records.end(), [](const FlatnessRecord& a, const FlatnessRecord& b) {
    if (!(a.x == b.x)) return lex_less(a.x, b.x);
    return a.r < b.r;
  });
  worst_beta = 0.0;
  for (const auto& r : records) {
    if (r.beta >= worst_beta) {
      worst_beta = r.beta;
      worst_x = r.x;
      worst_r = r.r;
    }
    if (!r.pass) pass = false;
  }
}

void FlatnessReport::write_csv(std::ostream& out) const {
  out << "x,y,z,r,beta,type,pass\n";
  out.precision(12);
  for (const auto& r : records)
    out << r.x.x << ',' << r.x.y << ',' << r.x.z << ',' << r.r << ',' << r.beta << ','
        << to_string(r.cone.type()) << ',' << (r.pass ? 1 : 0) << '\n';
}

namespace {

struct SweepPoint {
  Vec3 x;
  double r;
};

template <class Accept>
std::vector<SweepPoint> sweep_points(const CrackSet& crack, const Ball& ball, const SweepOptions& opt,
                                     Accept accept) {
  std::vector<int> cand;
  for (int i : crack.samples_in_ball(Ball(ball.center, 0.5 * ball.radius)))
    if (accept(crack.samples()[i])) cand.push_back(i);
  std::vector<SweepPoint> out;
  if (cand.empty()) return out;
  CounterRng rng(opt.seed, "sweep-centers");
  const double rmin = opt.min_radius > 0 ? opt.min_radius : 10.0 * crack.sample_spacing();
  for (int c = 0; c < opt.n_centers; ++c) {
    const Vec3 x = crack.samples()[cand[rng.uniform_int(0, static_cast<int>(cand.size()) - 1)]];
    const double rmax = 0.95 * (ball.radius - dist(x, ball.center));
    for (int k = 0; k < opt.n_radii; ++k) {
      const double r = rmax * std::ldexp(1.0, -k);
      if (r >= rmin) out.push_back({x, r});
    }
  }
  return out;
}

}  // namespace

FlatnessReport check_reifenberg(const CrackSet& crack, const Ball& ball, double eps0,
                                const SweepOptions& opt) {
  FlatnessReport rep;
  rep.threshold = eps0;
  for (const auto& sp : sweep_points(crack, ball, opt, [](const Vec3&) { return true; })) {
    const auto b = plane_flatness(crack, sp.x, sp.r);
    rep.add({sp.x, sp.r, b.value, b.cone, b.value <= eps0});
  }
  rep.finalize();
  return rep;
}

namespace {

void eps_minimal_sweep(FlatnessReport& rep, const CrackSet& crack, const std::vector<SweepPoint>& pts,
                       double eps0) {
  BetaOptions bo;
  bo.stop_below = eps0;
  for (const auto& sp : pts) {
    const auto b = beta(crack, sp.x, sp.r, bo);
    rep.add({sp.x, sp.r, b.value, b.cone, b.value <= eps0});
  }
}

}  // namespace

FlatnessReport check_eps_minimal(const CrackSet& crack, const Ball& ball, double eps0,
                                 const SweepOptions& opt) {
  FlatnessReport rep;
  rep.threshold = eps0;
  eps_minimal_sweep(rep, crack, sweep_points(crack, ball, opt, [](const Vec3&) { return true; }), eps0);
  rep.finalize();
  return rep;
}

int BadBallFamily::measured_overlap() const {
  std::vector<Vec3> probes;
  for (const Ball& b : balls) probes.push_back(b.center);
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j) {
      const double d = dist(balls[i].center, balls[j].center);
      const double ri = 2 * balls[i].radius, rj = 2 * balls[j].radius;
      if (d >= ri + rj) continue;
      // point of the segment between centers inside both doubled balls
      const double t = d > 0 ? std::clamp((ri - rj + d) / (2 * d), 0.0, 1.0) : 0.0;
      probes.push_back(balls[i].center + (balls[j].center - balls[i].center) * t);
    }
  int worst = 0;
  for (const Vec3& p : probes) {
    int n = 0;
    for (const Ball& b : balls)
      if (b.scaled(2.0).contains(p)) ++n;
    worst = std::max(worst, n);
  }
  return worst;
}

void BadBallFamily::write_csv(std::ostream& out) const {
  out << "cx,cy,cz,r\n";
  out.precision(17);
  for (const Ball& b : balls)
    out << b.center.x << ',' << b.center.y << ',' << b.center.z << ',' << b.radius << '\n';
}

BadBallFamily BadBallFamily::read_csv(std::istream& in) {
  BadBallFamily f;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("cx", 0) == 0) continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Vec3 c;
    double r;
    if (!(ls >> c.x >> c.y >> c.z >> r)) throw std::runtime_error("bad ball CSV: malformed row");
    f.balls.emplace_back(c, r);
  }
  f.overlap_constant = std::max(1, f.measured_overlap());
  return f;
}

FlatnessReport check_eps0_eps_minimal(const CrackSet& crack, const Ball& ball, double eps0,
                                      double eps, const BadBallFamily& bad,
                                      const MinimalCone& cone0, const EpsMinimalOptions& opt) {
  FlatnessReport rep;
  rep.threshold = eps0;
  auto fail = [&](const char* clause, std::string detail) {
    rep.pass = false;
    rep.failed_clause = clause;
    rep.detail = std::move(detail);
    rep.finalize();
    rep.pass = false;
    return rep;
  };

  // i) radii
  for (const Ball& b : bad.balls)
    if (b.radius > eps) return fail("i", "bad ball radius " + std::to_string(b.radius) + " exceeds eps");
  if (bad.measured_overlap() > bad.overlap_constant)
    return fail("i", "doubled bad balls overlap more than C0");

  // ii) eps0-minimal away from the bad balls
  {
    std::vector<Ball> holes = bad.balls;
    const CrackSet rest = crack.without_balls(holes);
    auto outside = [&](const Vec3& p) {
      for (const Ball& b : bad.balls)
        if (b.scaled(2.0).contains(p)) return false;
      return true;
    };
    FlatnessReport sub;
    eps_minimal_sweep(sub, rest, sweep_points(rest, ball, opt.sweep, outside), eps0);
    for (const auto& r : sub.records) {
      rep.add(r);
      if (!r.pass) return fail("ii", "beta " + std::to_string(r.beta) + " above eps0 away from bad balls");
    }
  }

  // iii) containment in the eps-slab of cone0
  {
    double worst = 0.0;
    for (int i : crack.samples_in_ball(ball)) worst = std::max(worst, cone0.distance(crack.samples()[i]));
    if (worst > eps * ball.radius)
      return fail("iii", "crack leaves the eps-slab: " + std::to_string(worst / ball.radius));
  }

  // iv) beta control above each bad-ball scale
  {
    BetaOptions bo;
    bo.stop_below = eps0;
    for (const Ball& b : bad.balls) {
      const double rmax = ball.radius - dist(b.center, ball.center);
      if (rmax <= b.radius) continue;
      for (int k = 0; k < opt.clause_iv_radii; ++k) {
        const double s = opt.clause_iv_radii == 1 ? 0.0 : static_cast<double>(k) / (opt.clause_iv_radii - 1);
        const double r = b.radius * 1.01 * std::pow(0.95 * rmax / (1.01 * b.radius), s);
        const auto res = beta(crack, b.center, r, bo);
        rep.add({b.center, r, res.value, res.cone, res.value <= eps0});
        if (res.value > eps0)
          return fail("iv", "beta " + std::to_string(res.value) + " above eps0 at a bad-ball center");
      }
    }
  }

  // v) separation with the cone of iii)
  {
    // the slab is the containment level certified by iii)
    try {
      const SeparationReport sep = separation_report(crack, cone0, ball, eps, opt.separation_resolution);
      if (!sep.separating) return fail("v", "crack is not separating");
    } catch (const std::invalid_argument& e) {
      return fail("v", std::string("separation undecidable: ") + e.what());
    }
  }
  rep.finalize();
  return rep;
}

}  // namespace conelab
