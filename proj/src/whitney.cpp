#include "conelab/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "conelab/regions.hpp"
#include "conelab/rng.hpp"

namespace conelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t cell_key(long long i, long long j, long long k) {
  constexpr long long off = 1 << 20;
  return (static_cast<std::uint64_t>(i + off) << 42) | (static_cast<std::uint64_t>(j + off) << 21) |
         static_cast<std::uint64_t>(k + off);
}

long long cell_of(double v, double cell) { return static_cast<long long>(std::floor(v / cell)); }

std::size_t neighbour(const CellGrid& g, std::size_t idx, int axis) {
  return idx + (axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(g.nx)
                                          : static_cast<std::size_t>(g.nx) * g.ny);
}

}  // namespace

double GeometricFunction::tube_term(const Vec3& x) const {
  double d = kInf;
  for (const Sector& s : cone0.sectors()) d = std::min(d, s.truncated(rho).distance(x));
  return std::abs(h - d);
}

double GeometricFunction::bump_sum(const Vec3& x) const {
  double s = 0.0;
  for (const Ball& b : bad.balls) s += std::clamp(2.0 * b.radius - dist(x, b.center), 0.0, b.radius);
  return s;
}

double GeometricFunction::operator()(const Vec3& x) const { return std::max(tube_term(x), bump_sum(x)); }

GeometricFunction build_delta(const BadBallFamily& bad, double rho, double h, const MinimalCone& cone0,
                              std::uint64_t seed) {
  if (!(h > 0.0 && h <= 0.25)) throw std::invalid_argument("build_delta: need 0 < h <= 1/4");
  if (!(rho > 0.0)) throw std::invalid_argument("build_delta: rho must be positive");
  for (const Ball& b : bad.balls)
    if (norm(b.center) + b.radius > 1.0) throw std::invalid_argument("build_delta: bad ball leaves the unit ball");
  GeometricFunction g;
  g.bad = bad;
  g.cone0 = cone0;
  g.rho = rho;
  g.h = h;
  g.lipschitz_bound = std::max(1, bad.balls.empty() ? 0 : bad.measured_overlap());

  CounterRng rng(seed, "delta-lipschitz");
  double slope = 0.0;
  for (int p = 0; p < 10000; ++p) {
    Vec3 x;
    if (!bad.balls.empty() && p % 2 == 0) {
      const Ball& b = bad.balls[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(bad.balls.size()) - 1))];
      x = rng.in_ball(b.center, 2.5 * b.radius);
    } else {
      x = rng.in_ball({}, 1.0);
    }
    const Vec3 y = x + rng.unit_vector() * std::exp(rng.uniform(std::log(1e-4), std::log(0.1)));
    slope = std::max(slope, std::abs(g(x) - g(y)) / dist(x, y));
  }
  g.lipschitz_constant = slope;
  return g;
}

// ---------------------------------------------------------------------------

void WhitneyCover::build_index() {
  rmax_ = 0.0;
  for (const auto& b : balls) rmax_ = std::max(rmax_, b.radius);
  cell_ = rmax_ > 0.0 ? 10.0 * rmax_ : 1.0;
  hash_.clear();
  for (std::size_t j = 0; j < balls.size(); ++j) {
    const Vec3& c = balls[j].center;
    hash_.emplace_back(cell_key(cell_of(c.x, cell_), cell_of(c.y, cell_), cell_of(c.z, cell_)), static_cast<int>(j));
  }
  std::sort(hash_.begin(), hash_.end());
}

std::vector<int> WhitneyCover::within(const Vec3& x, double R) const {
  std::vector<int> out;
  if (hash_.empty()) return out;
  const long long rings = static_cast<long long>(std::ceil(R / cell_));
  const long long ci = cell_of(x.x, cell_), cj = cell_of(x.y, cell_), ck = cell_of(x.z, cell_);
  for (long long i = ci - rings; i <= ci + rings; ++i)
    for (long long j = cj - rings; j <= cj + rings; ++j)
      for (long long k = ck - rings; k <= ck + rings; ++k) {
        const std::uint64_t key = cell_key(i, j, k);
        auto it = std::lower_bound(hash_.begin(), hash_.end(), std::make_pair(key, -1));
        for (; it != hash_.end() && it->first == key; ++it)
          if (dist(balls[it->second].center, x) < R) out.push_back(it->second);
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> WhitneyCover::containing(const Vec3& x, double factor) const {
  std::vector<int> out;
  for (int j : within(x, factor * rmax_))
    if (dist(x, balls[j].center) < factor * balls[j].radius) out.push_back(j);
  return out;
}

int WhitneyCover::overlap(const std::vector<Vec3>& probes) const {
  int best = 0;
  for (const auto& b : balls) best = std::max(best, static_cast<int>(containing(b.center, 10.0).size()));
  for (const Vec3& p : probes) best = std::max(best, static_cast<int>(containing(p, 10.0).size()));
  return best;
}

void WhitneyCover::write_csv(std::ostream& out) const {
  out << "x,y,z,r,cone_type\n";
  out.precision(17);
  for (const auto& b : balls)
    out << b.center.x << ',' << b.center.y << ',' << b.center.z << ',' << b.radius << ',' << to_string(b.cone.type())
        << '\n';
}

WhitneyCover select_whitney_balls(const CrackSet& crack, const GeometricFunction& delta, double U,
                                  const Ball& domain) {
  if (U < 30.0 * delta.lipschitz_constant)
    throw std::invalid_argument("select_whitney_balls: U must be at least 30 C0");
  WhitneyCover cover;
  cover.U = U;
  cover.C0 = delta.lipschitz_constant;
  cover.domain = domain;

  struct Candidate {
    Vec3 x;
    double d;
  };
  std::vector<Candidate> cand;
  double dmax = 0.0;
  for (int i : crack.samples_in_ball(domain)) {
    const Vec3& x = crack.samples()[i];
    const double d = delta(x);
    if (d > 0.0) {
      cand.push_back({x, d});
      dmax = std::max(dmax, d);
    }
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    if (a.d != b.d) return a.d > b.d;
    return lex_less(a.x, b.x);
  });

  // greedy packing of cores B(x, d / (100 U))
  const double cell = std::max(2.0 * dmax / (100.0 * U), 1e-12);
  std::unordered_map<std::uint64_t, std::vector<int>> cores;
  std::vector<Candidate> chosen;
  for (const Candidate& c : cand) {
    const double rc = c.d / (100.0 * U);
    const long long ci = cell_of(c.x.x, cell), cj = cell_of(c.x.y, cell), ck = cell_of(c.x.z, cell);
    bool free = true;
    for (long long i = ci - 1; i <= ci + 1 && free; ++i)
      for (long long j = cj - 1; j <= cj + 1 && free; ++j)
        for (long long k = ck - 1; k <= ck + 1 && free; ++k) {
          auto it = cores.find(cell_key(i, j, k));
          if (it == cores.end()) continue;
          for (int o : it->second)
            if (dist(chosen[o].x, c.x) < rc + chosen[o].d / (100.0 * U)) {
              free = false;
              break;
            }
        }
    if (!free) continue;
    cores[cell_key(ci, cj, ck)].push_back(static_cast<int>(chosen.size()));
    chosen.push_back(c);
  }

  for (const Candidate& c : chosen) {
    WhitneyBall b;
    b.center = c.x;
    b.base_radius = c.d / U;
    b.radius = b.base_radius;
    const MinimalCone through = delta.cone0.transformed(Mat3::identity(), c.x - delta.cone0.closest_point(c.x));
    b.cone = through;
    try {
      const Recentered rc = recenter(through, c.x, b.base_radius, 2.0);
      b.radius = rc.r1;
      b.cone = rc.cone;
      b.inflation = static_cast<int>(std::lround(rc.r1 / b.base_radius));
    } catch (const std::domain_error&) {
      // keep the parallel cone at the base radius
    }
    cover.balls.push_back(b);
  }
  cover.build_index();
  return cover;
}

// ---------------------------------------------------------------------------

double whitney_ramp(double t) {
  if (t <= 8.0) return 0.0;
  if (t >= 10.0) return 1.0;
  const double u = (t - 8.0) / 2.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double whitney_ramp_derivative(double t) {
  if (t <= 8.0 || t >= 10.0) return 0.0;
  const double u = (t - 8.0) / 2.0;
  return 15.0 * u * u * (1.0 - u) * (1.0 - u);
}

PartitionValue evaluate_partition(const WhitneyCover& cover, const Vec3& x) {
  PartitionValue pv;
  double sum = 0.0;
  std::vector<std::pair<int, double>> raw;
  for (int j : cover.containing(x, 10.0)) {
    const double l = whitney_ramp(dist(x, cover.balls[j].center) / cover.balls[j].radius);
    pv.phi0 *= l;
    if (l < 1.0) {
      raw.emplace_back(j, 1.0 - l);
      sum += 1.0 - l;
    }
  }
  pv.total = pv.phi0 + sum;
  for (auto& [j, phi] : raw) pv.weights.emplace_back(j, phi / pv.total);
  return pv;
}

Vec3 phi0_gradient(const WhitneyCover& cover, const Vec3& x, double fd) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 p = x, m = x;
    p[a] += fd;
    m[a] -= fd;
    g[a] = (evaluate_partition(cover, p).phi0 - evaluate_partition(cover, m).phi0) / (2.0 * fd);
  }
  return g;
}

bool CoverAudit::pass(int overlap_bound) const {
  return core_violations == 0 && comparability_violations == 0 && maximality_violations == 0 &&
         phi0_violations == 0 && sum_violations == 0 && gradient_violations == 0 && overlap <= overlap_bound;
}

void CoverAudit::merge(const CoverAudit& o) {
  instances += o.instances;
  core_violations += o.core_violations;
  comparability_violations += o.comparability_violations;
  worst_ratio = std::max(worst_ratio, o.worst_ratio);
  overlap = std::max(overlap, o.overlap);
  maximality_violations += o.maximality_violations;
  phi0_violations += o.phi0_violations;
  sum_violations += o.sum_violations;
  gradient_violations += o.gradient_violations;
  worst_gradient = std::max(worst_gradient, o.worst_gradient);
  partition_error = std::max(partition_error, o.partition_error);
}

CoverAudit audit_cover(const WhitneyCover& cover, const CrackSet& crack, const GeometricFunction& delta,
                       int points, std::uint64_t seed) {
  CoverAudit a;
  a.instances = 1;
  const auto& B = cover.balls;
  double rmax = 0.0, bmax = 0.0;
  for (const auto& b : B) rmax = std::max(rmax, b.radius), bmax = std::max(bmax, b.base_radius);

  for (std::size_t j = 0; j < B.size(); ++j) {
    for (int i : cover.within(B[j].center, 10.0 * (B[j].radius + rmax))) {
      if (static_cast<std::size_t>(i) <= j) continue;
      const double d = dist(B[i].center, B[j].center);
      if (d < (B[i].base_radius + B[j].base_radius) / 100.0) ++a.core_violations;
      if (d < 10.0 * (B[i].radius + B[j].radius)) {
        const double ratio = std::max(B[i].radius / B[j].radius, B[j].radius / B[i].radius);
        a.worst_ratio = std::max(a.worst_ratio, ratio);
        if (ratio > 20.0) ++a.comparability_violations;
      }
    }
  }

  std::vector<Vec3> probes;
  for (int s : crack.samples_in_ball(cover.domain)) {
    const Vec3& x = crack.samples()[s];
    probes.push_back(x);
    const double d = delta(x);
    if (d <= 0.0) continue;
    bool hit = false;
    for (int j : cover.within(x, (d / cover.U + bmax) / 100.0))
      if (dist(x, B[j].center) < (d / cover.U + B[j].base_radius) / 100.0) {
        hit = true;
        break;
      }
    if (!hit) ++a.maximality_violations;
  }
  CounterRng rng(seed, "cover-audit");
  const std::size_t crack_probes = probes.size();
  for (int p = 0; p < points; ++p) {
    // half the points near a random ball, where the partition is nontrivial
    if (!B.empty() && p % 2 == 0) {
      const auto& b = B[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(B.size()) - 1))];
      probes.push_back(rng.in_ball(b.center, 11.0 * b.radius));
    } else {
      probes.push_back(rng.in_ball(cover.domain.center, cover.domain.radius));
    }
  }
  a.overlap = cover.overlap(probes);

  for (std::size_t p = crack_probes; p < probes.size(); ++p) {
    const Vec3& x = probes[p];
    const PartitionValue pv = evaluate_partition(cover, x);
    const auto in10 = cover.containing(x, 10.0);
    const auto in8 = cover.containing(x, 8.0);
    if (in10.empty() && pv.phi0 != 1.0) ++a.phi0_violations;
    if (!in8.empty() && pv.phi0 != 0.0) ++a.phi0_violations;
    if (pv.total < 1.0 - 1e-12) ++a.sum_violations;
    double s = pv.theta0();
    for (const auto& w : pv.weights) s += w.second;
    a.partition_error = std::max(a.partition_error, std::abs(s - 1.0));
    if (std::abs(s - 1.0) > 1e-10) ++a.sum_violations;
    if (!in10.empty() && in8.empty()) {
      const double g = norm(phi0_gradient(cover, x, 1e-7 * rmax));
      const double n_x = static_cast<double>(in10.size());
      for (int j : in10) {
        const double scaled = g * B[j].radius;
        a.worst_gradient = std::max(a.worst_gradient, scaled);
        if (scaled > (15.0 / 16.0) * n_x * a.worst_ratio * (1.0 + 1e-4)) ++a.gradient_violations;
      }
    }
  }
  return a;
}

// ---------------------------------------------------------------------------

double ExtensionField::value_at(std::size_t cell) const {
  const CrackGraph& g = *u->graph;
  const PartitionValue pv = evaluate_partition(*cover, g.grid.center(cell));
  double v = pv.theta0() * u->values[cell];
  for (const auto& [j, w] : pv.weights) {
    if (!active[j]) return std::numeric_limits<double>::quiet_NaN();
    v += mean[j] * w;
  }
  return v;
}

ExtensionField build_extension(const ScalarField& u, std::shared_ptr<const WhitneyCover> cover, int component,
                               const CrackSet& crack) {
  const CrackGraph& g = *u.graph;
  if (component < 1 || component > g.components.count)
    throw std::invalid_argument("build_extension: no such component");
  ExtensionField ext;
  ext.cover = cover;
  ext.u = &u;
  ext.component = component;
  const std::size_t nb = cover->balls.size();
  ext.active.assign(nb, 0);
  ext.anchor.assign(nb, Vec3{});
  ext.mean.assign(nb, 0.0);
  ext.clearance.assign(nb, 0.0);

  const double step = g.step();
  const bool flat = g.dimension() == 2;
  for (std::size_t j = 0; j < nb; ++j) {
    const WhitneyBall& b = cover->balls[j];
    const double R = 10.0 * b.radius;
    const long long lo[3] = {static_cast<long long>(std::floor((b.center.x - R - g.grid.lo.x) / step)),
                             static_cast<long long>(std::floor((b.center.y - R - g.grid.lo.y) / step)),
                             flat ? 0 : static_cast<long long>(std::floor((b.center.z - R - g.grid.lo.z) / step))};
    const long long hi[3] = {static_cast<long long>(std::ceil((b.center.x + R - g.grid.lo.x) / step)),
                             static_cast<long long>(std::ceil((b.center.y + R - g.grid.lo.y) / step)),
                             flat ? 0 : static_cast<long long>(std::ceil((b.center.z + R - g.grid.lo.z) / step))};
    double best = -kInf;
    std::size_t best_cell = 0;
    for (long long k = std::max(0LL, lo[2]); k <= std::min<long long>(g.grid.nz - 1, hi[2]); ++k)
      for (long long jj = std::max(0LL, lo[1]); jj <= std::min<long long>(g.grid.ny - 1, hi[1]); ++jj)
        for (long long i = std::max(0LL, lo[0]); i <= std::min<long long>(g.grid.nx - 1, hi[0]); ++i) {
          const std::size_t idx = g.grid.index(static_cast<int>(i), static_cast<int>(jj), static_cast<int>(k));
          if (!g.node[idx] || g.components.label[idx] != component) continue;
          const Vec3 x = g.grid.center(idx);
          const double d = dist(x, b.center);
          if (d >= R || d < 8.0 * b.radius) continue;
          ext.active[j] = 1;
          const double clear = crack.distance_capped(x, R);
          if (clear > best || (clear == best && lex_less(x, g.grid.center(best_cell)))) {
            best = clear;
            best_cell = idx;
          }
        }
    if (!ext.active[j]) continue;
    if (best < 7.0 * b.radius - 14.0 * step)
      throw std::runtime_error("build_extension: no admissible anchor point; eps0 too large or grid too coarse");
    ext.clearance[j] = best;
    ext.anchor[j] = g.grid.center(best_cell);
    ext.mean[j] = u.values[best_cell];
  }
  return ext;
}

EnergyComparison energy_comparison(const ScalarField& u, const ExtensionField& v, const CrackSet& crack,
                                   const GeometricFunction& delta) {
  if (v.u != &u) throw std::invalid_argument("energy_comparison: extension built on another field");
  const CrackGraph& g = *u.graph;
  const WhitneyCover& cover = *v.cover;
  const Vec3 x0 = cover.domain.center;
  const double rho = cover.domain.radius;
  const double U = cover.U;
  const double step = g.step();
  const std::size_t n = g.grid.size();
  const bool flat = g.dimension() == 2;

  // tau(x) = min over samples y of |x - y| U / delta(y); x in V(t) iff tau < t
  std::vector<double> tau(n, kInf);
  std::vector<char> vrho(n, 0);
  for (int s : crack.samples_in_ball(cover.domain)) {
    const Vec3& y = crack.samples()[s];
    const double d = delta(y);
    if (d <= 0.0) continue;
    const double R = 30.0 * d / U;
    const double r10 = 10.0 * d / U;
    const bool touches = dist(y, x0) + r10 >= rho;
    const auto c = g.grid.coords(static_cast<std::size_t>(std::max(0LL, g.grid.locate(y))));
    const int span = static_cast<int>(std::ceil(R / step)) + 1;
    for (int k = flat ? 0 : std::max(0, c[2] - span); k <= (flat ? 0 : std::min(g.grid.nz - 1, c[2] + span)); ++k)
      for (int j = std::max(0, c[1] - span); j <= std::min(g.grid.ny - 1, c[1] + span); ++j)
        for (int i = std::max(0, c[0] - span); i <= std::min(g.grid.nx - 1, c[0] + span); ++i) {
          const std::size_t idx = g.grid.index(i, j, k);
          if (!g.node[idx]) continue;
          const double dd = dist(g.grid.center(idx), y);
          if (dd >= R) continue;
          tau[idx] = std::min(tau[idx], dd * U / d);
          if (touches && dd < r10) vrho[idx] = 1;
        }
  }

  std::vector<char> in_delta(n, 0), lhs_set(n, 0), main_set(n, 0), zone_set(n, 0);
  std::vector<double> vk(n, 0.0);
  EnergyComparison out;
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (!g.node[idx]) continue;
    const Vec3 x = g.grid.center(idx);
    if (dist(x, x0) >= rho) continue;
    zone_set[idx] = tau[idx] < 30.0 && tau[idx] >= 0.1;
    // other components enter only where v_k no longer sees their u
    if (g.components.label[idx] != v.component &&
        (!(tau[idx] < 10.0) || evaluate_partition(cover, x).phi0 > 0.0))
      continue;
    vk[idx] = v.value_at(idx);
    if (std::isnan(vk[idx])) continue;
    in_delta[idx] = 1;
    lhs_set[idx] = !vrho[idx];
    main_set[idx] = !(tau[idx] < 1.0 / 3.0);
    out.nodes += lhs_set[idx];
  }

  const double w = std::pow(step, g.dimension() - 2);
  for (std::size_t idx = 0; idx < n; ++idx)
    for (int a = 0; a < g.dimension(); ++a) {
      if (!g.has_edge(idx, a)) continue;
      const std::size_t j = neighbour(g.grid, idx, a);
      if (lhs_set[idx] && lhs_set[j]) out.lhs += w * (vk[idx] - vk[j]) * (vk[idx] - vk[j]);
      const double du = u.values[idx] - u.values[j];
      if (main_set[idx] && main_set[j] && in_delta[idx] && in_delta[j]) out.rhs_main += w * du * du;
      if (zone_set[idx] && zone_set[j]) out.rhs_zone += w * du * du;
    }
  const double excess = out.lhs - out.rhs_main;
  out.empirical_C = excess > 0.0 && out.rhs_zone > 0.0 ? excess / out.rhs_zone : 0.0;
  return out;
}

int segment_clearance_violations(const ExtensionField& v, const CrackSet& crack) {
  const auto& B = v.cover->balls;
  double rmax = 0.0;
  for (const auto& b : B) rmax = std::max(rmax, b.radius);
  int bad = 0;
  for (std::size_t j = 0; j < B.size(); ++j) {
    if (!v.active[j]) continue;
    for (int i : v.cover->within(B[j].center, 10.0 * (B[j].radius + rmax))) {
      if (static_cast<std::size_t>(i) <= j || !v.active[i]) continue;
      if (dist(B[i].center, B[j].center) >= 10.0 * (B[i].radius + B[j].radius)) continue;
      if (crack.segment_crosses(v.anchor[i], v.anchor[j])) ++bad;
    }
  }
  return bad;
}

WhitneyInstance random_whitney_instance(std::uint64_t seed, double spacing) {
  CounterRng rng(seed, "whitney-instance");
  WhitneyInstance in;
  const ConeType type = static_cast<ConeType>(rng.uniform_int(1, 3));
  const Mat3 rot = random_rotation(rng);
  in.cone0 = make_cone(type, rng.in_ball({}, 0.05), rot);
  std::vector<Triangle> tris = mesh_cone(in.cone0, Ball({}, 1.0), spacing);

  const int nbad = rng.uniform_int(0, 3);
  std::vector<Wrinkle> wrinkles;
  for (int i = 0; i < nbad; ++i) {
    const double r = rng.uniform(0.03, 0.15);
    const Vec3 c = in.cone0.closest_point(rng.in_ball({}, 0.6));
    if (norm(c) + r > 0.95) continue;
    in.bad.balls.push_back(Ball(c, r));
    Wrinkle w;
    w.center = c;
    w.support = r;
    w.amplitude = rng.uniform(0.05, 0.3) * r;
    w.direction = rng.unit_vector();
    w.phase_axis = rng.unit_vector();
    w.wavenumber = rng.uniform(1.0, 4.0) * std::numbers::pi / r;
    wrinkles.push_back(w);
  }
  if (!wrinkles.empty())
    tris = displace(std::move(tris), [&](const Vec3& x) {
      Vec3 g;
      for (const Wrinkle& w : wrinkles) g = g + w(x);
      return g;
    });
  in.crack = CrackSet(std::move(tris), spacing);

  const double h = rng.uniform(0.05, 0.25);
  const double rho = rng.uniform(0.5, 0.75);
  in.delta = build_delta(in.bad, rho, h, in.cone0, seed);
  const double U = 30.0 * in.delta.lipschitz_constant * rng.uniform(1.0, 3.0);
  in.cover = std::make_shared<const WhitneyCover>(select_whitney_balls(in.crack, in.delta, U, Ball({}, rho)));
  return in;
}

double c1_inflation(double U, double C0) { return 2.0 + 10.0 * C0 / U; }

std::vector<Ball> inflated_balls(const BadBallFamily& bad, double U, double C0) {
  const double c1 = c1_inflation(U, C0);
  std::vector<Ball> out;
  for (const Ball& b : bad.balls) out.push_back(b.scaled(c1));
  return out;
}

}  // namespace conelab
