#include "conelab/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "conelab/rng.hpp"

namespace conelab {

namespace {

std::size_t neighbour(const CellGrid& g, std::size_t idx, int axis) {
  static_assert(sizeof(std::size_t) >= 8);
  const std::size_t stride[3] = {1, static_cast<std::size_t>(g.nx), static_cast<std::size_t>(g.nx) * g.ny};
  return idx + stride[axis];
}

bool in_range_plus(const CellGrid& g, std::size_t idx, int axis) {
  const auto c = g.coords(idx);
  const int dims[3] = {g.nx, g.ny, g.nz};
  return c[axis] + 1 < dims[axis];
}

double ramp_weight(double rho, double r, double step) {
  return std::clamp((r - rho) / step + 0.5, 0.0, 1.0);
}

}  // namespace

std::size_t CrackGraph::node_count() const {
  return static_cast<std::size_t>(std::count(node.begin(), node.end(), 1));
}

bool CrackGraph::has_edge(std::size_t idx, int axis) const {
  if (!node[idx] || !in_range_plus(grid, idx, axis)) return false;
  if (cuts[idx] & (1u << axis)) return false;
  return node[neighbour(grid, idx, axis)] != 0;
}

CrackGraph discretize(const CrackSet& crack, int resolution, int dimension, const Ball& ball) {
  if (resolution < 32) throw std::invalid_argument("discretize: resolution must be at least 32");
  if (dimension != 2 && dimension != 3) throw std::invalid_argument("discretize: dimension must be 2 or 3");
  CrackGraph g;
  g.ball = ball;
  g.grid = dimension == 3 ? CellGrid::cube(ball, resolution) : CellGrid::square(ball, resolution);
  g.node = cells_in_ball(g.grid, ball);
  g.cuts = crack.empty() ? std::vector<std::uint8_t>(g.grid.size(), 0) : cut_edges(g.grid, crack, g.node);
  g.boundary.assign(g.grid.size(), 0);
  const int dims[3] = {g.grid.nx, g.grid.ny, g.grid.nz};
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx) {
    if (!g.node[idx]) continue;
    const auto c = g.grid.coords(idx);
    for (int a = 0; a < dimension && !g.boundary[idx]; ++a)
      for (int s : {-1, 1}) {
        auto n = c;
        n[a] += s;
        if (n[a] < 0 || n[a] >= dims[a] || !g.node[g.grid.index(n[0], n[1], n[2])]) {
          g.boundary[idx] = 1;
          break;
        }
      }
  }
  g.components = connected_components(g.grid, g.node, g.cuts);
  g.floating.assign(g.components.count, 1);
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    if (g.boundary[idx]) g.floating[g.components.label[idx] - 1] = 0;
  if (!crack.empty() && g.components.count == 1)
    g.warning = "crack separates nothing at this resolution";
  return g;
}

HarmonicSolver::HarmonicSolver(std::shared_ptr<const CrackGraph> graph) : graph_(std::move(graph)) {
  const CrackGraph& g = *graph_;
  unknown_.assign(g.grid.size(), -1);
  int n = 0;
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    if (g.node[idx] && !g.boundary[idx] && !g.floating[g.components.label[idx] - 1]) unknown_[idx] = n++;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (2 * g.dimension() + 1));
  std::vector<double> diag(n, 0.0);
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    for (int a = 0; a < g.dimension(); ++a) {
      if (!g.has_edge(idx, a)) continue;
      const std::size_t j = neighbour(g.grid, idx, a);
      const int ui = unknown_[idx], uj = unknown_[j];
      if (ui >= 0) diag[ui] += 1.0;
      if (uj >= 0) diag[uj] += 1.0;
      if (ui >= 0 && uj >= 0) {
        trip.emplace_back(ui, uj, -1.0);
        trip.emplace_back(uj, ui, -1.0);
      }
    }
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, diag[i]);
  a_.resize(n, n);
  a_.setFromTriplets(trip.begin(), trip.end());
  a_.makeCompressed();
  if (n > 0) amg_ = std::make_unique<AmgPreconditioner>(a_);
}

ScalarField HarmonicSolver::solve(const BoundaryData& data, double rtol) const {
  const CrackGraph& g = *graph_;
  ScalarField u;
  u.graph = graph_;
  u.values.assign(g.grid.size(), 0.0);
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    if (g.boundary[idx] && !g.floating[g.components.label[idx] - 1]) u.values[idx] = data(g.grid.center(idx));
  const int n = static_cast<int>(a_.rows());
  if (n == 0) return u;
  Vector b = Vector::Zero(n);
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    for (int a = 0; a < g.dimension(); ++a) {
      if (!g.has_edge(idx, a)) continue;
      const std::size_t j = neighbour(g.grid, idx, a);
      const int ui = unknown_[idx], uj = unknown_[j];
      if (ui >= 0 && uj < 0) b[ui] += u.values[j];
      if (uj >= 0 && ui < 0) b[uj] += u.values[idx];
    }
  // start from the mean boundary value: exact for constant data
  double mean = 0.0;
  std::size_t nb = 0;
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    if (g.boundary[idx]) mean += u.values[idx], ++nb;
  Vector x = Vector::Constant(n, nb ? mean / nb : 0.0);
  u.solve = pcg(a_, b, x, amg_.get(), rtol, 500);
  if (!u.solve.converged) throw std::runtime_error("minimize_energy: conjugate gradients did not converge");
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    if (unknown_[idx] >= 0) u.values[idx] = x[unknown_[idx]];
  return u;
}

ScalarField minimize_energy(std::shared_ptr<const CrackGraph> graph, const BoundaryData& g) {
  return HarmonicSolver(std::move(graph)).solve(g);
}

double ScalarField::energy(const Vec3& x, double r) const {
  const CrackGraph& g = *graph;
  const double h = g.step();
  const double cell = std::pow(h, g.dimension() - 2);
  double e = 0.0;
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    for (int a = 0; a < g.dimension(); ++a) {
      if (!g.has_edge(idx, a)) continue;
      const std::size_t j = neighbour(g.grid, idx, a);
      Vec3 mid = g.grid.center(idx);
      mid[a] += 0.5 * h;
      const double w = ramp_weight(dist(mid, x), r, h);
      if (w == 0.0) continue;
      const double d = values[idx] - values[j];
      e += w * d * d * cell;
    }
  return e;
}

double normalized_energy(const ScalarField& u, const Vec3& x, double r) {
  const CrackGraph& g = *u.graph;
  if (r < 4 * g.step()) throw std::invalid_argument("normalized_energy: radius below four cells");
  if (dist(x, g.ball.center) + r > g.ball.radius * (1 + 1e-12))
    throw std::invalid_argument("normalized_energy: ball leaves the domain");
  return u.energy(x, r) / std::pow(r, g.dimension() - 1);
}

std::vector<double> radius_sweep(double lo, double hi, int n) {
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) r[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return r;
}

namespace {

/// E(r) about the ball center for many radii from one pass over the edges.
std::vector<double> radial_energies(const ScalarField& u, const std::vector<double>& radii) {
  const CrackGraph& g = *u.graph;
  const double h = g.step();
  const double cell = std::pow(h, g.dimension() - 2);
  std::vector<std::pair<double, double>> edges;  // (distance, energy)
  for (std::size_t idx = 0; idx < g.grid.size(); ++idx)
    for (int a = 0; a < g.dimension(); ++a) {
      if (!g.has_edge(idx, a)) continue;
      const double d = u.values[idx] - u.values[neighbour(g.grid, idx, a)];
      if (d == 0.0) continue;
      Vec3 mid = g.grid.center(idx);
      mid[a] += 0.5 * h;
      edges.emplace_back(dist(mid, g.ball.center), d * d * cell);
    }
  std::sort(edges.begin(), edges.end());
  std::vector<double> prefix(edges.size() + 1, 0.0);
  for (std::size_t i = 0; i < edges.size(); ++i) prefix[i + 1] = prefix[i] + edges[i].second;
  std::vector<double> out;
  for (double r : radii) {
    const auto lo = std::lower_bound(edges.begin(), edges.end(), std::pair{r - 0.5 * h, -1.0});
    const auto hi = std::lower_bound(edges.begin(), edges.end(), std::pair{r + 0.5 * h, -1.0});
    double e = prefix[lo - edges.begin()];
    for (auto it = lo; it != hi; ++it) e += ramp_weight(it->first, r, h) * it->second;
    out.push_back(e);
  }
  return out;
}

}  // namespace

double EnergyProfile::worst_drop() const {
  double w = 0.0;
  for (std::size_t i = 1; i < omega2.size(); ++i)
    if (omega2[i - 1] > 0) w = std::max(w, (omega2[i - 1] - omega2[i]) / omega2[i - 1]);
  return w;
}

EnergyProfile energy_profile(const ScalarField& u, const std::vector<double>& radii, double fit_lo,
                             double fit_hi) {
  const CrackGraph& g = *u.graph;
  EnergyProfile p;
  p.radii = radii;
  p.fit_lo = fit_lo;
  p.fit_hi = fit_hi;
  p.energy = radial_energies(u, radii);
  const int n1 = g.dimension() - 1;
  for (std::size_t i = 0; i < radii.size(); ++i) p.omega2.push_back(p.energy[i] / std::pow(radii[i], n1));
  p.vacuous = std::all_of(p.energy.begin(), p.energy.end(), [](double e) { return e == 0.0; });
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (p.omega2[i] < p.omega2[i - 1])
      p.violations.emplace_back(radii[i], (p.omega2[i - 1] - p.omega2[i]) / p.omega2[i - 1]);
  if (p.vacuous) return p;

  // log-log least squares on the fit window
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] >= fit_lo - 1e-12 && radii[i] <= fit_hi + 1e-12 && p.omega2[i] > 0) {
      lx.push_back(std::log(radii[i]));
      ly.push_back(std::log(p.omega2[i]));
    }
  const double n = static_cast<double>(lx.size());
  if (n >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / n, my += ly[i] / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    p.gamma_hat = sxy / sxx;
    double ss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double res = ly[i] - my - p.gamma_hat * (lx[i] - mx);
      ss += res * res;
    }
    const double se = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
    p.gamma_lo = p.gamma_hat - 2 * se;
    p.gamma_hi = p.gamma_hat + 2 * se;
  }
  return p;
}

void EnergyProfile::write_csv(std::ostream& out) const {
  out << "r,E,omega2\n";
  out.precision(12);
  for (std::size_t i = 0; i < radii.size(); ++i) out << radii[i] << ',' << energy[i] << ',' << omega2[i] << '\n';
}

EnergyProfile EnergyProfile::read_csv(std::istream& in) {
  EnergyProfile p;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("r,", 0) == 0) continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double r, e, w;
    if (!(ls >> r >> e >> w)) throw std::runtime_error("profile CSV: malformed row");
    p.radii.push_back(r);
    p.energy.push_back(e);
    p.omega2.push_back(w);
  }
  if (p.radii.empty()) throw std::runtime_error("profile CSV: no rows");
  return p;
}

DifferentialReport differential_inequality_check(const ScalarField& u, const std::vector<double>& radii) {
  DifferentialReport rep;
  const auto e = radial_energies(u, radii);
  rep.vacuous = true;
  for (std::size_t i = 1; i + 1 < radii.size(); ++i) {
    const double de = (e[i + 1] - e[i - 1]) / (radii[i + 1] - radii[i - 1]);
    if (e[i] <= 0.0 || de <= 0.0) continue;
    rep.vacuous = false;
    const double ratio = e[i] / (radii[i] * de);
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.at_radius = radii[i];
    }
  }
  return rep;
}

CrackSet tube_crack(double eps, double spacing) {
  std::vector<std::array<Vec3, 2>> segs{{Vec3{-1.05, eps, 0}, Vec3{1.05, eps, 0}},
                                         {Vec3{-1.05, -eps, 0}, Vec3{1.05, -eps, 0}}};
  return CrackSet(extrude_segments(segs, 0.05, spacing), spacing);
}

TubeResult tube_counterexample(double eps, double m, int resolution) {
  const Ball ball({}, 1.0);
  const double step = 2.0 * ball.radius / resolution;
  if (eps < 4 * step * (1 - 1e-9)) throw std::invalid_argument("tube_counterexample: eps below four cells");
  auto graph = std::make_shared<const CrackGraph>(discretize(tube_crack(eps, 0.02), resolution, 2, ball));
  TubeResult out;
  out.field = minimize_energy(graph, [&](const Vec3& p) {
    return (p.x < 0 && std::abs(p.y) < eps) ? m : 0.0;
  });
  out.profile = energy_profile(out.field, radius_sweep(0.1, 0.9, 64), 0.2, 0.9);
  out.total_energy = out.field.energy({}, 2.0);
  return out;
}

BoundaryData random_smooth_data(std::uint64_t seed, int dimension) {
  CounterRng rng(seed, "boundary-data");
  struct Wave {
    Vec3 k;
    double amp, phase;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 6; ++i) {
    Vec3 k = rng.in_ball({}, 3.0);
    if (dimension == 2) k.z = 0;
    waves.push_back({k, rng.normal(), rng.uniform(0, 2 * std::numbers::pi)});
  }
  return [waves](const Vec3& p) {
    double s = 0;
    for (const auto& w : waves) s += w.amp * std::sin(dot(w.k, p) + w.phase);
    return s;
  };
}

DecayReport decay_experiment(const CrackSet& crack, const FlatnessReport& certificate,
                             const std::vector<BoundaryData>& samples, double r, double gamma,
                             int resolution, double tol) {
  if (!certificate.pass || certificate.threshold <= 0.0)
    throw std::invalid_argument("decay_experiment: crack has no passing (eps0, eps) certificate");
  const Ball ball({}, 1.0);
  auto graph = std::make_shared<const CrackGraph>(discretize(crack, resolution, 3, ball));
  const HarmonicSolver solver(graph);
  DecayReport rep;
  rep.bound = std::pow(r, gamma) * (1 + tol);
  rep.pass = true;
  for (const auto& g : samples) {
    const ScalarField u = solver.solve(g);
    const auto e = radial_energies(u, {r, 1.0});
    const double w1 = e[1];
    const double ratio = w1 > 0 ? (e[0] / (r * r)) / w1 : 0.0;
    rep.ratios.push_back(ratio);
    rep.worst = std::max(rep.worst, ratio);
    if (ratio > rep.bound) rep.pass = false;
  }
  return rep;
}

}  // namespace conelab
