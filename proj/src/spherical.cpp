#include "conelab/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "conelab/rng.hpp"

namespace conelab {

namespace {

using Edge = SphericalSeed::Edge;

Vec3 bisect(const Vec3& a, const Vec3& b) { return normalized(a + b); }

/// Fan of three triangles around the projected centroid of (a, b, c); the
/// sides become boundary arcs arc_ab, arc_bc, arc_ca.
SphericalSeed fan_triangle(const Vec3& a, const Vec3& b, const Vec3& c, int arc_ab, int arc_bc,
                           int arc_ca) {
  SphericalSeed s;
  s.vertices = {a, b, c, normalized(a + b + c)};
  s.triangles = {{0, 1, 3}, {1, 2, 3}, {2, 0, 3}};
  s.boundary = {{0, 1, arc_ab}, {1, 2, arc_bc}, {2, 0, arc_ca}};
  s.arc_count = 3;
  return s;
}

std::array<int, 3> triangle_vertices(int component) {
  std::array<int, 3> v{};
  int n = 0;
  for (int i = 0; i < 4; ++i)
    if (i != component) v[n++] = i;
  return v;
}

std::pair<int, int> key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

SphericalSeed component_seed(const MinimalCone& cone, int component) {
  SphericalSeed s;
  switch (cone.type()) {
    case ConeType::P: {
      if (component < 0 || component > 1) throw std::invalid_argument("component_seed: P has components 0, 1");
      const double side = component == 0 ? 1.0 : -1.0;
      s.vertices = {{0, side, 0}, {1, 0, 0}, {0, 0, 1}, {-1, 0, 0}, {0, 0, -1}};
      for (int i = 0; i < 4; ++i) {
        s.triangles.push_back({0, 1 + i, 1 + (i + 1) % 4});
        s.boundary.push_back({1 + i, 1 + (i + 1) % 4, 0});
      }
      s.arc_count = 1;
      break;
    }
    case ConeType::Y: {
      if (component < 0 || component > 2) throw std::invalid_argument("component_seed: Y has components 0..2");
      const Vec3 d0 = reference::kPropRays[component];
      const Vec3 d1 = reference::kPropRays[(component + 1) % 3];
      s.vertices = {{0, 0, 1}, {0, 0, -1}, d0, bisect(d0, d1), d1};
      s.triangles = {{0, 2, 3}, {0, 3, 4}, {1, 3, 2}, {1, 4, 3}};
      s.boundary = {{0, 2, 0}, {2, 1, 0}, {0, 4, 1}, {4, 1, 1}};
      s.arc_count = 2;
      break;
    }
    case ConeType::T: {
      if (component < 0 || component > 3) throw std::invalid_argument("component_seed: T has components 0..3");
      const auto v = triangle_vertices(component);
      const auto& a = reference::kTetraVertices;
      // arc i faces vertex i
      s = fan_triangle(a[v[0]], a[v[1]], a[v[2]], 2, 0, 1);
      break;
    }
  }
  return s;
}

SphericalSeed sphere_seed() {
  SphericalSeed s;
  s.vertices = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int sx : {0, 1})
    for (int sy : {2, 3})
      for (int sz : {4, 5}) s.triangles.push_back({sx, sy, sz});
  return s;
}

SphericalSeed half_lune_seed() {
  SphericalSeed s;
  const Vec3 d0 = reference::kPropRays[0];
  const Vec3 d1 = reference::kPropRays[1];
  s.vertices = {{0, 0, 1}, d0, bisect(d0, d1), d1};
  s.triangles = {{0, 1, 2}, {0, 2, 3}};
  s.boundary = {{0, 1, 0}, {0, 3, 1}, {1, 2, 2}, {2, 3, 2}};
  s.arc_count = 3;
  s.dirichlet_arcs = {2};
  return s;
}

SphericalSeed half_triangle_seed(int component, int axis) {
  if (component < 0 || component > 3 || axis < 0 || axis > 2)
    throw std::invalid_argument("half_triangle_seed: bad component or axis");
  const auto v = triangle_vertices(component);
  const auto& a = reference::kTetraVertices;
  const Vec3 p = a[v[axis]];
  const Vec3 q = a[v[(axis + 1) % 3]];
  const Vec3 m = bisect(q, a[v[(axis + 2) % 3]]);
  SphericalSeed s = fan_triangle(p, q, m, 1, 2, 0);
  s.dirichlet_arcs = {0};
  return s;
}

double SurfaceMesh::mesh_size() const {
  double h = 0.0;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e) h = std::max(h, dist(vertices[t[e]], vertices[t[(e + 1) % 3]]));
  return h;
}

double SurfaceMesh::area() const {
  double s = 0.0;
  for (const auto& t : triangles)
    s += 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
  return s;
}

std::vector<char> SurfaceMesh::dirichlet_vertices() const {
  std::vector<char> d(vertices.size(), 0);
  for (const auto& e : boundary)
    if (e.dirichlet) d[e.a] = d[e.b] = 1;
  return d;
}

bool SurfaceMesh::pure_neumann() const {
  return std::none_of(boundary.begin(), boundary.end(), [](const BoundaryEdge& e) { return e.dirichlet; });
}

void SurfaceMesh::validate() const {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : triangles) {
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw std::runtime_error("mesh: degenerate triangle");
    for (int e = 0; e < 3; ++e) ++count[key(t[e], t[(e + 1) % 3])];
  }
  std::map<std::pair<int, int>, int> tagged;
  for (const auto& e : boundary) ++tagged[key(e.a, e.b)];
  for (const auto& [k, c] : count) {
    if (c > 2) throw std::runtime_error("mesh: nonmanifold edge");
    const bool is_tagged = tagged.count(k) > 0;
    if ((c == 1) != is_tagged) throw std::runtime_error("mesh: boundary tags do not match open edges");
  }
  for (const auto& [k, c] : tagged)
    if (c != 1 || count.count(k) == 0) throw std::runtime_error("mesh: stray boundary tag");
  for (const Vec3& v : vertices)
    if (std::abs(dist(v, center) - radius) > 1e-9 * radius) throw std::runtime_error("mesh: vertex off the sphere");
}

SurfaceMesh SurfaceMesh::scaled(double s) const {
  SurfaceMesh m = *this;
  m.radius = radius * s;
  for (Vec3& v : m.vertices) v = center + (v - center) * s;
  return m;
}

void SurfaceMesh::write_off(std::ostream& out) const {
  out << "OFF\n" << vertices.size() << ' ' << triangles.size() << " 0\n";
  out.precision(17);
  for (const Vec3& v : vertices) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : boundary)
    out << "# boundary " << e.a << ' ' << e.b << ' ' << e.arc << ' ' << (e.dirichlet ? 'D' : 'N') << '\n';
}

SurfaceMesh refine_seed(const SphericalSeed& seed, double r, int levels, const Mat3& rotation,
                        const Vec3& center) {
  if (levels < 0 || r <= 0.0) throw std::invalid_argument("refine_seed: bad level or radius");
  std::vector<Vec3> verts = seed.vertices;
  std::vector<std::array<int, 3>> tris = seed.triangles;
  std::vector<Edge> bnd = seed.boundary;
  for (int l = 0; l < levels; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto [it, fresh] = mid.try_emplace(key(a, b), static_cast<int>(verts.size()));
      if (fresh) verts.push_back(bisect(verts[a], verts[b]));
      return it->second;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * tris.size());
    for (const auto& t : tris) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
    std::vector<Edge> nb;
    for (const Edge& e : bnd) {
      const int m = midpoint(e.a, e.b);
      nb.push_back({e.a, m, e.arc});
      nb.push_back({m, e.b, e.arc});
    }
    bnd = std::move(nb);
  }
  SurfaceMesh mesh;
  mesh.radius = r;
  mesh.center = center;
  mesh.rotation = rotation;
  mesh.level = levels;
  mesh.seed = seed;
  mesh.vertices.reserve(verts.size());
  for (const Vec3& v : verts) mesh.vertices.push_back(center + r * (rotation * normalized(v)));
  mesh.triangles = std::move(tris);
  for (const Edge& e : bnd) {
    const bool d = std::find(seed.dirichlet_arcs.begin(), seed.dirichlet_arcs.end(), e.arc) !=
                   seed.dirichlet_arcs.end();
    mesh.boundary.push_back({e.a, e.b, e.arc, d});
  }
  return mesh;
}

SurfaceMesh mesh_seed(const SphericalSeed& seed, double r, double target_h, const Mat3& rotation,
                      const Vec3& center) {
  if (target_h <= 0.0) throw std::invalid_argument("mesh_seed: target_h must be positive");
  for (int l = 0;; ++l) {
    SurfaceMesh m = refine_seed(seed, r, l, rotation, center);
    if (m.mesh_size() <= target_h) return m;
    if (l >= 11) throw std::invalid_argument("mesh_seed: target_h too small");
  }
}

SurfaceMesh mesh_domain(const MinimalCone& cone, double r, int component, double target_h,
                        const std::vector<int>& dirichlet_arcs) {
  SphericalSeed seed = component_seed(cone, component);
  for (int a : dirichlet_arcs)
    if (a < 0 || a >= seed.arc_count) throw std::invalid_argument("mesh_domain: no such boundary arc");
  seed.dirichlet_arcs = dirichlet_arcs;
  SurfaceMesh m = mesh_seed(seed, r, target_h, cone.rotation(), cone.center());
  m.validate();
  return m;
}

FemSystem assemble(const SurfaceMesh& mesh) {
  FemSystem sys;
  const std::vector<char> dir = mesh.dirichlet_vertices();
  sys.index.assign(mesh.vertices.size(), -1);
  int n = 0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (!dir[i]) sys.index[i] = n++;
  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(9 * mesh.triangles.size());
  mt.reserve(9 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const double area =
        0.5 * norm(cross(mesh.vertices[t[1]] - mesh.vertices[t[0]], mesh.vertices[t[2]] - mesh.vertices[t[0]]));
    for (int e = 0; e < 3; ++e) {
      const int i = t[e], j = t[(e + 1) % 3], k = t[(e + 2) % 3];
      const Vec3 u = mesh.vertices[i] - mesh.vertices[k], v = mesh.vertices[j] - mesh.vertices[k];
      const double w = 0.5 * dot(u, v) / norm(cross(u, v));
      const int ri = sys.index[i], rj = sys.index[j];
      if (ri >= 0) kt.emplace_back(ri, ri, w);
      if (rj >= 0) kt.emplace_back(rj, rj, w);
      if (ri >= 0 && rj >= 0) {
        kt.emplace_back(ri, rj, -w);
        kt.emplace_back(rj, ri, -w);
      }
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int ra = sys.index[t[a]], rb = sys.index[t[b]];
        if (ra >= 0 && rb >= 0) mt.emplace_back(ra, rb, area / 12.0 * (a == b ? 2.0 : 1.0));
      }
  }
  sys.stiffness.resize(n, n);
  sys.mass.resize(n, n);
  sys.stiffness.setFromTriplets(kt.begin(), kt.end());
  sys.mass.setFromTriplets(mt.begin(), mt.end());
  sys.stiffness.makeCompressed();
  sys.mass.makeCompressed();
  return sys;
}

namespace {

EigenResult solve_modes(const SurfaceMesh& mesh, const FemSystem& sys, int count, bool deflate) {
  std::vector<Vector> defl;
  if (deflate) defl.push_back(Vector::Ones(sys.mass.rows()));
  const double shift = 1.0 / (mesh.radius * mesh.radius);
  EigenResult res = smallest_eigenpairs(sys.stiffness, sys.mass, count, defl, shift, 1e-11, 500);
  if (!res.converged) throw std::runtime_error("eigenvalue iteration stagnated");
  return res;
}

double single_eigenvalue(const SurfaceMesh& mesh, Vector* vec, int* iterations) {
  const FemSystem sys = assemble(mesh);
  const EigenResult res = solve_modes(mesh, sys, 1, mesh.pure_neumann());
  const double lam = res.values.front();
  if (lam < 0.0) throw std::runtime_error("negative first eigenvalue: assembly error");
  if (vec) {
    *vec = Vector::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
      if (sys.index[i] >= 0) (*vec)[static_cast<Eigen::Index>(i)] = res.vectors.front()[sys.index[i]];
  }
  if (iterations) *iterations = res.iterations;
  return lam;
}

}  // namespace

std::vector<double> lowest_eigenvalues(const SurfaceMesh& mesh, int count, bool deflate_constants) {
  const FemSystem sys = assemble(mesh);
  return solve_modes(mesh, sys, count, deflate_constants).values;
}

SpectralResult first_eigenvalue(const SurfaceMesh& mesh) {
  SpectralResult out;
  out.h = mesh.mesh_size();
  out.lambda1 = single_eigenvalue(mesh, &out.eigenvector, &out.iterations);
  out.extrapolated = out.lambda1;
  if (mesh.level > 0) {
    const SurfaceMesh coarse = refine_seed(mesh.seed, mesh.radius, mesh.level - 1, mesh.rotation, mesh.center);
    out.h_coarse = coarse.mesh_size();
    out.lambda_coarse = single_eigenvalue(coarse, nullptr, nullptr);
    out.extrapolated = (4.0 * out.lambda1 - out.lambda_coarse) / 3.0;
  }
  return out;
}

namespace {

/// Reflection through the plane spanned by the origin, p and q maps the
/// vertex set onto itself.
bool reflection_symmetric(const std::vector<Vec3>& verts, const Vec3& p, const Vec3& q) {
  const Vec3 n = normalized(cross(p, q));
  std::vector<Vec3> sorted = verts;
  std::sort(sorted.begin(), sorted.end(), lex_less);
  constexpr double tol = 1e-9;
  for (const Vec3& v : verts) {
    const Vec3 w = v - 2.0 * dot(v, n) * n;
    auto it = std::lower_bound(sorted.begin(), sorted.end(), Vec3{w.x - tol, -1e300, -1e300}, lex_less);
    bool found = false;
    for (; it != sorted.end() && it->x <= w.x + tol && !found; ++it) found = dist(*it, w) <= tol;
    if (!found) return false;
  }
  return true;
}

}  // namespace

MixedReport mixed_comparison(int component, int axis, double target_h, double tol) {
  if (component < 0 || component > 3 || axis < 0 || axis > 2)
    throw std::invalid_argument("mixed_comparison: bad component or axis");
  MixedReport rep;
  const MinimalCone t0 = make_cone(ConeType::T, {}, Mat3::identity());
  const SurfaceMesh tri = mesh_domain(t0, 1.0, component, target_h);
  const auto v = triangle_vertices(component);
  const auto& a = reference::kTetraVertices;
  rep.symmetric = reflection_symmetric(tri.vertices, a[v[axis]], a[v[(axis + 1) % 3]] + a[v[(axis + 2) % 3]]);
  if (!rep.symmetric) throw std::invalid_argument("mixed_comparison: axis is not a mesh symmetry");

  rep.lambda_triangle = first_eigenvalue(tri).extrapolated;
  rep.mu_half_triangle = first_eigenvalue(mesh_seed(half_triangle_seed(component, axis), 1.0, target_h)).extrapolated;

  SphericalSeed lune = half_lune_seed();
  const SurfaceMesh mixed = mesh_seed(lune, 1.0, target_h);
  rep.mu_half_lune = first_eigenvalue(mixed).extrapolated;
  lune.dirichlet_arcs.clear();
  const SurfaceMesh neumann = mesh_seed(lune, 1.0, target_h);
  const auto mv = lowest_eigenvalues(mixed, 2, false);
  const auto nv = lowest_eigenvalues(neumann, 2, false);
  rep.mixed_half_lune = {mv[0], mv[1]};
  rep.neumann_half_lune = {nv[0], nv[1]};

  rep.pass = std::abs(rep.mu_half_lune - 2.0) <= 2.0 * tol &&
             rep.lambda_triangle >= rep.mu_half_lune * (1.0 - tol) &&
             rep.mixed_half_lune[0] >= rep.neumann_half_lune[0] &&
             rep.mixed_half_lune[1] >= rep.neumann_half_lune[1];
  return rep;
}

SphereField band_limited_field(std::uint64_t seed, int degree) {
  CounterRng rng(seed, "band-limited");
  std::vector<std::array<int, 3>> powers;
  std::vector<double> coef;
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; i + j <= degree; ++j)
      for (int k = 0; i + j + k <= degree; ++k) {
        powers.push_back({i, j, k});
        coef.push_back(rng.normal());
      }
  return [powers, coef](const Vec3& x) {
    double s = 0.0;
    for (std::size_t m = 0; m < powers.size(); ++m)
      s += coef[m] * std::pow(x.x, powers[m][0]) * std::pow(x.y, powers[m][1]) * std::pow(x.z, powers[m][2]);
    return s;
  };
}

PoincareReport poincare_check(const SurfaceMesh& mesh, const std::vector<SphereField>& fields, double slack) {
  if (!mesh.pure_neumann()) throw std::invalid_argument("poincare_check: mesh must be pure Neumann");
  const FemSystem sys = assemble(mesh);
  const Vector ones = Vector::Ones(sys.mass.rows());
  const Vector m1 = sys.mass * ones;
  const double total = ones.dot(m1);
  PoincareReport rep;
  for (const SphereField& f : fields) {
    Vector u(sys.mass.rows());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
      u[sys.index[i]] = f((mesh.vertices[i] - mesh.center) / mesh.radius);
    const double mean = u.dot(m1) / total;
    const Vector w = u - Vector::Constant(u.size(), mean);
    const double mass = w.dot(sys.mass * w);
    const double energy = u.dot(sys.stiffness * u);
    if (energy <= 1e-12 * u.dot(sys.mass * u) / (mesh.radius * mesh.radius)) {
      ++rep.skipped;
      continue;
    }
    const double ratio = mass / (mesh.radius * mesh.radius * energy);
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  rep.pass = rep.max_ratio <= 0.5 * (1.0 + slack);
  return rep;
}

}  // namespace conelab
