#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "conelab/cone.hpp"
#include "conelab/solvers.hpp"

namespace conelab {

/// Coarse triangulation of a spherical domain on the unit sphere. Boundary
/// edges carry the index of the great-circle arc they belong to.
struct SphericalSeed {
  struct Edge {
    int a = 0, b = 0;
    int arc = 0;
  };
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Edge> boundary;
  int arc_count = 0;
  std::vector<int> dirichlet_arcs;
};

/// Seed for component `component` of S^2 minus the cone (taken about the
/// cone center). P: 0 is {x2 > 0} in the reference frame, 1 the other side;
/// arc 0 is the equator. Y: lune k lies between sheets k and k+1 (arcs 0, 1).
/// T: triangle k is opposite tetrahedron vertex k; arc i is the side facing
/// its i-th vertex in increasing vertex order. Throws std::invalid_argument on
/// a bad component.
SphericalSeed component_seed(const MinimalCone& cone, int component);
/// Whole sphere, no boundary.
SphericalSeed sphere_seed();
/// Half of the reference Y lune 0 cut by the equator: arcs 0, 1 are the
/// meridians, arc 2 the equator (Dirichlet).
SphericalSeed half_lune_seed();
/// Half of the reference T triangle `component` cut by its symmetry axis
/// through its `axis`-th vertex: arc 0 is the cut (Dirichlet), arcs 1, 2 the
/// old sides.
SphericalSeed half_triangle_seed(int component, int axis);

struct SurfaceMesh {
  struct BoundaryEdge {
    int a = 0, b = 0;
    int arc = 0;
    bool dirichlet = false;
  };

  double radius = 1.0;
  Vec3 center;
  Mat3 rotation;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;
  int level = 0;
  SphericalSeed seed;  // with the placement above this reproduces any level

  /// Longest edge.
  double mesh_size() const;
  double area() const;
  std::vector<char> dirichlet_vertices() const;
  bool pure_neumann() const;
  /// Throws std::runtime_error unless every edge has one or two triangles,
  /// one-triangle edges are exactly the tagged boundary, and all vertices lie
  /// on the sphere.
  void validate() const;
  SurfaceMesh scaled(double s) const;
  /// OFF with an extra line per boundary edge: "# boundary a b arc D|N".
  void write_off(std::ostream& out) const;
};

/// `levels` rounds of great-circle edge bisection of the seed, placed on the
/// sphere of radius r about `center` after the rotation.
SurfaceMesh refine_seed(const SphericalSeed& seed, double r, int levels,
                        const Mat3& rotation = Mat3::identity(), const Vec3& center = {});
/// Fewest levels with mesh_size() <= target_h.
SurfaceMesh mesh_seed(const SphericalSeed& seed, double r, double target_h,
                      const Mat3& rotation = Mat3::identity(), const Vec3& center = {});
SurfaceMesh mesh_domain(const MinimalCone& cone, double r, int component, double target_h,
                        const std::vector<int>& dirichlet_arcs = {});

/// P1 forms on the free (non-Dirichlet) vertices; index maps vertex -> row.
struct FemSystem {
  SparseMatrix stiffness, mass;
  std::vector<int> index;  // -1 on Dirichlet vertices
};
FemSystem assemble(const SurfaceMesh& mesh);

struct SpectralResult {
  double lambda1 = 0.0;
  Vector eigenvector;  // over all vertices, zero on Dirichlet ones
  double h = 0.0;
  double lambda_coarse = 0.0;  // one level coarser
  double h_coarse = 0.0;
  double extrapolated = 0.0;   // (4 lambda(h) - lambda(2h)) / 3
  int iterations = 0;
};

/// Smallest eigenvalues of the mesh, constants deflated when `deflate_constants`.
std::vector<double> lowest_eigenvalues(const SurfaceMesh& mesh, int count, bool deflate_constants);

/// First positive eigenvalue (constants deflated for pure Neumann) with a
/// two-level extrapolation. Throws std::runtime_error on stagnation or a
/// negative value.
SpectralResult first_eigenvalue(const SurfaceMesh& mesh);

struct MixedReport {
  double lambda_triangle = 0.0;        // pure Neumann on the full T triangle
  double mu_half_triangle = 0.0;       // Dirichlet on the symmetry cut
  double mu_half_lune = 0.0;           // Dirichlet on the equator
  std::array<double, 2> neumann_half_lune{};  // lowest two, zero mode included
  std::array<double, 2> mixed_half_lune{};
  bool symmetric = false;
  bool pass = false;
};
/// Single eigenvalues are extrapolated. pass requires |mu_half_lune - 2| <=
/// 2 tol, lambda_triangle >= mu_half_lune (1 - tol) and the mixed half-lune
/// eigenvalues to dominate the Neumann ones index by index. Throws
/// std::invalid_argument when the axis is not a symmetry of the mesh.
MixedReport mixed_comparison(int component, int axis, double target_h, double tol = 0.02);

/// A smooth function of the unit direction.
using SphereField = std::function<double(const Vec3&)>;

/// Random polynomial of degree <= degree in the direction coordinates.
SphereField band_limited_field(std::uint64_t seed, int degree = 4);

struct PoincareReport {
  std::vector<double> ratios;
  double max_ratio = 0.0;
  int skipped = 0;  // zero-gradient fields
  bool pass = false;  // max_ratio <= 0.5 * (1 + slack)
};
/// Ratio of the mean-free L2 mass to radius^2 times the Dirichlet energy,
/// fields evaluated at (x - center) / radius. Requires a pure-Neumann mesh.
PoincareReport poincare_check(const SurfaceMesh& mesh, const std::vector<SphereField>& fields,
                              double slack = 0.03);

}  // namespace conelab
