#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "conelab/cone.hpp"
#include "conelab/geometry.hpp"

namespace conelab {

/// Uniform hash grid over axis-aligned boxes; stores item ids per cell.
class BoxHash {
 public:
  BoxHash() = default;
  explicit BoxHash(double cell) : cell_(cell) {}

  double cell() const { return cell_; }
  void insert(int id, const Vec3& lo, const Vec3& hi);
  /// Ids of items whose boxes may overlap [lo, hi]; may contain duplicates.
  void query(const Vec3& lo, const Vec3& hi, std::vector<int>& out) const;
  bool empty() const { return cells_.empty(); }

 private:
  struct Key {
    long long i, j, k;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  Key key(const Vec3& p) const;

  double cell_ = 1.0;
  std::unordered_map<Key, std::vector<int>, KeyHash> cells_;
};

/// Sampled 2-set: a triangle soup with a point cloud on it and spatial
/// indices for ball queries and nearest-triangle queries.
class CrackSet {
 public:
  CrackSet() = default;
  /// Samples each triangle on a barycentric lattice of spacing <= h.
  CrackSet(std::vector<Triangle> triangles, double h);

  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Vec3>& samples() const { return samples_; }
  double sample_spacing() const { return h_; }
  const Ball& extent() const { return extent_; }
  bool empty() const { return triangles_.empty(); }

  /// Indices of samples strictly inside the ball.
  std::vector<int> samples_in_ball(const Ball& ball) const;
  bool any_sample_in_ball(const Ball& ball) const;
  /// Indices of triangles whose bounding boxes meet the box [lo, hi].
  std::vector<int> triangles_near(const Vec3& lo, const Vec3& hi) const;

  /// Exact Euclidean distance to the union of triangles (inf if empty).
  double distance(const Vec3& p) const;
  /// Same, but may return `cap` whenever the true distance exceeds it.
  double distance_capped(const Vec3& p, double cap) const;

  bool segment_crosses(const Vec3& p, const Vec3& q, double slack = 1e-12) const;

  /// Triangles with all three vertices outside every ball; samples likewise.
  CrackSet without_balls(std::span<const Ball> balls) const;

 private:
  void build_indices();

  std::vector<Triangle> triangles_;
  std::vector<Vec3> samples_;
  double h_ = 0.0;
  Ball extent_;
  BoxHash tri_index_;
  BoxHash sample_index_;
};

// ---------------------------------------------------------------------------
// Builders for the crack shapes used by tests, experiments and the CLI.

/// Triangulates cone ∩ (ball grown by one spacing) on sheet-aligned lattices;
/// sheets sharing a spine edge share its vertices bitwise.
std::vector<Triangle> mesh_cone(const MinimalCone& cone, const Ball& ball, double spacing);

/// Drops triangles whose centroid lies in the ball.
std::vector<Triangle> punch_hole(std::vector<Triangle> tris, const Ball& hole);

using DisplacementField = std::function<Vec3(const Vec3&)>;
/// x -> x + g(x) applied to every vertex; shared vertices stay shared.
std::vector<Triangle> displace(std::vector<Triangle> tris, const DisplacementField& g);

/// C^2 bump (1 - t^2)^3 on [0, 1), zero beyond.
double bump(double t);

/// A localized oscillation: amplitude * bump(|x-c|/support) * cos(k (x-c).u)
/// along `direction`. Displaced points stay within `support` of c when
/// amplitude < support/2.
struct Wrinkle {
  Vec3 center;
  double support = 0.01;
  double amplitude = 0.0;
  Vec3 direction{0, 0, 1};
  double wavenumber = 0.0;
  Vec3 phase_axis{1, 0, 0};

  Vec3 operator()(const Vec3& x) const;
};

/// Extrudes planar segments (z = 0) into vertical strips |z| <= half_height,
/// so a 2D crack can be cut against segments lying in the plane z = 0.
std::vector<Triangle> extrude_segments(const std::vector<std::array<Vec3, 2>>& segments,
                                       double half_height, double spacing);

/// Icosphere of the given subdivision level.
std::vector<Triangle> sphere_triangles(const Vec3& center, double radius, int level);

/// ASCII triangle soup: one triangle per line, nine floats.
std::vector<Triangle> read_triangle_soup(std::istream& in);
std::vector<Triangle> read_triangle_soup_file(const std::string& path);
void write_triangle_soup(std::ostream& out, const std::vector<Triangle>& tris);

}  // namespace conelab
