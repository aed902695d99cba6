#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "conelab/crack.hpp"
#include "conelab/geometry.hpp"

namespace conelab {

/// Uniform cell grid; cell (i,j,k) has center lo + (i+1/2, j+1/2, k+1/2)*step.
/// A 2D grid has nz == 1 and its single layer of centers at z = lo.z + step/2.
struct CellGrid {
  Vec3 lo;
  double step = 1.0;
  int nx = 0, ny = 0, nz = 0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
  int dimension() const { return nz == 1 ? 2 : 3; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const int i = static_cast<int>(idx % nx);
    const int j = static_cast<int>((idx / nx) % ny);
    const int k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
    return {i, j, k};
  }
  Vec3 center(int i, int j, int k) const {
    return lo + Vec3{(i + 0.5) * step, (j + 0.5) * step, (k + 0.5) * step};
  }
  Vec3 center(std::size_t idx) const {
    const auto c = coords(idx);
    return center(c[0], c[1], c[2]);
  }
  /// Index of the cell containing p, or -1 if outside the grid.
  long long locate(const Vec3& p) const;

  /// n cells across the ball's bounding cube.
  static CellGrid cube(const Ball& ball, int n);
  /// n x n cells across the ball's bounding square in the plane z = ball.center.z.
  static CellGrid square(const Ball& ball, int n);
};

/// Bit a of the result at cell idx is set iff the segment from the center of
/// idx to the center of its +axis-a neighbour crosses a crack triangle.
/// Only edges with both endpoints active are tested (all if active is empty).
std::vector<std::uint8_t> cut_edges(const CellGrid& grid, const CrackSet& crack,
                                    const std::vector<char>& active = {}, double slack = 1e-12);

struct Components {
  std::vector<int> label;          // 0 = inactive, else 1..count
  int count = 0;
  std::vector<std::size_t> sizes;  // sizes[c-1]
};

/// Face-adjacent connected components of active cells, labels assigned in
/// scan order (i fastest). Edges flagged in `cuts` are not traversed.
Components connected_components(const CellGrid& grid, const std::vector<char>& active,
                                const std::vector<std::uint8_t>& cuts = {});

/// Active mask of cells whose centers lie strictly inside the ball.
std::vector<char> cells_in_ball(const CellGrid& grid, const Ball& ball);

}  // namespace conelab
