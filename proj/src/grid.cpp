#include "conelab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conelab {

long long CellGrid::locate(const Vec3& p) const {
  const long long i = static_cast<long long>(std::floor((p.x - lo.x) / step));
  const long long j = static_cast<long long>(std::floor((p.y - lo.y) / step));
  const long long k = nz == 1 ? 0 : static_cast<long long>(std::floor((p.z - lo.z) / step));
  if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return -1;
  return static_cast<long long>(index(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)));
}

CellGrid CellGrid::cube(const Ball& ball, int n) {
  if (n < 2) throw std::invalid_argument("CellGrid::cube: need at least 2 cells");
  CellGrid g;
  g.step = 2.0 * ball.radius / n;
  g.lo = ball.center - Vec3{ball.radius, ball.radius, ball.radius};
  g.nx = g.ny = g.nz = n;
  return g;
}

CellGrid CellGrid::square(const Ball& ball, int n) {
  if (n < 2) throw std::invalid_argument("CellGrid::square: need at least 2 cells");
  CellGrid g;
  g.step = 2.0 * ball.radius / n;
  g.lo = ball.center - Vec3{ball.radius, ball.radius, 0.5 * g.step};
  g.nx = g.ny = n;
  g.nz = 1;
  return g;
}

std::vector<std::uint8_t> cut_edges(const CellGrid& g, const CrackSet& crack,
                                    const std::vector<char>& active, double slack) {
  std::vector<std::uint8_t> cuts(g.size(), 0);
  const bool masked = !active.empty();
  const int axes = g.dimension();
  const int hi_idx[3] = {g.nx - 1, g.ny - 1, g.nz - 1};
  for (const Triangle& t : crack.triangles()) {
    int r0[3], r1[3];
    bool empty = false;
    for (int a = 0; a < 3; ++a) {
      const double lo = std::min({t[0][a], t[1][a], t[2][a]});
      const double hi = std::max({t[0][a], t[1][a], t[2][a]});
      r0[a] = std::max(0, static_cast<int>(std::floor((lo - g.lo[a]) / g.step - 0.5)) - 1);
      r1[a] = std::min(hi_idx[a], static_cast<int>(std::floor((hi - g.lo[a]) / g.step - 0.5)) + 1);
      if (r1[a] < r0[a]) empty = true;
    }
    if (empty) continue;
    for (int k = r0[2]; k <= r1[2]; ++k)
      for (int j = r0[1]; j <= r1[1]; ++j)
        for (int i = r0[0]; i <= r1[0]; ++i) {
          const std::size_t idx = g.index(i, j, k);
          if (masked && !active[idx]) continue;
          const Vec3 p = g.center(i, j, k);
          for (int a = 0; a < axes; ++a) {
            if (cuts[idx] & (1u << a)) continue;
            int n[3] = {i, j, k};
            if (++n[a] > hi_idx[a]) continue;
            const std::size_t nidx = g.index(n[0], n[1], n[2]);
            if (masked && !active[nidx]) continue;
            if (segment_intersects_triangle(p, g.center(n[0], n[1], n[2]), t, slack))
              cuts[idx] |= static_cast<std::uint8_t>(1u << a);
          }
        }
  }
  return cuts;
}

Components connected_components(const CellGrid& g, const std::vector<char>& active,
                                const std::vector<std::uint8_t>& cuts) {
  Components out;
  out.label.assign(g.size(), 0);
  const bool has_cuts = !cuts.empty();
  const int axes = g.dimension();
  std::vector<std::size_t> stack;
  const std::size_t stride[3] = {1, static_cast<std::size_t>(g.nx),
                                 static_cast<std::size_t>(g.nx) * g.ny};
  const int dims[3] = {g.nx, g.ny, g.nz};
  for (std::size_t seed = 0; seed < g.size(); ++seed) {
    if (!active[seed] || out.label[seed] != 0) continue;
    const int lab = ++out.count;
    std::size_t size = 0;
    out.label[seed] = lab;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      ++size;
      const auto ijk = g.coords(c);
      for (int a = 0; a < axes; ++a) {
        // +a neighbour: edge stored at c
        if (ijk[a] + 1 < dims[a]) {
          const std::size_t n = c + stride[a];
          if (active[n] && out.label[n] == 0 && !(has_cuts && (cuts[c] & (1u << a)))) {
            out.label[n] = lab;
            stack.push_back(n);
          }
        }
        // -a neighbour: edge stored at n
        if (ijk[a] > 0) {
          const std::size_t n = c - stride[a];
          if (active[n] && out.label[n] == 0 && !(has_cuts && (cuts[n] & (1u << a)))) {
            out.label[n] = lab;
            stack.push_back(n);
          }
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

std::vector<char> cells_in_ball(const CellGrid& g, const Ball& ball) {
  std::vector<char> mask(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) mask[i] = ball.contains(g.center(i)) ? 1 : 0;
  return mask;
}

}  // namespace conelab
