#include "conelab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace conelab {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const std::vector<double>& step,
                             const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  std::vector<double> val(n + 1);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };
  for (std::size_t i = 0; i <= n; ++i) val[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  while (evals < opt.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return val[a] < val[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double diam = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) diam = std::max(diam, std::abs(pts[i][k] - pts[best][k]));
    if (val[worst] - val[best] <= opt.f_tol && diam <= opt.x_tol) break;
    if (diam <= opt.x_tol * 1e-3) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / n;

    for (std::size_t k = 0; k < n; ++k) xr[k] = centroid[k] + (centroid[k] - pts[worst][k]);
    const double fr = eval(xr);
    if (fr < val[best]) {
      for (std::size_t k = 0; k < n; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - pts[worst][k]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    for (std::size_t k = 0; k < n; ++k)
      xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k])
                      : centroid[k] + 0.5 * (pts[worst][k] - centroid[k]);
    const double fc = eval(xc);
    if (fc < std::min(fr, val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      val[i] = eval(pts[i]);
    }
  }
  const std::size_t b = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
  return {pts[b], val[b], evals};
}

}  // namespace conelab
