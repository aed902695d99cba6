#pragma once

#include <functional>
#include <vector>

namespace conelab {

struct NelderMeadOptions {
  int max_evals = 400;
  double f_tol = 1e-7;  // absolute spread of simplex values
  double x_tol = 1e-7;  // simplex diameter
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;
};

/// Derivative-free minimization from x0 with initial simplex edges `step`.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const std::vector<double>& step,
                             const NelderMeadOptions& opt = {});

}  // namespace conelab
