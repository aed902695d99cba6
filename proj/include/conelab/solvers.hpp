#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

namespace conelab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Smoothed-aggregation algebraic multigrid for symmetric M-matrix-like
/// systems; one symmetric V-cycle per application.
class AmgPreconditioner {
 public:
  struct Options {
    double strength = 0.02;
    double jacobi_weight = 2.0 / 3.0;  // prolongator smoothing
    int coarse_size = 400;
    int max_levels = 20;
  };

  AmgPreconditioner() = default;
  explicit AmgPreconditioner(const SparseMatrix& a) : AmgPreconditioner(a, Options{}) {}
  AmgPreconditioner(const SparseMatrix& a, const Options& opt);

  /// z = M^{-1} r.
  void apply(const Vector& r, Vector& z) const;
  int levels() const { return static_cast<int>(levels_.size()); }
  /// Total nonzeros over all levels divided by the fine-level nonzeros.
  double operator_complexity() const;

 private:
  struct Level {
    SparseMatrix a;
    SparseMatrix p, r;  // prolongation to this level's parent, restriction
    Vector inv_diag;
  };
  void cycle(std::size_t l, const Vector& b, Vector& x) const;

  std::vector<Level> levels_;
  Eigen::LLT<Eigen::MatrixXd> coarse_;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients for SPD `a`. The relative residual is
/// measured against ||b||; x holds the initial guess on entry.
CgResult pcg(const SparseMatrix& a, const Vector& b, Vector& x, const AmgPreconditioner* m,
             double rtol = 1e-10, int max_iter = 2000);

/// Smallest eigenpairs of the generalized problem K v = lambda M v, K and M
/// symmetric, M positive definite, on the M-orthogonal complement of
/// `deflate` (may be empty). Block inverse iteration with Rayleigh-Ritz;
/// solves with K + shift M use AMG-preconditioned CG.
struct EigenResult {
  std::vector<double> values;
  std::vector<Vector> vectors;
  int iterations = 0;
  bool converged = false;
};
EigenResult smallest_eigenpairs(const SparseMatrix& k, const SparseMatrix& m, int count,
                                const std::vector<Vector>& deflate, double shift = 1.0,
                                double tol = 1e-10, int max_iter = 500);

}  // namespace conelab
