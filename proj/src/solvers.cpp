#include "conelab/solvers.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conelab {

namespace {

/// Greedy aggregation on the strength graph; returns the aggregate of each
/// row and the aggregate count.
std::vector<int> aggregate(const SparseMatrix& a, double theta, int& count) {
  const int n = static_cast<int>(a.rows());
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  Vector diag = a.diagonal();

  std::vector<int> start(n + 1, 0), strong;
  strong.reserve(a.nonZeros());
  std::vector<double> weight;
  weight.reserve(a.nonZeros());
  for (int i = 0; i < n; ++i) {
    for (int p = outer[i]; p < outer[i + 1]; ++p) {
      const int j = inner[p];
      if (j == i) continue;
      const double s = std::abs(val[p]);
      if (s >= theta * std::sqrt(std::abs(diag[i] * diag[j]))) {
        strong.push_back(j);
        weight.push_back(s);
      }
    }
    start[i + 1] = static_cast<int>(strong.size());
  }

  std::vector<int> agg(n, -1);
  count = 0;
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    bool free = true;
    for (int p = start[i]; p < start[i + 1] && free; ++p) free = agg[strong[p]] < 0;
    if (!free) continue;
    agg[i] = count;
    for (int p = start[i]; p < start[i + 1]; ++p) agg[strong[p]] = count;
    ++count;
  }
  const std::vector<int> first = agg;
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    double best = -1.0;
    for (int p = start[i]; p < start[i + 1]; ++p)
      if (first[strong[p]] >= 0 && weight[p] > best) {
        best = weight[p];
        agg[i] = first[strong[p]];
      }
  }
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    agg[i] = count;
    for (int p = start[i]; p < start[i + 1]; ++p)
      if (agg[strong[p]] < 0) agg[strong[p]] = count;
    ++count;
  }
  return agg;
}

void gauss_seidel(const SparseMatrix& a, const Vector& inv_diag, const Vector& b, Vector& x,
                  bool forward) {
  const int n = static_cast<int>(a.rows());
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  auto relax = [&](int i) {
    double s = b[i];
    for (int p = outer[i]; p < outer[i + 1]; ++p)
      if (inner[p] != i) s -= val[p] * x[inner[p]];
    x[i] = s * inv_diag[i];
  };
  if (forward)
    for (int i = 0; i < n; ++i) relax(i);
  else
    for (int i = n - 1; i >= 0; --i) relax(i);
}

}  // namespace

AmgPreconditioner::AmgPreconditioner(const SparseMatrix& a0, const Options& opt) {
  SparseMatrix a = a0;
  a.makeCompressed();
  while (true) {
    Level lev;
    lev.a = a;
    lev.inv_diag = a.diagonal().cwiseInverse();
    const bool last = a.rows() <= opt.coarse_size || static_cast<int>(levels_.size()) + 1 >= opt.max_levels;
    if (last) {
      levels_.push_back(std::move(lev));
      break;
    }
    int nagg = 0;
    const std::vector<int> agg = aggregate(a, opt.strength, nagg);
    if (nagg >= a.rows() * 0.9) {  // aggregation stalled
      levels_.push_back(std::move(lev));
      break;
    }
    SparseMatrix pt(a.rows(), nagg);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(a.rows());
    for (int i = 0; i < a.rows(); ++i) trip.emplace_back(i, agg[i], 1.0);
    pt.setFromTriplets(trip.begin(), trip.end());
    SparseMatrix dinv_a = lev.inv_diag.asDiagonal() * a;
    const SparseMatrix smooth = dinv_a * pt;
    SparseMatrix p = pt - opt.jacobi_weight * smooth;
    p.prune(0.0);
    p.makeCompressed();
    SparseMatrix r = p.transpose();
    const SparseMatrix ap = a * p;
    SparseMatrix ac = r * ap;
    ac.prune(1e-14, 1.0);
    ac.makeCompressed();
    lev.p = std::move(p);
    lev.r = std::move(r);
    levels_.push_back(std::move(lev));
    a = std::move(ac);
  }
  coarse_.compute(Eigen::MatrixXd(levels_.back().a));
  if (coarse_.info() != Eigen::Success) throw std::runtime_error("AMG: coarse matrix is not SPD");
}

double AmgPreconditioner::operator_complexity() const {
  double total = 0.0;
  for (const auto& l : levels_) total += static_cast<double>(l.a.nonZeros());
  return total / static_cast<double>(levels_.front().a.nonZeros());
}

void AmgPreconditioner::cycle(std::size_t l, const Vector& b, Vector& x) const {
  const Level& lev = levels_[l];
  if (l + 1 == levels_.size()) {
    x = coarse_.solve(b);
    return;
  }
  x.setZero(b.size());
  gauss_seidel(lev.a, lev.inv_diag, b, x, true);
  const Vector res = b - lev.a * x;
  const Vector bc = lev.r * res;
  Vector xc;
  cycle(l + 1, bc, xc);
  x += lev.p * xc;
  gauss_seidel(lev.a, lev.inv_diag, b, x, false);
}

void AmgPreconditioner::apply(const Vector& r, Vector& z) const { cycle(0, r, z); }

CgResult pcg(const SparseMatrix& a, const Vector& b, Vector& x, const AmgPreconditioner* m,
             double rtol, int max_iter) {
  CgResult out;
  const double bnorm = b.norm();
  if (x.size() != b.size()) x = Vector::Zero(b.size());
  if (bnorm == 0.0) {
    x.setZero();
    out.converged = true;
    return out;
  }
  Vector r = b - a * x;
  Vector z;
  if (m) m->apply(r, z); else z = r;
  Vector p = z;
  double rz = r.dot(z);
  out.relative_residual = r.norm() / bnorm;
  while (out.relative_residual > rtol && out.iterations < max_iter) {
    const Vector ap = a * p;
    const double alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    ++out.iterations;
    out.relative_residual = r.norm() / bnorm;
    if (out.relative_residual <= rtol) break;
    if (m) m->apply(r, z); else z = r;
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  // true residual, not the recurrence
  out.relative_residual = (b - a * x).norm() / bnorm;
  out.converged = out.relative_residual <= rtol * 10;
  return out;
}

EigenResult smallest_eigenpairs(const SparseMatrix& k, const SparseMatrix& m, int count,
                                const std::vector<Vector>& deflate, double shift, double tol,
                                int max_iter) {
  const int n = static_cast<int>(k.rows());
  const int block = std::min(n - static_cast<int>(deflate.size()), count + 3);
  if (block < count || count < 1) throw std::invalid_argument("smallest_eigenpairs: bad count");
  SparseMatrix ks = k + shift * m;
  ks.makeCompressed();
  const AmgPreconditioner amg(ks);

  std::vector<Vector> dm;  // M-normalized deflation vectors
  for (const Vector& d : deflate) {
    Vector v = d;
    for (const Vector& e : dm) v -= e * e.dot(m * v);
    v /= std::sqrt(v.dot(m * v));
    dm.push_back(v);
  }
  auto project = [&](Vector& v) {
    for (const Vector& e : dm) v -= e * e.dot(m * v);
  };

  // deterministic start: smooth-ish pseudo-random columns
  Eigen::MatrixXd x(n, block);
  std::uint64_t s = 0x9e3779b97f4a7c15ULL;
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i) {
      s ^= s << 13, s ^= s >> 7, s ^= s << 17;
      x(i, j) = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
    }

  EigenResult out;
  std::vector<double> prev(count, 0.0);
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    // inverse iteration step: solve (K + shift M) y = M x
    Eigen::MatrixXd y(n, block);
    for (int j = 0; j < block; ++j) {
      Vector col = x.col(j);
      project(col);
      const Vector rhs = m * col;
      Vector sol = col;
      pcg(ks, rhs, sol, &amg, 1e-12, 1000);
      project(sol);
      y.col(j) = sol;
    }
    // Rayleigh-Ritz on span(y)
    Eigen::MatrixXd ky(n, block), my(n, block);
    for (int j = 0; j < block; ++j) {
      ky.col(j) = k * y.col(j);
      my.col(j) = m * y.col(j);
    }
    Eigen::MatrixXd kr = y.transpose() * ky, mr = y.transpose() * my;
    kr = 0.5 * (kr + kr.transpose());
    mr = 0.5 * (mr + mr.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(kr, mr);
    if (ges.info() != Eigen::Success) throw std::runtime_error("smallest_eigenpairs: Ritz step failed");
    x = y * ges.eigenvectors();
    double change = 0.0;
    for (int j = 0; j < count; ++j) {
      const double lam = ges.eigenvalues()(j);
      change = std::max(change, std::abs(lam - prev[j]) / (std::abs(lam) + shift));
      prev[j] = lam;
    }
    if (it > 0 && change < tol) {
      out.converged = true;
      break;
    }
  }
  for (int j = 0; j < count; ++j) {
    Vector v = x.col(j);
    v /= std::sqrt(v.dot(m * v));
    out.values.push_back(v.dot(k * v));
    out.vectors.push_back(v);
  }
  return out;
}

}  // namespace conelab
