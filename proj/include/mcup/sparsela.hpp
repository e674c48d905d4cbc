#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "error.hpp"

namespace mcup {

using SparseSym = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Permutation taking original index order[k] to position k.
inline Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> permutation_from_order(
    const std::vector<int>& order) {
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P(static_cast<int>(order.size()));
  for (int k = 0; k < static_cast<int>(order.size()); ++k) P.indices()[order[k]] = k;
  return P;
}

namespace detail {

inline double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

/// Symmetric LDL^T without pivoting, in a caller-supplied or AMD order.
class Ldlt {
public:
  void compute(const SparseSym& K, const std::vector<int>* order) {
    n_ = static_cast<int>(K.rows());
    if (order) {
      if (static_cast<int>(order->size()) != n_) throw Error("ordering size mismatch");
      perm_ = permutation_from_order(*order);
      SparseSym Kp;
      Kp = K.twistedBy(perm_);
      natural_.compute(Kp);
      if (natural_.info() != Eigen::Success) throw SolverError("LDL^T factorization broke down");
      use_natural_ = true;
    } else {
      amd_.compute(K);
      if (amd_.info() != Eigen::Success) throw SolverError("LDL^T factorization broke down");
      use_natural_ = false;
    }
  }
  VectorXd solve(const VectorXd& b) const {
    if (use_natural_) return perm_.inverse() * natural_.solve(perm_ * b);
    return amd_.solve(b);
  }
  /// Pivots in the original numbering.
  VectorXd pivots() const {
    if (use_natural_) return perm_.inverse() * natural_.vectorD();
    return amd_.permutationPinv() * amd_.vectorD();
  }

private:
  int n_ = 0;
  bool use_natural_ = false;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
  Eigen::SimplicialLDLT<SparseSym, Eigen::Lower, Eigen::NaturalOrdering<int>> natural_;
  Eigen::SimplicialLDLT<SparseSym, Eigen::Lower, Eigen::AMDOrdering<int>> amd_;
};

}  // namespace detail

struct SpdOptions {
  double tol = 1e-10;
  int max_refinements = 6;
  const std::vector<int>* order = nullptr;
};

class SpdSolver {
public:
  SpdSolver() = default;
  explicit SpdSolver(const SparseSym& A, const SpdOptions& opt = {}) { compute(A, opt); }

  void compute(const SparseSym& A, const SpdOptions& opt = {}) {
    if (A.rows() != A.cols()) throw ValidationError("solve_spd: matrix is not square");
    A_ = A;
    opt_ = opt;
    ldl_.compute(A, opt.order);
    VectorXd d = ldl_.pivots();
    for (int i = 0; i < d.size(); ++i)
      if (!(d[i] > 0.0))
        throw SolverError("matrix is not positive definite: pivot " + std::to_string(i) +
                              " = " + std::to_string(d[i]),
                          d[i]);
  }

  VectorXd solve(const VectorXd& b) const {
    VectorXd x = ldl_.solve(b);
    double bn = detail::inf_norm(b);
    if (bn == 0.0) return VectorXd::Zero(b.size());
    double res = detail::inf_norm(b - A_ * x) / bn;
    for (int it = 0; it < opt_.max_refinements && res > 0.01 * opt_.tol; ++it) {
      VectorXd dx = ldl_.solve(b - A_ * x);
      VectorXd y = x + dx;
      double r2 = detail::inf_norm(b - A_ * y) / bn;
      if (!(r2 < res)) break;
      x = y;
      res = r2;
    }
    last_residual_ = res;
    if (!(res <= opt_.tol)) throw SolverError("SPD solve did not reach tolerance", res);
    return x;
  }
  double last_residual() const { return last_residual_; }

private:
  SparseSym A_;
  SpdOptions opt_;
  detail::Ldlt ldl_;
  mutable double last_residual_ = 0.0;
};

inline VectorXd solve_spd(const SparseSym& A, const VectorXd& b, double tol = 1e-10,
                          const std::vector<int>* order = nullptr) {
  if (A.rows() != b.size()) throw ValidationError("solve_spd: size mismatch");
  SpdOptions opt;
  opt.tol = tol;
  opt.order = order;
  SpdSolver s(A, opt);
  return s.solve(b);
}

struct SaddleSystem {
  SparseSym A;  // n x n, symmetric positive semidefinite
  SparseSym C;  // k x n
  VectorXd rhs_primal;
  VectorXd rhs_constraints;
};

enum class SaddleMethod { Direct, ProjectedCG, Auto };

struct SaddleOptions {
  double tol = 1e-10;
  SaddleMethod method = SaddleMethod::Auto;
  int max_refinements = 6;
  int max_cg_iterations = 20000;
  /// Elimination order over the n+k unknowns (multipliers numbered after the primal block).
  const std::vector<int>* order = nullptr;
};

struct SaddleSolution {
  VectorXd x;
  VectorXd multipliers;
  double primal_residual = 0.0;
  double constraint_residual = 0.0;
  int refinements = 0;
  bool used_fallback = false;
};

namespace detail {

inline void check_constraint_rows(const SparseSym& C) {
  SparseSym Ct = C.transpose();  // columns of Ct are rows of C
  std::map<std::vector<int>, std::vector<int>> by_pattern;
  for (int r = 0; r < Ct.outerSize(); ++r) {
    std::vector<int> pattern;
    bool any = false;
    for (SparseSym::InnerIterator it(Ct, r); it; ++it)
      if (it.value() != 0.0) {
        pattern.push_back(static_cast<int>(it.row()));
        any = true;
      }
    if (!any) throw SolverError("constraint row " + std::to_string(r) + " is empty");
    by_pattern[pattern].push_back(r);
  }
  for (auto& [pattern, rows] : by_pattern) {
    if (rows.size() < 2) continue;
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        VectorXd ra = Ct.col(rows[a]), rb = Ct.col(rows[b]);
        double s = ra.dot(rb) / ra.squaredNorm();
        if ((rb - s * ra).lpNorm<Eigen::Infinity>() <= 1e-14 * rb.lpNorm<Eigen::Infinity>())
          throw SolverError("constraint row " + std::to_string(rows[b]) +
                            " duplicates row " + std::to_string(rows[a]));
      }
  }
}

/// ||b - Ax - C^T lam|| / || |A||x| + |C^T||lam| + |b| ||, a normwise backward error.
inline double primal_residual(const SparseSym& A, const SparseSym& C, const VectorXd& b,
                              const VectorXd& x, const VectorXd& lam) {
  VectorXd r = b - A * x - C.transpose() * lam;
  SparseSym Aa = A.cwiseAbs(), Cta = SparseSym(C.transpose()).cwiseAbs();
  VectorXd scale = Aa * x.cwiseAbs() + Cta * lam.cwiseAbs() + b.cwiseAbs();
  double s = inf_norm(scale);
  if (s == 0.0) return 0.0;
  return inf_norm(r) / s;
}

}  // namespace detail

/// Worst per-row relative violation |C_r x - g_r| / max(|g_r|, sum |C_rn x_n|).
inline double constraint_residual(const SparseSym& C, const VectorXd& x, const VectorXd& g) {
  VectorXd r = C * x - g;
  SparseSym Ca = C.cwiseAbs();
  VectorXd scale = Ca * x.cwiseAbs();
  double worst = 0.0;
  for (int i = 0; i < r.size(); ++i) {
    double s = std::max(std::abs(g[i]), scale[i]);
    if (s == 0.0) continue;
    worst = std::max(worst, std::abs(r[i]) / s);
  }
  return worst;
}

/// Factorization of [[A, C^T], [C, 0]] reusable across right-hand sides.
class SaddleSolver {
public:
  SaddleSolver(const SparseSym& A, const SparseSym& C, const SaddleOptions& opt = {})
      : A_(A), C_(C), opt_(opt) {
    n_ = static_cast<int>(A.rows());
    k_ = static_cast<int>(C.rows());
    if (A.cols() != n_ || C.cols() != n_) throw ValidationError("saddle: dimension mismatch");
    if (k_ > n_) throw ValidationError("saddle: more constraints than unknowns");
    detail::check_constraint_rows(C);
    if (opt_.method != SaddleMethod::ProjectedCG) {
      try {
        factor();
        direct_ok_ = true;
      } catch (const SolverError&) {
        if (opt_.method == SaddleMethod::Direct) throw;
      }
    }
  }

  SaddleSolution solve(const VectorXd& b, const VectorXd& g) const {
    if (b.size() != n_ || g.size() != k_) throw ValidationError("saddle: rhs size mismatch");
    if (direct_ok_) {
      SaddleSolution s = solve_direct(b, g);
      if (s.primal_residual <= opt_.tol && s.constraint_residual <= opt_.tol) return s;
      if (opt_.method == SaddleMethod::Direct)
        throw SolverError("saddle solve did not reach tolerance",
                          std::max(s.primal_residual, s.constraint_residual));
    }
    SaddleSolution s = solve_projected_cg(b, g);
    s.used_fallback = true;
    if (!(s.primal_residual <= opt_.tol && s.constraint_residual <= opt_.tol))
      throw SolverError("saddle solve did not reach tolerance",
                        std::max(s.primal_residual, s.constraint_residual));
    return s;
  }

  int primal_size() const { return n_; }
  int constraint_count() const { return k_; }

private:
  void factor() {
    std::vector<Triplet> t;
    t.reserve(A_.nonZeros() + 2 * C_.nonZeros());
    for (int c = 0; c < A_.outerSize(); ++c)
      for (SparseSym::InnerIterator it(A_, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int c = 0; c < C_.outerSize(); ++c)
      for (SparseSym::InnerIterator it(C_, c); it; ++it) {
        t.emplace_back(n_ + it.row(), it.col(), it.value());
        t.emplace_back(it.col(), n_ + it.row(), it.value());
      }
    SparseSym K(n_ + k_, n_ + k_);
    K.setFromTriplets(t.begin(), t.end());
    ldl_.compute(K, opt_.order);
    VectorXd d = ldl_.pivots();
    int neg = 0;
    for (int i = 0; i < d.size(); ++i) neg += d[i] < 0.0;
    if (neg != k_) {
      int worst = n_;
      for (int r = n_; r < n_ + k_; ++r)
        if (std::abs(d[r]) < std::abs(d[worst])) worst = r;
      throw SolverError("saddle system is singular or rank deficient near constraint row " +
                        std::to_string(worst - n_));
    }
  }

  SaddleSolution solve_direct(const VectorXd& b, const VectorXd& g) const {
    VectorXd rhs(n_ + k_);
    rhs << b, g;
    VectorXd z = ldl_.solve(rhs);
    SaddleSolution s;
    auto eval = [&](const VectorXd& zz, double& pr, double& cr) {
      pr = detail::primal_residual(A_, C_, b, zz.head(n_), zz.tail(k_));
      cr = constraint_residual(C_, zz.head(n_), g);
    };
    double pr, cr;
    eval(z, pr, cr);
    int it = 0;
    for (; it < opt_.max_refinements && std::max(pr, cr) > 0.01 * opt_.tol; ++it) {
      VectorXd r(n_ + k_);
      r << b - A_ * z.head(n_) - C_.transpose() * z.tail(k_), g - C_ * z.head(n_);
      VectorXd z2 = z + ldl_.solve(r);
      double pr2, cr2;
      eval(z2, pr2, cr2);
      if (!(std::max(pr2, cr2) < std::max(pr, cr))) break;
      z = z2;
      pr = pr2;
      cr = cr2;
    }
    s.x = z.head(n_);
    s.multipliers = z.tail(k_);
    s.primal_residual = pr;
    s.constraint_residual = cr;
    s.refinements = it;
    return s;
  }

  // Projected preconditioned CG with a diagonal constraint preconditioner.
  SaddleSolution solve_projected_cg(const VectorXd& b, const VectorXd& g) const {
    VectorXd Ginv = A_.diagonal();
    double dmax = detail::inf_norm(Ginv);
    for (int i = 0; i < n_; ++i) Ginv[i] = 1.0 / std::max(Ginv[i], 1e-14 * dmax + 1e-300);
    SparseSym Ct = C_.transpose();
    MatrixXd S = MatrixXd(C_ * Ginv.asDiagonal() * Ct);
    Eigen::LDLT<MatrixXd> Sf(S);
    auto project = [&](const VectorXd& r) -> VectorXd {
      VectorXd w = Ginv.cwiseProduct(r);
      VectorXd y = Sf.solve(C_ * w);
      return Ginv.cwiseProduct(r - Ct * y);
    };
    VectorXd x = Ginv.cwiseProduct(Ct * Sf.solve(g));
    VectorXd r = A_ * x - b;
    VectorXd z = project(r);
    VectorXd p = -z;
    double rz = r.dot(z), rz0 = std::abs(rz);
    int it = 0;
    for (; it < opt_.max_cg_iterations && std::abs(rz) > 1e-30 * (1.0 + rz0); ++it) {
      VectorXd Ap = A_ * p;
      double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) break;
      double alpha = rz / pAp;
      x += alpha * p;
      r += alpha * Ap;
      VectorXd z2 = project(r);
      double rz2 = r.dot(z2);
      p = -z2 + (rz2 / rz) * p;
      rz = rz2;
      if (it % 20 == 0) {
        VectorXd lam = -Sf.solve(C_ * Ginv.cwiseProduct(r));
        if (detail::primal_residual(A_, C_, b, x, lam) <= 0.01 * opt_.tol) break;
      }
    }
    SaddleSolution s;
    s.x = x;
    s.multipliers = -Sf.solve(C_ * Ginv.cwiseProduct(A_ * x - b));
    s.primal_residual = detail::primal_residual(A_, C_, b, s.x, s.multipliers);
    s.constraint_residual = constraint_residual(C_, s.x, g);
    s.refinements = it;
    return s;
  }

  SparseSym A_;
  SparseSym C_;
  SaddleOptions opt_;
  int n_ = 0, k_ = 0;
  bool direct_ok_ = false;
  detail::Ldlt ldl_;
};

inline SaddleSolution solve_saddle(const SaddleSystem& S, const SaddleOptions& opt = {}) {
  SaddleSolver solver(S.A, S.C, opt);
  return solver.solve(S.rhs_primal, S.rhs_constraints);
}

struct EigenOptions {
  double tol = 1e-8;
  int dense_threshold = 3000;
  int max_iterations = 500;
  /// Shift sigma*B added before inverting; relative to trace(A)/trace(B).
  double shift = 1e-8;
};

struct EigenPairs {
  VectorXd values;   // ascending
  MatrixXd vectors;  // B-orthonormal columns
  double worst_residual = 0.0;
};

namespace detail {

/// Normwise backward error max_j ||A x_j - l_j B x_j|| / ((||A|| + |l_j| ||B||) ||x_j||).
inline double eig_residual(const SparseSym& A, const SparseSym& B, const VectorXd& l,
                           const MatrixXd& X) {
  auto inf_norm = [](const SparseSym& S) {
    VectorXd rs = VectorXd::Zero(S.rows());
    for (int k = 0; k < S.outerSize(); ++k)
      for (SparseSym::InnerIterator it(S, k); it; ++it) rs[it.row()] += std::abs(it.value());
    return rs.maxCoeff();
  };
  const double na = inf_norm(A), nb = inf_norm(B);
  double worst = 0.0;
  for (int j = 0; j < l.size(); ++j) {
    VectorXd x = X.col(j);
    VectorXd r = A * x - l[j] * (B * x);
    double scale = (na + std::abs(l[j]) * nb) * x.lpNorm<Eigen::Infinity>();
    if (scale > 0.0) worst = std::max(worst, r.lpNorm<Eigen::Infinity>() / scale);
  }
  return worst;
}

}  // namespace detail

/// The m smallest eigenpairs of A x = l B x.
inline EigenPairs smallest_eigpairs(const SparseSym& A, const SparseSym& B, int m,
                                    const EigenOptions& opt = {}) {
  const int n = static_cast<int>(A.rows());
  if (B.rows() != n || A.cols() != n || B.cols() != n) throw ValidationError("eigen: size mismatch");
  if (m < 1 || m > n) throw ValidationError("eigen: requested " + std::to_string(m) +
                                            " pairs of a problem of size " + std::to_string(n));
  EigenPairs out;
  if (n <= opt.dense_threshold) {
    MatrixXd Ad = MatrixXd(A), Bd = MatrixXd(B);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Ad, Bd);
    if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");
    out.values = es.eigenvalues().head(m);
    out.vectors = es.eigenvectors().leftCols(m);
    out.worst_residual = detail::eig_residual(A, B, out.values, out.vectors);
    if (!(out.worst_residual <= opt.tol))
      throw SolverError("dense eigensolve residual above tolerance", out.worst_residual);
    return out;
  }

  // Shift-invert subspace iteration with Rayleigh-Ritz.
  double sigma = opt.shift * A.diagonal().sum() / B.diagonal().sum();
  SparseSym K = A + sigma * B;
  // Accuracy is judged by the eigen residual below, not by the inner solves.
  SpdOptions kopt;
  kopt.tol = 1e-4;
  SpdSolver Kf(K, kopt);
  const int p = std::min(n, std::max(2 * m, m + 8));
  MatrixXd X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i)  // deterministic, smooth-ish start block
      X(i, j) = std::cos(0.7 * (j + 1) * (i + 1) / static_cast<double>(n) * 3.14159) + (j == 0);
  double res = 1.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    MatrixXd Y(n, p);
    MatrixXd BX = B * X;
    for (int j = 0; j < p; ++j) Y.col(j) = Kf.solve(BX.col(j));
    MatrixXd Ar = Y.transpose() * (A * Y);
    MatrixXd Br = Y.transpose() * (B * Y);
    Ar = 0.5 * (Ar + Ar.transpose()).eval();
    Br = 0.5 * (Br + Br.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Ar, Br);
    if (es.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz step failed");
    X = Y * es.eigenvectors();
    out.values = es.eigenvalues().head(m);
    out.vectors = X.leftCols(m);
    res = detail::eig_residual(A, B, out.values, out.vectors);
    if (res <= opt.tol) break;
  }
  out.worst_residual = res;
  if (!(res <= opt.tol)) throw SolverError("subspace iteration did not converge", res);
  return out;
}

}  // namespace mcup
