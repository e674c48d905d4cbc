#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "fem.hpp"
#include "grid.hpp"
#include "media.hpp"
#include "ordering.hpp"
#include "sparsela.hpp"

namespace mcup {

struct CellOptions {
  double tol = 1e-10;
  SaddleMethod method = SaddleMethod::Auto;
};

/// Oversampled cell-problem solutions on one region.
///
/// Multipliers are kept in the un-normalized form: mu(i, p*N+j) multiplies
/// the integral of psi_j^p v in the cell equation. The normalized value
/// beta_ij^p is mu times the patch mass of continuum j (see beta()).
struct CellSolutionSet {
  OversampleRegion region;
  int N = 0;
  std::vector<VectorXd> phi;    // [i], nodal over region.sub
  std::vector<VectorXd> phi_m;  // [i*2+m]
  MatrixXd mass;                // N x P
  MatrixXd mu;                  // N x (P*N)
  MatrixXd mu_m;                // 2N x (P*N), row i*2+m
  Eigen::Matrix2Xd centroid;    // c_mj, global coordinates
  double constraint_residual = 0.0;
  double primal_residual = 0.0;

  int patch_count() const { return region.patch_count(); }
  double beta(int i, int j, int p) const { return mu(i, p * N + j) * mass(j, p); }
  double beta_m(int i, int m, int j, int p) const { return mu_m(i * 2 + m, p * N + j) * mass(j, p); }
};

namespace detail {

struct RegionData {
  SubGrid sub;
  int N = 0, P = 0, s = 0;
  int px = 0;
  std::vector<int> label;  // local cell -> continuum
  MatrixXd mass;           // N x P
};

inline RegionData region_data(const OversampleRegion& r, const ContinuumMap& map) {
  RegionData d;
  d.sub = r.sub;
  d.N = map.N;
  d.P = r.patch_count();
  d.s = r.s;
  d.px = r.patches_x();
  if (r.s < 2) throw ValidationError("cell problems need at least 2 fine cells per coarse cell side");
  d.label.resize(r.sub.cell_count());
  d.mass = MatrixXd::Zero(d.N, d.P);
  const double a = r.sub.h * r.sub.h;
  for (int lj = 0; lj < r.sub.cy; ++lj)
    for (int li = 0; li < r.sub.cx; ++li) {
      int lab = map.at(r.sub.i0 + li, r.sub.j0 + lj);
      d.label[lj * r.sub.cx + li] = lab;
      d.mass(lab, r.patch_of(li, lj)) += a;
    }
  const double patch_area = r.s * r.s * a;
  for (int p = 0; p < d.P; ++p)
    for (int j = 0; j < d.N; ++j)
      if (d.mass(j, p) < 1e-12 * patch_area)
        throw ValidationError("continuum " + std::to_string(j + 1) + " is empty on patch " +
                              std::to_string(p) + " of the region around coarse cell " +
                              std::to_string(r.target));
  return d;
}

}  // namespace detail

/// Factorized average-constraint system on an oversampled region; both the
/// average-type and moment-type cell problems share it.
class CellProblem {
public:
  CellProblem(const OversampleRegion& region, const ConductivityField& k, const ContinuumMap& map,
              const CellOptions& opt = {})
      : region_(region), opt_(opt), d_(detail::region_data(region, map)) {
    const SubGrid& g = region.sub;
    A_ = assemble_stiffness(g, k);
    const int n = g.node_count(), N = d_.N;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(g.cell_count()) * 4);
    const double q = g.h * g.h / 4.0;
    for (int lj = 0; lj < g.cy; ++lj)
      for (int li = 0; li < g.cx; ++li) {
        int row = region.patch_of(li, lj) * N + d_.label[lj * g.cx + li];
        for (int nd : cell_nodes(g, li, lj)) t.emplace_back(row, nd, q);
      }
    C_.resize(d_.P * N, n);
    C_.setFromTriplets(t.begin(), t.end());
    std::vector<std::vector<int>> extras(d_.P);
    for (int p = 0; p < d_.P; ++p)
      for (int j = 0; j < N; ++j) extras[p].push_back(n + p * N + j);
    order_ = grid_dissection(g.cx, g.cy, d_.s, extras);
    SaddleOptions so;
    so.tol = opt.tol;
    so.method = opt.method;
    so.order = &order_;
    solver_ = std::make_unique<SaddleSolver>(A_, C_, so);
  }

  CellProblem(const CellProblem&) = delete;
  CellProblem& operator=(const CellProblem&) = delete;

  const detail::RegionData& data() const { return d_; }
  const SparseSym& stiffness() const { return A_; }
  const SparseSym& constraints() const { return C_; }

  /// Solve with constraint values g; returns the field and mu = -lambda.
  SaddleSolution solve(const VectorXd& g) const {
    SaddleSolution s = solver_->solve(VectorXd::Zero(A_.rows()), g);
    s.multipliers = -s.multipliers;
    return s;
  }

  /// Continuum centroids over the target patch, in region-local coordinates.
  Eigen::Matrix2Xd local_centroids() const {
    const SubGrid& g = region_.sub;
    Eigen::Matrix2Xd c = Eigen::Matrix2Xd::Zero(2, d_.N);
    VectorXd w = VectorXd::Zero(d_.N);
    for (int lj = region_.target_lj(); lj < region_.target_lj() + d_.s; ++lj)
      for (int li = region_.target_li(); li < region_.target_li() + d_.s; ++li) {
        int j = d_.label[lj * g.cx + li];
        c(0, j) += (li + 0.5) * g.h;
        c(1, j) += (lj + 0.5) * g.h;
        w[j] += 1.0;
      }
    for (int j = 0; j < d_.N; ++j) c.col(j) /= w[j];
    return c;
  }

  /// Right-hand side of the moment constraints for phi_i^m.
  VectorXd moment_rhs(int i, int m, const Eigen::Matrix2Xd& c_local) const {
    const SubGrid& g = region_.sub;
    VectorXd r = VectorXd::Zero(C_.rows());
    const double a = g.h * g.h;
    for (int lj = 0; lj < g.cy; ++lj)
      for (int li = 0; li < g.cx; ++li) {
        if (d_.label[lj * g.cx + li] != i) continue;
        double x = ((m == 0 ? li : lj) + 0.5) * g.h;
        r[region_.patch_of(li, lj) * d_.N + i] += a * (x - c_local(m, i));
      }
    return r;
  }

private:
  OversampleRegion region_;
  CellOptions opt_;
  detail::RegionData d_;
  SparseSym A_, C_;
  std::vector<int> order_;
  std::unique_ptr<SaddleSolver> solver_;
};

namespace detail {

inline CellSolutionSet empty_set(const OversampleRegion& region, const CellProblem& cp) {
  CellSolutionSet s;
  s.region = region;
  s.N = cp.data().N;
  s.mass = cp.data().mass;
  return s;
}

inline void fill_avg(CellSolutionSet& s, const CellProblem& cp) {
  const int N = s.N, P = s.patch_count();
  s.phi.resize(N);
  s.mu.resize(N, P * N);
  for (int i = 0; i < N; ++i) {
    VectorXd g = VectorXd::Zero(P * N);
    for (int p = 0; p < P; ++p) g[p * N + i] = s.mass(i, p);
    SaddleSolution sol = cp.solve(g);
    s.phi[i] = sol.x;
    s.mu.row(i) = sol.multipliers.transpose();
    s.constraint_residual = std::max(s.constraint_residual, sol.constraint_residual);
    s.primal_residual = std::max(s.primal_residual, sol.primal_residual);
  }
}

inline void fill_grad(CellSolutionSet& s, const CellProblem& cp) {
  const int N = s.N, P = s.patch_count();
  Eigen::Matrix2Xd cl = cp.local_centroids();
  s.centroid = cl;
  s.centroid.row(0).array() += s.region.sub.i0 * s.region.sub.h;
  s.centroid.row(1).array() += s.region.sub.j0 * s.region.sub.h;
  s.phi_m.resize(2 * N);
  s.mu_m.resize(2 * N, P * N);
  for (int i = 0; i < N; ++i)
    for (int m = 0; m < 2; ++m) {
      SaddleSolution sol = cp.solve(cp.moment_rhs(i, m, cl));
      s.phi_m[i * 2 + m] = sol.x;
      s.mu_m.row(i * 2 + m) = sol.multipliers.transpose();
      s.constraint_residual = std::max(s.constraint_residual, sol.constraint_residual);
      s.primal_residual = std::max(s.primal_residual, sol.primal_residual);
    }
}

}  // namespace detail

/// Average-type cell problems: phi_i with unit average on continuum i of every patch.
inline CellSolutionSet solve_avg_cells(const OversampleRegion& region, const ConductivityField& k,
                                       const ContinuumMap& map, const CellOptions& opt = {}) {
  CellProblem cp(region, k, map, opt);
  CellSolutionSet s = detail::empty_set(region, cp);
  detail::fill_avg(s, cp);
  return s;
}

/// Moment-type cell problems: phi_i^m reproducing the centred x_m moments of continuum i.
inline CellSolutionSet solve_grad_cells(const OversampleRegion& region, const ConductivityField& k,
                                        const ContinuumMap& map, const CellOptions& opt = {}) {
  CellProblem cp(region, k, map, opt);
  CellSolutionSet s = detail::empty_set(region, cp);
  detail::fill_grad(s, cp);
  return s;
}

/// Both families from one factorization.
inline CellSolutionSet solve_cells(const OversampleRegion& region, const ConductivityField& k,
                                   const ContinuumMap& map, const CellOptions& opt = {}) {
  CellProblem cp(region, k, map, opt);
  CellSolutionSet s = detail::empty_set(region, cp);
  detail::fill_avg(s, cp);
  detail::fill_grad(s, cp);
  return s;
}

/// Relative violations of the multiplier identities.
struct IdentityReport {
  double row_sum = 0.0;        // sum_{j,p} beta_ij^p = 0
  double energy_sum = 0.0;     // sum_p beta_is^p = energy(phi_i, phi_s)
  double moment_energy = 0.0;  // sum_p beta_ik^{mp} = energy(phi_i^m, phi_k)
  double worst() const { return std::max({row_sum, energy_sum, moment_energy}); }
};

inline IdentityReport check_identities(const CellSolutionSet& s, const ConductivityField& k) {
  IdentityReport rep;
  const int N = s.N, P = s.patch_count();
  const SubGrid& g = s.region.sub;
  double kmax = 0.0;
  for (int lj = 0; lj < g.cy; ++lj)
    for (int li = 0; li < g.cx; ++li) kmax = std::max(kmax, k.at(g.i0 + li, g.j0 + lj));
  const double floor = 1e-14 * kmax * g.area();
  if (!s.phi.empty()) {
    double scale = floor;
    MatrixXd E(N, N), B = MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      double sum = 0.0, mag = 0.0;
      for (int j = 0; j < N; ++j)
        for (int p = 0; p < P; ++p) {
          sum += s.beta(i, j, p);
          mag += std::abs(s.beta(i, j, p));
          B(i, j) += s.beta(i, j, p);
        }
      rep.row_sum = std::max(rep.row_sum, std::abs(sum) / std::max(mag, floor));
      for (int j = 0; j < N; ++j) {
        E(i, j) = energy(g, k, s.phi[i], s.phi[j]);
        scale = std::max(scale, std::abs(E(i, j)));
      }
    }
    rep.energy_sum = (B - E).lpNorm<Eigen::Infinity>() / scale;
  }
  if (!s.phi_m.empty() && !s.phi.empty()) {
    double scale = floor, worst = 0.0;
    for (int i = 0; i < N; ++i)
      for (int m = 0; m < 2; ++m)
        for (int kk = 0; kk < N; ++kk) {
          double e = energy(g, k, s.phi_m[i * 2 + m], s.phi[kk]);
          double b = 0.0;
          for (int p = 0; p < P; ++p) b += s.beta_m(i, m, kk, p);
          scale = std::max(scale, std::abs(e));
          worst = std::max(worst, std::abs(b - e));
        }
    rep.moment_energy = worst / scale;
  }
  return rep;
}

/// Single-RVE cell problems with simultaneous average and gradient constraints.
/// Multipliers are returned normalized (multiplied by the continuum mass).
struct GradConstrainedSet {
  int N = 0;
  int omega = 0;
  SubGrid rve;
  VectorXd mass;                // N
  std::vector<VectorXd> phi;    // [i]
  std::vector<VectorXd> phi_m;  // [i*2+m]
  MatrixXd beta;                // beta_ij from phi_i, average rows
  std::vector<MatrixXd> alpha;  // [n]: alpha_ij^n from phi_i, gradient rows
  std::vector<MatrixXd> beta_m;     // [m]: beta_ij^m from phi_i^m, average rows
  std::vector<MatrixXd> alpha_mn;   // [m*2+n]: alpha_ij^mn from phi_i^m, gradient rows
  double constraint_residual = 0.0;
  double primal_residual = 0.0;
};

inline GradConstrainedSet solve_gradconstraint_cells(const CoarseGrid& cg, int omega,
                                                     const ConductivityField& k,
                                                     const ContinuumMap& map,
                                                     const CellOptions& opt = {}) {
  OversampleRegion r = oversample(cg, omega, 0);
  detail::RegionData d = detail::region_data(r, map);
  const SubGrid& g = r.sub;
  const int n = g.node_count(), N = d.N;
  SparseSym A = assemble_stiffness(g, k);
  std::vector<Triplet> t;
  for (int j = 0; j < N; ++j) {
    auto add = [&](int row, const Functional& f) {
      for (int i = 0; i < n; ++i)
        if (f.coeffs[i] != 0.0) t.emplace_back(row, i, f.coeffs[i]);
    };
    add(3 * j, indicator_functional(g, map, j, g));
    add(3 * j + 1, gradient_functional(g, map, j, g, 0));
    add(3 * j + 2, gradient_functional(g, map, j, g, 1));
  }
  SparseSym C(3 * N, n);
  C.setFromTriplets(t.begin(), t.end());
  std::vector<std::vector<int>> extras(1);
  for (int r2 = 0; r2 < 3 * N; ++r2) extras[0].push_back(n + r2);
  std::vector<int> order = grid_dissection(g.cx, g.cy, r.s, extras);
  SaddleOptions so;
  so.tol = opt.tol;
  so.method = opt.method;
  so.order = &order;
  SaddleSolver solver(A, C, so);

  GradConstrainedSet out;
  out.N = N;
  out.omega = omega;
  out.rve = g;
  out.mass = d.mass.col(0);
  out.phi.resize(N);
  out.phi_m.resize(2 * N);
  out.beta = MatrixXd::Zero(N, N);
  out.alpha.assign(2, MatrixXd::Zero(N, N));
  out.beta_m.assign(2, MatrixXd::Zero(N, N));
  out.alpha_mn.assign(4, MatrixXd::Zero(N, N));
  auto run = [&](const VectorXd& rhs) {
    SaddleSolution s = solver.solve(VectorXd::Zero(n), rhs);
    s.multipliers = -s.multipliers;
    out.constraint_residual = std::max(out.constraint_residual, s.constraint_residual);
    out.primal_residual = std::max(out.primal_residual, s.primal_residual);
    return s;
  };
  for (int i = 0; i < N; ++i) {
    VectorXd rhs = VectorXd::Zero(3 * N);
    rhs[3 * i] = out.mass[i];
    SaddleSolution s = run(rhs);
    out.phi[i] = s.x;
    for (int j = 0; j < N; ++j) {
      out.beta(i, j) = s.multipliers[3 * j] * out.mass[j];
      for (int nn = 0; nn < 2; ++nn) out.alpha[nn](i, j) = s.multipliers[3 * j + 1 + nn] * out.mass[j];
    }
    for (int m = 0; m < 2; ++m) {
      VectorXd rm = VectorXd::Zero(3 * N);
      rm[3 * i + 1 + m] = out.mass[i];
      SaddleSolution sm = run(rm);
      out.phi_m[i * 2 + m] = sm.x;
      for (int j = 0; j < N; ++j) {
        out.beta_m[m](i, j) = sm.multipliers[3 * j] * out.mass[j];
        for (int nn = 0; nn < 2; ++nn)
          out.alpha_mn[m * 2 + nn](i, j) = sm.multipliers[3 * j + 1 + nn] * out.mass[j];
      }
    }
  }
  return out;
}

/// Largest |phi_i| over nodes touching both continua inside the given cells.
inline double interface_oscillation(const SubGrid& g, const ContinuumMap& map,
                                    const std::vector<VectorXd>& fields, const SubGrid& cells) {
  std::vector<int> seen(g.node_count(), 0);  // bit j set if a cell of continuum j touches
  for (int gj = cells.j0; gj < cells.j0 + cells.cy; ++gj)
    for (int gi = cells.i0; gi < cells.i0 + cells.cx; ++gi)
      for (int nd : cell_nodes(g, gi - g.i0, gj - g.j0)) seen[nd] |= 1 << map.at(gi, gj);
  double worst = 0.0;
  for (int nd = 0; nd < g.node_count(); ++nd) {
    int bits = seen[nd];
    if (bits == 0 || (bits & (bits - 1)) == 0) continue;
    for (const auto& f : fields) worst = std::max(worst, std::abs(f[nd]));
  }
  return worst;
}

}  // namespace mcup
