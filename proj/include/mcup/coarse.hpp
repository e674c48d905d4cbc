#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "effective.hpp"
#include "fem.hpp"
#include "grid.hpp"
#include "sparsela.hpp"

namespace mcup {

struct CoarseFlags {
  bool cross_terms = true;
};

/// Coupled coarse system over the free (interior) coarse nodes, N unknowns per node.
struct CoarseSystem {
  CoarseGrid grid;
  int N = 0;
  CoarseFlags flags;
  SparseSym K;
  VectorXd rhs;
  std::vector<int> free_index;  // coarse node -> interior index, -1 on the boundary
  int free_nodes = 0;

  int dof(int node, int i) const { return free_index[node] * N + i; }
};

struct CoarseSolution {
  int N = 0;
  int M = 0;
  bool cross_terms = true;
  std::vector<VectorXd> U;  // [i], nodal over (M+1)^2 coarse nodes
  double residual = 0.0;

  double node_value(int i, int a, int b) const { return U[i][b * (M + 1) + a]; }
  /// Exact mean of the Q1 field over coarse cell k.
  double cell_mean(int i, int k) const {
    int a = k % M, b = k / M;
    return 0.25 * (node_value(i, a, b) + node_value(i, a + 1, b) + node_value(i, a + 1, b + 1) +
                   node_value(i, a, b + 1));
  }
};

namespace detail {

struct CoarseElement {
  // Indices: a, b element nodes; m, n directions.
  double G[2][2][4][4] = {};  // integral of d_m N_a d_n N_b
  double Mass[4][4] = {};     // integral of N_a N_b
  double X[2][4][4] = {};     // integral of d_m N_a N_b
};

inline CoarseElement coarse_element(double H) {
  CoarseElement e;
  for (double eta : kGauss2)
    for (double xi : kGauss2) {
      double N[4] = {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
      double dN[2][4] = {{-(1 - eta) / H, (1 - eta) / H, eta / H, -eta / H},
                         {-(1 - xi) / H, -xi / H, xi / H, (1 - xi) / H}};
      double w = H * H / 4.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          e.Mass[a][b] += w * N[a] * N[b];
          for (int m = 0; m < 2; ++m) {
            e.X[m][a][b] += w * dN[m][a] * N[b];
            for (int n = 0; n < 2; ++n) e.G[m][n][a][b] += w * dN[m][a] * dN[n][b];
          }
        }
    }
  return e;
}

}  // namespace detail

inline CoarseSystem assemble_coarse(const CoarseGrid& cg, const std::vector<EffectiveCoefficients>& eff,
                                    const CoarseFlags& flags = {}) {
  if (static_cast<int>(eff.size()) != cg.cell_count())
    throw ValidationError("coarse assembly: expected coefficients for " +
                          std::to_string(cg.cell_count()) + " cells, got " +
                          std::to_string(eff.size()));
  const int N = eff.empty() ? 0 : eff[0].N;
  CoarseSystem sys;
  sys.grid = cg;
  sys.N = N;
  sys.flags = flags;
  const int M = cg.M;
  sys.free_index.assign(cg.node_count(), -1);
  for (int b = 1; b < M; ++b)
    for (int a = 1; a < M; ++a) sys.free_index[cg.node(a, b)] = sys.free_nodes++;
  const detail::CoarseElement E = detail::coarse_element(cg.H);
  std::vector<Triplet> t;
  sys.rhs = VectorXd::Zero(sys.free_nodes * N);
  for (int k = 0; k < cg.cell_count(); ++k) {
    const EffectiveCoefficients& e = eff[k];
    if (e.N != N || e.alpha_raw.size() != static_cast<std::size_t>(N * N * 4) ||
        e.source.size() != static_cast<std::size_t>(N))
      throw ValidationError("coarse assembly: missing or inconsistent coefficients for cell " +
                            std::to_string(k));
    const double rho = e.density();
    int a0 = cg.cell_a(k), b0 = cg.cell_b(k);
    std::array<int, 4> nodes = {cg.node(a0, b0), cg.node(a0 + 1, b0), cg.node(a0 + 1, b0 + 1),
                                cg.node(a0, b0 + 1)};
    for (int bb = 0; bb < 4; ++bb) {  // test node
      if (sys.free_index[nodes[bb]] < 0) continue;
      for (int j = 0; j < N; ++j) sys.rhs[sys.dof(nodes[bb], j)] += e.source[j] / 4.0;
      for (int aa = 0; aa < 4; ++aa) {  // trial node
        if (sys.free_index[nodes[aa]] < 0) continue;
        for (int j = 0; j < N; ++j)
          for (int i = 0; i < N; ++i) {
            double v = rho * e.beta_raw[i * N + j] * E.Mass[aa][bb];
            for (int m = 0; m < 2; ++m)
              for (int n = 0; n < 2; ++n)
                v += rho * e.alpha_raw[((i * N + j) * 2 + m) * 2 + n] * E.G[m][n][aa][bb];
            if (flags.cross_terms)
              for (int m = 0; m < 2; ++m)
                v += rho * (e.beta_m_raw[(i * N + j) * 2 + m] * E.X[m][aa][bb] +
                            e.beta_m_raw[(j * N + i) * 2 + m] * E.X[m][bb][aa]);
            if (v != 0.0) t.emplace_back(sys.dof(nodes[bb], j), sys.dof(nodes[aa], i), v);
          }
      }
    }
  }
  sys.K.resize(sys.free_nodes * N, sys.free_nodes * N);
  sys.K.setFromTriplets(t.begin(), t.end());
  return sys;
}

inline CoarseSolution solve_coarse(const CoarseSystem& sys, double tol = 1e-10) {
  CoarseSolution sol;
  sol.N = sys.N;
  sol.M = sys.grid.M;
  sol.cross_terms = sys.flags.cross_terms;
  VectorXd x = VectorXd::Zero(sys.rhs.size());
  if (sys.rhs.size() > 0) {
    SpdOptions opt;
    opt.tol = tol;
    SpdSolver solver;
    try {
      solver.compute(sys.K, opt);
    } catch (const SolverError& e) {
      throw SolverError(std::string("coarse system is not positive definite (") + e.what() + ")",
                        e.residual());
    }
    x = solver.solve(sys.rhs);
    sol.residual = solver.last_residual();
  }
  sol.U.assign(sys.N, VectorXd::Zero(sys.grid.node_count()));
  for (int nd = 0; nd < sys.grid.node_count(); ++nd)
    if (sys.free_index[nd] >= 0)
      for (int i = 0; i < sys.N; ++i) sol.U[i][nd] = x[sys.dof(nd, i)];
  return sol;
}

}  // namespace mcup
