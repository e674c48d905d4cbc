#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "cells.hpp"
#include "fem.hpp"

namespace mcup {

/// Effective tensors of one coarse cell. Raw values are integrals over the
/// target RVE; the unsuffixed accessors divide by the RVE area.
struct EffectiveCoefficients {
  int N = 0;
  int omega = 0;
  double rve_area = 0.0;
  double cell_area = 0.0;
  double epsilon = 0.0;
  std::vector<double> alpha_raw;   // ((i*N+j)*2+m)*2+n : energy(phi_i^m, phi_j^n)
  std::vector<double> beta_raw;    // i*N+j : energy(phi_i, phi_j)
  std::vector<double> beta_m_raw;  // (i*N+j)*2+m : energy(phi_i^m, phi_j)
  std::vector<double> source;      // f_i

  double alpha(int i, int j, int m, int n) const { return alpha_raw[((i * N + j) * 2 + m) * 2 + n] / rve_area; }
  double beta(int i, int j) const { return beta_raw[i * N + j] / rve_area; }
  double beta_m(int i, int j, int m) const { return beta_m_raw[(i * N + j) * 2 + m] / rve_area; }
  /// Per-unit-area density used by the coarse assembly: (|w|/|R|) / |w|.
  double density() const { return (cell_area / rve_area) / cell_area; }
};

/// What a cell solve contributes independently of the source term.
struct CellResult {
  EffectiveCoefficients eff;         // source left empty
  std::vector<VectorXd> target_phi;  // phi_i on the target patch nodes, (s+1)^2
  std::vector<VectorXd> target_phi_m;  // phi_i^m / H on the same nodes
  double constraint_residual = 0.0;
  IdentityReport identities;
};

namespace detail {

inline SubGrid target_cells(const OversampleRegion& r) { return r.patch_sub(r.p0); }

}  // namespace detail

inline EffectiveCoefficients extract(const CellSolutionSet& s, const ConductivityField& k) {
  EffectiveCoefficients e;
  const int N = s.N;
  e.N = N;
  e.omega = s.region.target;
  e.epsilon = k.epsilon;
  const SubGrid T = detail::target_cells(s.region);
  const SubGrid& g = s.region.sub;
  e.rve_area = e.cell_area = T.area();
  e.alpha_raw.assign(N * N * 4, 0.0);
  e.beta_raw.assign(N * N, 0.0);
  e.beta_m_raw.assign(N * N * 2, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      e.beta_raw[i * N + j] = energy(g, k, s.phi[i], s.phi[j], T);
      for (int m = 0; m < 2; ++m) {
        e.beta_m_raw[(i * N + j) * 2 + m] = energy(g, k, s.phi_m[i * 2 + m], s.phi[j], T);
        for (int n = 0; n < 2; ++n)
          e.alpha_raw[((i * N + j) * 2 + m) * 2 + n] =
              energy(g, k, s.phi_m[i * 2 + m], s.phi_m[j * 2 + n], T);
      }
    }
  return e;
}

/// Coefficients from the average+gradient mode; multipliers equal the energies.
inline EffectiveCoefficients extract(const GradConstrainedSet& s, const ConductivityField& k) {
  EffectiveCoefficients e;
  const int N = s.N;
  e.N = N;
  e.omega = s.omega;
  e.epsilon = k.epsilon;
  e.rve_area = e.cell_area = s.rve.area();
  e.alpha_raw.assign(N * N * 4, 0.0);
  e.beta_raw.assign(N * N, 0.0);
  e.beta_m_raw.assign(N * N * 2, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      e.beta_raw[i * N + j] = energy(s.rve, k, s.phi[i], s.phi[j]);
      for (int m = 0; m < 2; ++m) {
        e.beta_m_raw[(i * N + j) * 2 + m] = energy(s.rve, k, s.phi_m[i * 2 + m], s.phi[j]);
        for (int n = 0; n < 2; ++n)
          e.alpha_raw[((i * N + j) * 2 + m) * 2 + n] =
              energy(s.rve, k, s.phi_m[i * 2 + m], s.phi_m[j * 2 + n]);
      }
    }
  return e;
}

/// phi_i restricted to the nodes of the target patch.
inline std::vector<VectorXd> target_fields(const CellSolutionSet& s, const std::vector<VectorXd>& fields) {
  const SubGrid T = detail::target_cells(s.region);
  const SubGrid& g = s.region.sub;
  std::vector<VectorXd> out;
  for (const auto& f : fields) {
    VectorXd v(T.node_count());
    for (int lj = 0; lj <= T.cy; ++lj)
      for (int li = 0; li <= T.cx; ++li)
        v[T.node(li, lj)] = f[g.node(T.i0 - g.i0 + li, T.j0 - g.j0 + lj)];
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<VectorXd> target_fields(const CellSolutionSet& s) { return target_fields(s, s.phi); }

/// f_i = (|w|/|R|) * integral over the RVE of f phi_i, with phi_i given on the RVE nodes.
inline std::vector<double> source_weights(const SubGrid& rve, const std::vector<VectorXd>& phi,
                                          const SourceField& f, double cell_area) {
  std::vector<double> out(phi.size(), 0.0);
  const double a = rve.h * rve.h;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    double s = 0.0;
    for (int lj = 0; lj < rve.cy; ++lj)
      for (int li = 0; li < rve.cx; ++li) {
        double fc = f.values[(rve.j0 + lj) * f.nx + rve.i0 + li];
        if (fc == 0.0) continue;
        double mean = 0.0;
        for (int nd : cell_nodes(rve, li, lj)) mean += phi[i][nd];
        s += fc * a * mean / 4.0;
      }
    out[i] = cell_area / rve.area() * s;
  }
  return out;
}

inline std::vector<double> source_weights(const CellSolutionSet& s, const SourceField& f) {
  const SubGrid T = detail::target_cells(s.region);
  return source_weights(T, target_fields(s), f, T.area());
}

/// Rescaled O(1) tensors: alpha/|R|, eps beta^m/|R|, eps^2 beta/|R|.
struct Rescaled {
  std::vector<double> alpha_hat, beta_m_hat, beta_hat;
};

inline Rescaled rescale(const EffectiveCoefficients& e, double eps) {
  if (!(eps > 0.0)) throw ValidationError("rescale needs a positive epsilon");
  Rescaled r;
  for (double a : e.alpha_raw) r.alpha_hat.push_back(a / e.rve_area);
  for (double b : e.beta_m_raw) r.beta_m_hat.push_back(eps * b / e.rve_area);
  for (double b : e.beta_raw) r.beta_hat.push_back(eps * eps * b / e.rve_area);
  return r;
}

inline std::vector<std::string> coefficient_columns(int N) {
  std::vector<std::string> cols;
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j)
      for (int m = 1; m <= 2; ++m)
        for (int n = 1; n <= 2; ++n)
          cols.push_back("alpha_" + std::to_string(i) + std::to_string(j) + "_" +
                         std::to_string(m) + std::to_string(n));
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j) cols.push_back("beta_" + std::to_string(i) + std::to_string(j));
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j)
      for (int m = 1; m <= 2; ++m)
        cols.push_back("beta_" + std::to_string(i) + std::to_string(j) + "_" + std::to_string(m));
  for (int i = 1; i <= N; ++i) cols.push_back("f_" + std::to_string(i));
  return cols;
}

/// Values matching coefficient_columns, normalized by the RVE area (sources raw).
inline std::vector<double> coefficient_row(const EffectiveCoefficients& e) {
  std::vector<double> v;
  for (double a : e.alpha_raw) v.push_back(a / e.rve_area);
  for (double b : e.beta_raw) v.push_back(b / e.rve_area);
  for (double b : e.beta_m_raw) v.push_back(b / e.rve_area);
  for (double f : e.source) v.push_back(f);
  return v;
}

}  // namespace mcup
