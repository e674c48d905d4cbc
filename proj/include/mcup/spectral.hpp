#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fem.hpp"
#include "grid.hpp"
#include "media.hpp"
#include "sparsela.hpp"

namespace mcup {

struct SpectralOptions {
  double gap_threshold = 100.0;
  EigenOptions eigen;
};

struct SpectralReport {
  SubGrid rve;
  VectorXd values;   // ascending, values[0] = 0 (constant mode)
  MatrixXd vectors;  // B-orthonormal nodal fields over rve
  int gap = 1;       // number of small eigenvalues; 1 means no multicontinuum structure
  double gap_ratio = 0.0;
};

/// Rayleigh quotient energy / kappa-mass for a nodal field on the rve.
inline double rayleigh_quotient(const SubGrid& rve, const ConductivityField& k, const SparseSym& B,
                                const VectorXd& v) {
  return energy(rve, k, v, v) / v.dot(B * v);
}

/// Smallest eigenpairs of -div(kappa grad eta) = lambda kappa eta with natural boundary conditions.
inline SpectralReport spectral_decompose(const SubGrid& rve, const ConductivityField& k, int m,
                                         const SpectralOptions& opt = {}) {
  if (m < 2) throw ValidationError("spectral decomposition needs m >= 2");
  SparseSym A = assemble_stiffness(rve, k);
  SparseSym B = assemble_weighted_mass(FemSpace::natural(rve), k);
  EigenPairs ep = smallest_eigpairs(A, B, m, opt.eigen);

  // The constant mode is known exactly; the rest are B-orthogonalized against it
  // and their eigenvalues replaced by accurately evaluated Rayleigh quotients.
  const int n = static_cast<int>(A.rows());
  VectorXd one = VectorXd::Ones(n);
  VectorXd c = one / std::sqrt(one.dot(B * one));
  VectorXd Bc = B * c;
  int drop = 0;
  double best = -1.0;
  for (int j = 0; j < m; ++j) {
    double overlap = std::abs(ep.vectors.col(j).dot(Bc));
    if (overlap > best) {
      best = overlap;
      drop = j;
    }
  }
  SpectralReport rep;
  rep.rve = rve;
  rep.values.resize(m);
  rep.vectors.resize(n, m);
  rep.values[0] = 0.0;
  rep.vectors.col(0) = c;
  int col = 1;
  for (int j = 0; j < m; ++j) {
    if (j == drop) continue;
    VectorXd v = ep.vectors.col(j);
    v -= v.dot(Bc) * c;
    for (int q = 1; q < col; ++q) v -= v.dot(B * rep.vectors.col(q)) * rep.vectors.col(q);
    v /= std::sqrt(v.dot(B * v));
    // fix the sign for reproducible output
    Eigen::Index idx;
    v.cwiseAbs().maxCoeff(&idx);
    if (v[idx] < 0) v = -v;
    rep.vectors.col(col) = v;
    rep.values[col] = rayleigh_quotient(rve, k, B, v);
    ++col;
  }
  // Gap search skips the zero eigenvalue.
  for (int kk = 2; kk < m; ++kk) {
    double lo = rep.values[kk - 1], hi = rep.values[kk];
    double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (ratio > rep.gap_ratio) {
      rep.gap_ratio = ratio;
      if (ratio >= opt.gap_threshold) rep.gap = kk;
    }
  }
  if (rep.gap_ratio < opt.gap_threshold) rep.gap = 1;
  return rep;
}

struct IdentifyOptions {
  double plateau_tol = 0.05;
  /// Put every high-conductivity plateau into a single continuum.
  bool merge_channels = true;
};

struct IdentifyResult {
  ContinuumMap map;  // over the rve cells (nx = rve.cx)
  bool structure = false;
  int clusters = 0;
};

namespace detail {

/// Deterministic k-means: farthest-point seeding from the first point, Lloyd iterations.
inline std::vector<int> kmeans(const std::vector<VectorXd>& pts, int k) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> assign(n, 0);
  if (n == 0 || k <= 1) return assign;
  std::vector<VectorXd> centers = {pts[0]};
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    int far = 0;
    for (int i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (pts[i] - centers.back()).squaredNorm());
      if (dist[i] > dist[far]) far = i;
    }
    centers.push_back(pts[far]);
  }
  for (int it = 0; it < 200; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = (pts[i] - centers[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (pts[i] - centers[c]).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (best != assign[i] || it == 0) changed |= best != assign[i];
      assign[i] = best;
    }
    if (!changed && it > 0) break;
    std::vector<VectorXd> sum(k, VectorXd::Zero(pts[0].size()));
    std::vector<int> cnt(k, 0);
    for (int i = 0; i < n; ++i) {
      sum[assign[i]] += pts[i];
      ++cnt[assign[i]];
    }
    for (int c = 0; c < k; ++c)
      if (cnt[c] > 0) centers[c] = sum[c] / cnt[c];
  }
  // relabel clusters by first appearance
  std::vector<int> relabel(k, -1);
  int next = 0;
  for (int& a : assign) {
    if (relabel[a] < 0) relabel[a] = next++;
    a = relabel[a];
  }
  return assign;
}

}  // namespace detail

/// Continua from the small eigenvectors: plateau cells (flat eigenvectors, high kappa)
/// are clustered into channels; everything else is the background continuum 0.
inline IdentifyResult identify_continua(const SpectralReport& rep, const ConductivityField& k,
                                        const IdentifyOptions& opt = {}) {
  const SubGrid& g = rep.rve;
  IdentifyResult out;
  out.map.nx = g.cx;
  out.map.labels.assign(g.cell_count(), 0);
  out.map.N = 1;
  if (rep.gap <= 1) return out;
  const int kq = rep.gap;
  double kmin = std::numeric_limits<double>::infinity(), kmax = 0.0;
  for (int lj = 0; lj < g.cy; ++lj)
    for (int li = 0; li < g.cx; ++li) {
      kmin = std::min(kmin, k.at(g.i0 + li, g.j0 + lj));
      kmax = std::max(kmax, k.at(g.i0 + li, g.j0 + lj));
    }
  const double khigh = std::sqrt(kmin * kmax);
  const double L = std::max(g.cx, g.cy) * g.h;
  std::vector<double> range(kq, 0.0), scale(kq, 0.0);
  for (int q = 0; q < kq; ++q) {
    range[q] = rep.vectors.col(q).maxCoeff() - rep.vectors.col(q).minCoeff();
    scale[q] = rep.vectors.col(q).cwiseAbs().maxCoeff();
  }
  std::vector<VectorXd> feats;
  std::vector<int> cells;
  for (int lj = 0; lj < g.cy; ++lj)
    for (int li = 0; li < g.cx; ++li) {
      if (k.at(g.i0 + li, g.j0 + lj) < khigh) continue;
      auto nd = cell_nodes(g, li, lj);
      VectorXd f(kq);
      double grad = 0.0;
      for (int q = 0; q < kq; ++q) {
        std::array<double, 4> u;
        for (int a = 0; a < 4; ++a) u[a] = rep.vectors(nd[a], q);
        f[q] = 0.25 * (u[0] + u[1] + u[2] + u[3]) / scale[q];
        if (q > 0 && range[q] > 0.0)
          grad = std::max(grad, q1_gradient(u, g.h, 0.5, 0.5).norm() * L / range[q]);
      }
      if (grad > opt.plateau_tol) continue;
      feats.push_back(f);
      cells.push_back(lj * g.cx + li);
    }
  if (static_cast<int>(feats.size()) < kq) return out;
  std::vector<int> cl = detail::kmeans(feats, kq);
  out.structure = true;
  out.clusters = kq;
  out.map.N = opt.merge_channels ? 2 : kq + 1;
  for (std::size_t q = 0; q < cells.size(); ++q)
    out.map.labels[cells[q]] = opt.merge_channels ? 1 : cl[q] + 1;
  return out;
}

/// Stitches per-coarse-cell identifications into a global two-continuum map.
inline ContinuumMap identify_global(const CoarseGrid& cg, const ConductivityField& k, int m,
                                    const SpectralOptions& sopt = {},
                                    const IdentifyOptions& iopt = {}) {
  IdentifyOptions merged = iopt;
  merged.merge_channels = true;
  ContinuumMap out{cg.fine.nx, 2, std::vector<int>(cg.fine.cell_count(), 0)};
  for (int w = 0; w < cg.cell_count(); ++w) {
    SubGrid T = cg.patch(w);
    IdentifyResult r = identify_continua(spectral_decompose(T, k, m, sopt), k, merged);
    for (int lj = 0; lj < T.cy; ++lj)
      for (int li = 0; li < T.cx; ++li)
        out.labels[cg.fine.cell(T.i0 + li, T.j0 + lj)] = r.map.labels[lj * T.cx + li];
  }
  return out;
}

}  // namespace mcup
