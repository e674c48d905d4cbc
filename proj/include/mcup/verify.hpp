#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "coarse.hpp"
#include "grid.hpp"
#include "media.hpp"

namespace mcup {

/// Per coarse cell and continuum: mean of the fine field over the cells of that continuum.
struct ReferenceAverages {
  int N = 0;
  int M = 0;
  MatrixXd avg;                 // N x cells
  std::vector<char> present;    // N x cells, row-major by continuum
  int excluded = 0;

  bool has(int i, int k) const { return present[i * M * M + k] != 0; }
};

inline ReferenceAverages average_reference(const VectorXd& u, const CoarseGrid& cg,
                                           const ContinuumMap& map) {
  const FineGrid& g = cg.fine;
  if (u.size() != g.node_count()) throw ValidationError("reference field has the wrong size");
  ReferenceAverages r;
  r.N = map.N;
  r.M = cg.M;
  const int K = cg.cell_count();
  MatrixXd sum = MatrixXd::Zero(map.N, K), cnt = MatrixXd::Zero(map.N, K);
  for (int j = 0; j < g.nx; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double mean = 0.25 * (u[g.node(i, j)] + u[g.node(i + 1, j)] + u[g.node(i + 1, j + 1)] +
                            u[g.node(i, j + 1)]);
      int k = cg.cell(i / cg.s, j / cg.s), c = map.at(i, j);
      sum(c, k) += mean;
      cnt(c, k) += 1.0;
    }
  r.avg = MatrixXd::Zero(map.N, K);
  r.present.assign(static_cast<std::size_t>(map.N) * K, 0);
  for (int c = 0; c < map.N; ++c)
    for (int k = 0; k < K; ++k) {
      if (cnt(c, k) > 0) {
        r.avg(c, k) = sum(c, k) / cnt(c, k);
        r.present[c * K + k] = 1;
      } else {
        ++r.excluded;
      }
    }
  return r;
}

struct ErrorReport {
  std::vector<double> e2;        // percent, square root of the ratio
  std::vector<double> e2_ratio;  // percent, ratio without the root
  MatrixXd coarse_means;         // N x cells
  MatrixXd reference;            // N x cells
  int excluded = 0;
};

inline ErrorReport e2_error(const CoarseSolution& sol, const ReferenceAverages& ref) {
  if (sol.N != ref.N || sol.M != ref.M) throw ValidationError("e2: grids do not match");
  ErrorReport rep;
  const int K = sol.M * sol.M;
  rep.coarse_means = MatrixXd::Zero(sol.N, K);
  rep.reference = ref.avg;
  rep.excluded = ref.excluded;
  for (int i = 0; i < sol.N; ++i) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < K; ++k) {
      rep.coarse_means(i, k) = sol.cell_mean(i, k);
      if (!ref.has(i, k)) continue;
      double d = rep.coarse_means(i, k) - ref.avg(i, k);
      num += d * d;
      den += ref.avg(i, k) * ref.avg(i, k);
    }
    if (den == 0.0)
      throw ValidationError("e2: reference averages of continuum " + std::to_string(i + 1) +
                            " are all zero");
    rep.e2.push_back(100.0 * std::sqrt(num / den));
    rep.e2_ratio.push_back(100.0 * num / den);
  }
  return rep;
}

/// Along-layer (arithmetic) and across-layer (harmonic) means for a two-phase
/// laminate with volume fraction `fraction` of kappa2.
inline std::pair<double, double> layered_oracle(double kappa1, double kappa2, double fraction) {
  if (!(kappa1 > 0.0 && kappa2 > 0.0)) throw ValidationError("layered oracle needs positive kappa");
  double arith = fraction * kappa2 + (1.0 - fraction) * kappa1;
  double harm = 1.0 / (fraction / kappa2 + (1.0 - fraction) / kappa1);
  return {arith, harm};
}

/// max |U_1 - U_2| / max |U_1| over coarse nodes.
inline double continuum_separation(const CoarseSolution& sol) {
  if (sol.N < 2) return 0.0;
  double d = (sol.U[0] - sol.U[1]).lpNorm<Eigen::Infinity>();
  double s = sol.U[0].lpNorm<Eigen::Infinity>();
  return s > 0.0 ? d / s : 0.0;
}

}  // namespace mcup
