#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"

namespace mcup {

struct ConductivityField {
  int nx = 0;
  double epsilon = 0.0;
  std::vector<double> values;  // one per fine cell, row-major
  std::string descriptor;

  double at(int i, int j) const { return values[j * nx + i]; }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double max() const { return *std::max_element(values.begin(), values.end()); }
};

/// Continuum labels per fine cell. Stored 0-based; continuum j here is
/// continuum j+1 in the usual 1-based numbering.
struct ContinuumMap {
  int nx = 0;
  int N = 0;
  std::vector<int> labels;

  int at(int i, int j) const { return labels[j * nx + i]; }
  double psi(int j, int cell) const { return labels[cell] == j ? 1.0 : 0.0; }
  std::vector<double> indicator(int j) const {
    std::vector<double> out(labels.size());
    for (std::size_t c = 0; c < labels.size(); ++c) out[c] = labels[c] == j ? 1.0 : 0.0;
    return out;
  }
};

struct SourceField {
  int nx = 0;
  std::vector<double> values;
};

struct Medium {
  ConductivityField kappa;
  ContinuumMap map;
};

enum class Axis { X1 = 0, X2 = 1 };

struct LayerParams {
  double high_fraction = 0.5;
  /// Direction along which kappa varies. X1 gives stripes that conduct along x2.
  Axis normal = Axis::X1;
  std::optional<double> kappa_low, kappa_high;
};

struct ChannelParams {
  double width_fraction = 0.25;
  double modulation = 0.5;  // only used by Case 3
  std::optional<double> kappa_low, kappa_high;
};

inline double case_kappa_low(double eps) { return eps / 10000.0; }
inline double case_kappa_high(double eps) { return 1.0 / (100.0 * eps); }

namespace detail {

inline int resolve_period(const FineGrid& g, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
  double inv = 1.0 / eps;
  if (std::abs(inv - std::round(inv)) > 1e-9)
    throw ValidationError("1/epsilon must be an integer, got epsilon=" + std::to_string(eps));
  double pc = eps * g.nx;
  if (std::abs(pc - std::round(pc)) > 1e-9 || std::round(pc) < 2)
    throw ValidationError("period epsilon=" + std::to_string(eps) +
                          " is not resolved by nx=" + std::to_string(g.nx));
  return static_cast<int>(std::round(pc));
}

inline int resolve_band(double fraction, int pc, const char* what) {
  double w = fraction * pc;
  int n = static_cast<int>(std::round(w));
  if (std::abs(w - n) > 1e-9 || n < 1 || n > pc - 1)
    throw ValidationError(std::string(what) + " fraction " + std::to_string(fraction) +
                          " does not give a whole number of fine cells in a period of " +
                          std::to_string(pc));
  return n;
}

inline Medium two_valued(const FineGrid& g, double eps, double klo, double khi,
                         const std::vector<int>& labels, std::string desc) {
  if (!(klo > 0.0 && khi > 0.0)) throw ValidationError("conductivities must be positive");
  Medium m;
  m.kappa.nx = m.map.nx = g.nx;
  m.kappa.epsilon = eps;
  m.kappa.descriptor = std::move(desc);
  m.map.N = 2;
  m.map.labels = labels;
  m.kappa.values.resize(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c)
    m.kappa.values[c] = labels[c] == 0 ? klo : khi;
  return m;
}

inline std::vector<int> layer_labels(const FineGrid& g, int pc, int n_high, Axis normal) {
  std::vector<int> labels(g.cell_count());
  for (int j = 0; j < g.nx; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int q = (normal == Axis::X1 ? i : j) % pc;
      labels[g.cell(i, j)] = q < pc - n_high ? 0 : 1;
    }
  return labels;
}

inline std::vector<int> channel_labels(const FineGrid& g, int pc, int wc) {
  std::vector<int> labels(g.cell_count());
  for (int j = 0; j < g.nx; ++j)
    for (int i = 0; i < g.nx; ++i)
      labels[g.cell(i, j)] = (i % pc < wc || j % pc < wc) ? 1 : 0;
  return labels;
}

}  // namespace detail

/// Layered medium: low band then high band in every period.
inline Medium gen_case1(const FineGrid& g, double eps, const LayerParams& p = {}) {
  int pc = detail::resolve_period(g, eps);
  int n_high = detail::resolve_band(p.high_fraction, pc, "layer");
  double klo = p.kappa_low.value_or(case_kappa_low(eps));
  double khi = p.kappa_high.value_or(case_kappa_high(eps));
  return detail::two_valued(g, eps, klo, khi, detail::layer_labels(g, pc, n_high, p.normal),
                            "case1 eps=" + std::to_string(eps) +
                                " fraction=" + std::to_string(p.high_fraction));
}

inline Medium gen_case1_fixed_contrast(const FineGrid& g, double eps, LayerParams p = {}) {
  p.kappa_low = 1e-4;
  p.kappa_high = 0.1;
  Medium m = gen_case1(g, eps, p);
  m.kappa.descriptor = "case1_fixed eps=" + std::to_string(eps);
  return m;
}

/// Crossing channels of the high phase, one horizontal and one vertical per period.
inline Medium gen_case2(const FineGrid& g, double eps, const ChannelParams& p = {}) {
  int pc = detail::resolve_period(g, eps);
  int wc = detail::resolve_band(p.width_fraction, pc, "channel width");
  double klo = p.kappa_low.value_or(case_kappa_low(eps));
  double khi = p.kappa_high.value_or(case_kappa_high(eps));
  return detail::two_valued(g, eps, klo, khi, detail::channel_labels(g, pc, wc),
                            "case2 eps=" + std::to_string(eps) +
                                " width=" + std::to_string(p.width_fraction));
}

/// Case 2 pattern with the high value slowly modulated over the domain.
inline Medium gen_case3(const FineGrid& g, double eps, const ChannelParams& p = {}) {
  if (!(std::abs(p.modulation) < 1.0))
    throw ValidationError("modulation amplitude must be below 1 to keep kappa positive");
  Medium m = gen_case2(g, eps, p);
  const double pi = std::acos(-1.0);
  for (int j = 0; j < g.nx; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int c = g.cell(i, j);
      if (m.map.labels[c] != 1) continue;
      auto x = g.cell_center(i, j);
      m.kappa.values[c] *= 1.0 + p.modulation * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    }
  m.kappa.descriptor = "case3 eps=" + std::to_string(eps) +
                       " modulation=" + std::to_string(p.modulation);
  return m;
}

/// Single-continuum map (every cell in continuum 0).
inline ContinuumMap single_continuum(int nx) {
  return ContinuumMap{nx, 1, std::vector<int>(static_cast<std::size_t>(nx) * nx, 0)};
}

/// Gaussian bump, damped by 1000 min(kappa) on continuum 0.
inline SourceField gen_source(const FineGrid& g, const ConductivityField& k,
                              const ContinuumMap& map) {
  if (k.nx != g.nx || map.nx != g.nx) throw ValidationError("source: grid size mismatch");
  double kmin = k.min();
  SourceField f{g.nx, std::vector<double>(g.cell_count())};
  for (int j = 0; j < g.nx; ++j)
    for (int i = 0; i < g.nx; ++i) {
      auto x = g.cell_center(i, j);
      double r2 = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
      double e = std::exp(-40.0 * r2);
      f.values[g.cell(i, j)] = map.at(i, j) == 0 ? 1000.0 * kmin * e : e;
    }
  return f;
}

}  // namespace mcup
