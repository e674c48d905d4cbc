#pragma once

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>
#include <vector>

#include "cells.hpp"
#include "effective.hpp"
#include "grid.hpp"
#include "media.hpp"

namespace mcup {

/// Runs f(0..n-1) over a pool of worker threads; results land in caller-owned slots.
template <class F>
void parallel_for(int n, int threads, F&& f) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

enum class CellMode { Oversampled, GradientConstraint };

/// How an oversampled region that reaches past the domain boundary is formed.
/// Clip cuts it at the boundary; Periodic and Reflect keep the full (2l+1)^2
/// patches and continue the medium outside the domain by period-shifts or mirroring.
enum class Extension { Clip, Periodic, Reflect };

struct UpscaleOptions {
  int layers = 0;
  Extension extension = Extension::Periodic;
  CellOptions cell;
  CellMode mode = CellMode::Oversampled;
  int threads = 1;
  /// Reuse solves of regions with identical geometry and coefficients.
  bool reuse = true;
};

struct UpscaleResult {
  std::vector<EffectiveCoefficients> cells;
  double constraint_residual = 0.0;
  IdentityReport identities;
  /// Largest |phi_i^m| / H at target-cell nodes shared by two continua.
  double interface_oscillation = 0.0;
  int distinct_solves = 0;
};

namespace detail {

struct RegionKey {
  int cx, cy, s, tli, tlj;
  std::uint64_t h1, h2;
  bool operator<(const RegionKey& o) const {
    return std::tie(cx, cy, s, tli, tlj, h1, h2) < std::tie(o.cx, o.cy, o.s, o.tli, o.tlj, o.h1, o.h2);
  }
};

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Fine-cell period of the medium, or 0 if epsilon does not resolve on the grid.
inline int medium_period(const ConductivityField& k) {
  double pc = k.epsilon * k.nx;
  if (!(k.epsilon > 0.0) || std::abs(pc - std::round(pc)) > 1e-9 || std::round(pc) < 1 ||
      k.nx % static_cast<int>(std::round(pc)) != 0)
    return 0;
  return static_cast<int>(std::round(pc));
}

inline int extend_index(int i, int nx, Extension e, int pc) {
  if (e == Extension::Periodic) {
    while (i < 0) i += pc;
    while (i >= nx) i -= pc;
    return i;
  }
  while (i < 0 || i >= nx) i = i < 0 ? -1 - i : 2 * nx - 1 - i;
  return i;
}

/// An oversampled region together with the global fine cell behind each local row and column.
struct Footprint {
  OversampleRegion region;
  std::vector<int> gi, gj;
  bool extended = false;
  int i0 = 0, j0 = 0;  // unwrapped global fine index of the local origin

  double kappa(const ConductivityField& k, int li, int lj) const { return k.at(gi[li], gj[lj]); }
  int label(const ContinuumMap& m, int li, int lj) const { return m.at(gi[li], gj[lj]); }
};

inline Footprint footprint(const CoarseGrid& cg, int omega, int l, Extension e, int pc) {
  Footprint fp;
  if (e == Extension::Periodic && pc == 0) e = Extension::Reflect;
  int a = cg.cell_a(omega), b = cg.cell_b(omega);
  bool inside = a - l >= 0 && b - l >= 0 && a + l < cg.M && b + l < cg.M;
  if (e == Extension::Clip || inside) {
    fp.region = oversample(cg, omega, l);
    for (int li = 0; li < fp.region.sub.cx; ++li) fp.gi.push_back(fp.region.sub.i0 + li);
    for (int lj = 0; lj < fp.region.sub.cy; ++lj) fp.gj.push_back(fp.region.sub.j0 + lj);
    return fp;
  }
  const int P = 2 * l + 1, L = P * cg.s;
  CoarseGrid local{FineGrid{L, cg.fine.h}, P, cg.H, cg.s};
  fp.region = oversample(local, local.cell(l, l), l);
  fp.region.target = omega;
  fp.extended = true;
  fp.i0 = (a - l) * cg.s;
  fp.j0 = (b - l) * cg.s;
  for (int q = 0; q < L; ++q) {
    fp.gi.push_back(extend_index(fp.i0 + q, cg.fine.nx, e, pc));
    fp.gj.push_back(extend_index(fp.j0 + q, cg.fine.nx, e, pc));
  }
  return fp;
}

/// Medium restricted to an extended footprint, in local numbering.
inline Medium local_medium(const Footprint& fp, const Medium& med) {
  const int L = fp.region.sub.cx;
  Medium out;
  out.kappa.nx = out.map.nx = L;
  out.kappa.epsilon = med.kappa.epsilon;
  out.kappa.descriptor = med.kappa.descriptor;
  out.map.N = med.map.N;
  out.kappa.values.resize(static_cast<std::size_t>(L) * L);
  out.map.labels.resize(static_cast<std::size_t>(L) * L);
  for (int lj = 0; lj < L; ++lj)
    for (int li = 0; li < L; ++li) {
      out.kappa.values[lj * L + li] = fp.kappa(med.kappa, li, lj);
      out.map.labels[lj * L + li] = fp.label(med.map, li, lj);
    }
  return out;
}

inline RegionKey region_key(const Footprint& fp, const ConductivityField& k,
                            const ContinuumMap& map) {
  const OversampleRegion& r = fp.region;
  RegionKey key{r.sub.cx, r.sub.cy, r.s, r.target_li(), r.target_lj(), 0xcbf29ce484222325ULL, 7};
  for (int lj = 0; lj < r.sub.cy; ++lj)
    for (int li = 0; li < r.sub.cx; ++li) {
      int gi = fp.gi[li], gj = fp.gj[lj];
      double v = k.at(gi, gj);
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      std::uint64_t word = bits ^ (static_cast<std::uint64_t>(map.at(gi, gj)) << 1);
      key.h1 = (key.h1 ^ word) * 0x100000001b3ULL;
      key.h2 = mix64(key.h2 ^ word);
    }
  return key;
}

/// Solves the cell problems on a footprint and hands the solution with its
/// (possibly local) conductivity to `use`.
template <class F>
auto with_footprint_solution(const Footprint& fp, const Medium& med, const CellOptions& opt, F&& use) {
  if (!fp.extended) return use(solve_cells(fp.region, med.kappa, med.map, opt), med.kappa);
  Medium local = local_medium(fp, med);
  CellSolutionSet s = solve_cells(fp.region, local.kappa, local.map, opt);
  s.centroid.row(0).array() += fp.i0 * fp.region.sub.h;
  s.centroid.row(1).array() += fp.j0 * fp.region.sub.h;
  return use(std::move(s), local.kappa);
}

inline CellResult solve_region(const Footprint& fp, const Medium& med, const CellOptions& opt) {
  return with_footprint_solution(fp, med, opt, [](CellSolutionSet s, const ConductivityField& k) {
    CellResult out;
    out.eff = extract(s, k);
    out.target_phi = target_fields(s);
    out.target_phi_m = target_fields(s, s.phi_m);
    for (auto& v : out.target_phi_m) v /= s.region.s * s.region.sub.h;
    out.constraint_residual = s.constraint_residual;
    out.identities = check_identities(s, k);
    return out;
  });
}

inline CellResult solve_rve_gradient(const CoarseGrid& cg, int omega, const ConductivityField& k,
                                     const ContinuumMap& map, const CellOptions& opt) {
  GradConstrainedSet s = solve_gradconstraint_cells(cg, omega, k, map, opt);
  CellResult out;
  out.eff = extract(s, k);
  out.target_phi = s.phi;
  out.target_phi_m = s.phi_m;
  for (auto& v : out.target_phi_m) v /= cg.H;
  out.constraint_residual = s.constraint_residual;
  return out;
}

}  // namespace detail

/// Effective coefficients for every coarse cell.
inline UpscaleResult upscale(const CoarseGrid& cg, const Medium& med, const SourceField& f,
                             const UpscaleOptions& opt) {
  const int K = cg.cell_count();
  const int layers = opt.mode == CellMode::GradientConstraint ? 0 : opt.layers;
  const int pc = detail::medium_period(med.kappa);
  std::vector<detail::Footprint> regions;
  regions.reserve(K);
  for (int w = 0; w < K; ++w) regions.push_back(detail::footprint(cg, w, layers, opt.extension, pc));

  // Distinct regions in first-occurrence order keep the output independent of threading.
  std::vector<int> slot(K);
  std::vector<int> rep;
  if (opt.reuse) {
    std::map<detail::RegionKey, int> seen;
    for (int w = 0; w < K; ++w) {
      auto key = detail::region_key(regions[w], med.kappa, med.map);
      auto [it, inserted] = seen.emplace(key, static_cast<int>(rep.size()));
      if (inserted) rep.push_back(w);
      slot[w] = it->second;
    }
  } else {
    for (int w = 0; w < K; ++w) {
      slot[w] = w;
      rep.push_back(w);
    }
  }

  std::vector<CellResult> solved(rep.size());
  parallel_for(static_cast<int>(rep.size()), opt.threads, [&](int u) {
    int w = rep[u];
    solved[u] = opt.mode == CellMode::GradientConstraint
                    ? detail::solve_rve_gradient(cg, w, med.kappa, med.map, opt.cell)
                    : detail::solve_region(regions[w], med, opt.cell);
  });

  UpscaleResult out;
  out.distinct_solves = static_cast<int>(rep.size());
  out.cells.resize(K);
  for (const auto& c : solved) {
    out.constraint_residual = std::max(out.constraint_residual, c.constraint_residual);
    out.identities.row_sum = std::max(out.identities.row_sum, c.identities.row_sum);
    out.identities.energy_sum = std::max(out.identities.energy_sum, c.identities.energy_sum);
    out.identities.moment_energy = std::max(out.identities.moment_energy, c.identities.moment_energy);
  }
  for (int w = 0; w < K; ++w) {
    const CellResult& c = solved[slot[w]];
    EffectiveCoefficients e = c.eff;
    e.omega = w;
    SubGrid T = cg.patch(w);
    e.source = source_weights(T, c.target_phi, f, e.cell_area);
    out.interface_oscillation = std::max(
        out.interface_oscillation, interface_oscillation(T, med.map, c.target_phi_m, T));
    out.cells[w] = std::move(e);
  }
  return out;
}

struct DecayRow {
  int layers = 0;
  double delta = 0.0;           // max-norm deviation from the largest-l coefficients
  double delta_relative = 0.0;  // same, over the max-norm of the reference
  double row_sum = 0.0;         // max_i |sum_j beta_ij| / max |beta|
  EffectiveCoefficients eff;
};

inline double row_sum_defect(const EffectiveCoefficients& e) {
  double mx = 0.0, worst = 0.0;
  for (double b : e.beta_raw) mx = std::max(mx, std::abs(b));
  for (int i = 0; i < e.N; ++i) {
    double s = 0.0;
    for (int j = 0; j < e.N; ++j) s += e.beta_raw[i * e.N + j];
    worst = std::max(worst, std::abs(s));
  }
  return mx > 0.0 ? worst / mx : 0.0;
}

/// Effective coefficients of one target cell for each layer count.
inline std::vector<DecayRow> boundary_decay_study(const CoarseGrid& cg, const Medium& med, int omega,
                                                  std::vector<int> l_list,
                                                  const CellOptions& opt = {},
                                                  Extension ext = Extension::Periodic) {
  if (l_list.empty()) throw ValidationError("decay study needs at least one layer count");
  if (!std::is_sorted(l_list.begin(), l_list.end()))
    throw ValidationError("decay study layer list must be ascending");
  std::vector<DecayRow> rows;
  for (int l : l_list) {
    DecayRow r;
    r.layers = l;
    detail::Footprint fp = detail::footprint(cg, omega, l, ext, detail::medium_period(med.kappa));
    r.eff = detail::with_footprint_solution(
        fp, med, opt, [](CellSolutionSet s, const ConductivityField& k) { return extract(s, k); });
    r.row_sum = row_sum_defect(r.eff);
    rows.push_back(std::move(r));
  }
  std::vector<double> ref = coefficient_row(rows.back().eff);
  double scale = 0.0;
  for (double v : ref) scale = std::max(scale, std::abs(v));
  for (auto& r : rows) {
    std::vector<double> v = coefficient_row(r.eff);
    double d = 0.0;
    for (std::size_t q = 0; q < v.size(); ++q) d = std::max(d, std::abs(v[q] - ref[q]));
    r.delta = d;
    r.delta_relative = scale > 0.0 ? d / scale : 0.0;
  }
  return rows;
}

}  // namespace mcup
