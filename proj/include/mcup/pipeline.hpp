#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "coarse.hpp"
#include "fem.hpp"
#include "grid.hpp"
#include "media.hpp"
#include "spectral.hpp"
#include "upscale.hpp"
#include "verify.hpp"

namespace mcup {

enum class CaseKind { Case1, Case1Fixed, Case2, Case3, File };

inline const char* case_name(CaseKind k) {
  switch (k) {
    case CaseKind::Case1: return "case1";
    case CaseKind::Case1Fixed: return "case1_fixed";
    case CaseKind::Case2: return "case2";
    case CaseKind::Case3: return "case3";
    case CaseKind::File: return "file";
  }
  return "?";
}

inline CaseKind parse_case(const std::string& s) {
  if (s == "case1") return CaseKind::Case1;
  if (s == "case1_fixed") return CaseKind::Case1Fixed;
  if (s == "case2") return CaseKind::Case2;
  if (s == "case3") return CaseKind::Case3;
  if (s == "file") return CaseKind::File;
  throw ValidationError("unknown case '" + s + "'");
}

/// One point of a run: medium, discretization and solver settings.
struct CaseSpec {
  CaseKind kind = CaseKind::Case1;
  int nx = 400;
  int M = 10;
  double eps = 0.1;
  int layers = -1;  // -1: default_layers(H)
  LayerParams layer;
  ChannelParams channel;
  bool cross_terms = true;
  CellMode mode = CellMode::Oversampled;
  Extension extension = Extension::Periodic;
  double tol = 1e-10;
  int threads = 1;
  bool reuse = true;
  /// Replace the generator's continuum labels by spectral identification.
  bool spectral_continua = false;
  int spectral_modes = 4;
  /// For CaseKind::File: externally supplied fields.
  std::optional<Medium> medium;

  int resolved_layers() const { return layers >= 0 ? layers : default_layers(1.0 / M); }
};

inline Medium make_medium(const FineGrid& g, const CaseSpec& c) {
  switch (c.kind) {
    case CaseKind::Case1: return gen_case1(g, c.eps, c.layer);
    case CaseKind::Case1Fixed: return gen_case1_fixed_contrast(g, c.eps, c.layer);
    case CaseKind::Case2: return gen_case2(g, c.eps, c.channel);
    case CaseKind::Case3: return gen_case3(g, c.eps, c.channel);
    case CaseKind::File:
      if (!c.medium) throw ValidationError("case 'file' needs an imported medium");
      if (c.medium->kappa.nx != g.nx) throw ValidationError("imported medium does not match nx");
      return *c.medium;
  }
  throw ValidationError("unknown case");
}

struct RunResult {
  CaseSpec spec;
  int layers = 0;
  Medium medium;
  SourceField source;
  VectorXd fine;
  UpscaleResult upscaled;
  CoarseSolution coarse;
  ReferenceAverages reference;
  ErrorReport error;
  double seconds_fine = 0.0, seconds_cells = 0.0;
};

inline RunResult run_case(const CaseSpec& spec) {
  using clock = std::chrono::steady_clock;
  RunResult r;
  r.spec = spec;
  r.spec.medium.reset();
  FineGrid g = build_fine_grid(spec.nx);
  CoarseGrid cg = build_coarse_grid(g, spec.M);
  r.layers = spec.resolved_layers();
  r.medium = make_medium(g, spec);
  if (spec.spectral_continua) r.medium.map = identify_global(cg, r.medium.kappa, spec.spectral_modes);
  r.source = gen_source(g, r.medium.kappa, r.medium.map);
  auto t0 = clock::now();
  r.fine = solve_fine_reference(g, r.medium.kappa, r.source, spec.tol);
  auto t1 = clock::now();
  UpscaleOptions uo;
  uo.layers = r.layers;
  uo.cell.tol = spec.tol;
  uo.mode = spec.mode;
  uo.extension = spec.extension;
  uo.threads = spec.threads;
  uo.reuse = spec.reuse;
  r.upscaled = upscale(cg, r.medium, r.source, uo);
  auto t2 = clock::now();
  CoarseFlags flags;
  flags.cross_terms = spec.cross_terms;
  r.coarse = solve_coarse(assemble_coarse(cg, r.upscaled.cells, flags), spec.tol);
  r.reference = average_reference(r.fine, cg, r.medium.map);
  r.error = e2_error(r.coarse, r.reference);
  r.seconds_fine = std::chrono::duration<double>(t1 - t0).count();
  r.seconds_cells = std::chrono::duration<double>(t2 - t1).count();
  return r;
}

/// Index of the coarse cell whose lower-left corner is nearest the domain center.
inline int central_cell(int M) { return (M / 2) * M + M / 2; }

struct SweepRow {
  CaseSpec spec;
  int layers = 0;
  bool ok = false;
  std::string message;
  std::vector<double> e2, e2_ratio;
  EffectiveCoefficients central;  // coefficients of central_cell(M)
  double constraint_residual = 0.0;
  double identity_residual = 0.0;
};

/// Runs each point independently; a failing point is recorded and the sweep continues.
inline std::vector<SweepRow> run_sweep(const std::vector<CaseSpec>& points) {
  std::vector<SweepRow> rows;
  for (const auto& p : points) {
    SweepRow row;
    row.spec = p;
    row.spec.medium.reset();
    try {
      row.layers = p.resolved_layers();
      RunResult r = run_case(p);
      row.e2 = r.error.e2;
      row.e2_ratio = r.error.e2_ratio;
      row.central = r.upscaled.cells[central_cell(p.M)];
      row.constraint_residual = r.upscaled.constraint_residual;
      row.identity_residual = r.upscaled.identities.worst();
      row.ok = true;
    } catch (const std::exception& e) {
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mcup
