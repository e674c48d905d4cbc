#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mcup/mcup.hpp>

namespace fs = std::filesystem;
using namespace mcup;

namespace {

struct Context {
  RunConfig cfg;
  std::string hash;
  fs::path out;
  bool check = false;
};

Context prepare(const std::string& config_file, const std::vector<std::string>& sets,
                const RunConfig& cli, const std::vector<std::string>& cli_keys, bool check) {
  Context c;
  if (!config_file.empty()) merge_json(c.cfg, load_json_file(config_file));
  // direct flags win over the file, --set wins over everything
  nlohmann::json cj = to_json(cli);
  nlohmann::json picked = nlohmann::json::object();
  for (const auto& k : cli_keys)
    if (cj.contains(k)) picked[k] = cj[k];
  merge_json(c.cfg, picked);
  for (const auto& s : sets) apply_override(c.cfg, s);
  validate(c.cfg);
  c.hash = config_hash(c.cfg);
  c.out = c.cfg.outdir;
  c.check = check;
  fs::create_directories(c.out);
  std::ofstream echo(c.out / "config.echo");
  echo << provenance(c.hash) << '\n' << to_json(c.cfg).dump(2) << '\n';
  return c;
}

CaseSpec spec_of(const Context& c) {
  CaseSpec s = to_case_spec(c.cfg);
  if (s.kind == CaseKind::File) s.medium = read_medium_csv(c.cfg.medium_file);
  return s;
}

std::vector<double> node_field(const FineGrid& g, const VectorXd& u) {
  return std::vector<double>(u.data(), u.data() + g.node_count());
}

void emit_medium(const Context& c, const Medium& m) {
  write_medium_csv((c.out / "medium.csv").string(), m, c.hash);
  write_pgm((c.out / "kappa.pgm").string(), m.kappa.nx, m.kappa.nx, m.kappa.values, true);
  std::vector<double> lab(m.map.labels.begin(), m.map.labels.end());
  write_pgm((c.out / "continua.pgm").string(), m.map.nx, m.map.nx, lab);
}

int cmd_solve_fine(const Context& c) {
  CaseSpec s = spec_of(c);
  FineGrid g = build_fine_grid(s.nx);
  Medium m = make_medium(g, s);
  SourceField f = gen_source(g, m.kappa, m.map);
  VectorXd u = solve_fine_reference(g, m.kappa, f, s.tol);
  emit_medium(c, m);
  write_fine_csv((c.out / "fine.csv").string(), g, u, c.hash);
  write_pgm((c.out / "fine.pgm").string(), g.nx + 1, g.nx + 1, node_field(g, u));
  std::printf("fine solve: %d x %d cells, max u = %.6g\n", g.nx, g.nx, u.maxCoeff());
  return 0;
}

UpscaleResult upscale_only(const CaseSpec& s, Medium& m, CoarseGrid& cg) {
  FineGrid g = build_fine_grid(s.nx);
  cg = build_coarse_grid(g, s.M);
  m = make_medium(g, s);
  if (s.spectral_continua) m.map = identify_global(cg, m.kappa, s.spectral_modes);
  SourceField f = gen_source(g, m.kappa, m.map);
  UpscaleOptions uo;
  uo.layers = s.resolved_layers();
  uo.cell.tol = s.tol;
  uo.mode = s.mode;
  uo.extension = s.extension;
  uo.threads = s.threads;
  return upscale(cg, m, f, uo);
}

void emit_upscaled(const Context& c, const UpscaleResult& up) {
  write_eff_csv((c.out / "eff.csv").string(), up.cells, c.hash);
  std::printf("cells: %zu coarse cells, %d distinct solves, constraint residual %.3g, identities %.3g\n",
              up.cells.size(), up.distinct_solves, up.constraint_residual, up.identities.worst());
}

void emit_coarse(const Context& c, const CoarseSolution& sol) {
  for (int i = 0; i < sol.N; ++i) {
    std::string stem = "coarse_U" + std::to_string(i + 1);
    write_coarse_csv((c.out / (stem + ".csv")).string(), sol, i, c.hash);
    write_pgm((c.out / (stem + ".pgm")).string(), sol.M + 1, sol.M + 1,
              std::vector<double>(sol.U[i].data(), sol.U[i].data() + sol.U[i].size()));
  }
}

int cmd_upscale(const Context& c) {
  CaseSpec s = spec_of(c);
  Medium m;
  CoarseGrid cg;
  UpscaleResult up = upscale_only(s, m, cg);
  emit_upscaled(c, up);
  return 0;
}

int cmd_solve_coarse(const Context& c) {
  CaseSpec s = spec_of(c);
  Medium m;
  CoarseGrid cg;
  UpscaleResult up = upscale_only(s, m, cg);
  emit_upscaled(c, up);
  CoarseFlags fl;
  fl.cross_terms = s.cross_terms;
  CoarseSolution sol = solve_coarse(assemble_coarse(cg, up.cells, fl), s.tol);
  emit_coarse(c, sol);
  std::printf("coarse solve: M = %d, residual %.3g\n", sol.M, sol.residual);
  return 0;
}

bool check_e2(const Context& c, const std::vector<double>& e2) {
  if (!c.check) return true;
  if (c.cfg.expect_e2.empty()) throw ValidationError("--check needs expect_e2 in the config");
  if (c.cfg.expect_e2.size() != e2.size()) {
    std::printf("check: expected %zu e2 values, got %zu\n", c.cfg.expect_e2.size(), e2.size());
    return false;
  }
  bool ok = true;
  for (std::size_t i = 0; i < e2.size(); ++i) {
    double want = c.cfg.expect_e2[i], got = e2[i];
    bool pass = got <= want * c.cfg.expect_factor && got >= want / c.cfg.expect_factor;
    std::printf("check e2_%zu: got %.4g expected %.4g (factor %.3g) %s\n", i + 1, got, want,
                c.cfg.expect_factor, pass ? "ok" : "MISMATCH");
    ok &= pass;
  }
  return ok;
}

int cmd_compare(const Context& c) {
  CaseSpec s = spec_of(c);
  RunResult r = run_case(s);
  emit_medium(c, r.medium);
  FineGrid g = build_fine_grid(s.nx);
  write_fine_csv((c.out / "fine.csv").string(), g, r.fine, c.hash);
  write_pgm((c.out / "fine.pgm").string(), g.nx + 1, g.nx + 1, node_field(g, r.fine));
  emit_upscaled(c, r.upscaled);
  emit_coarse(c, r.coarse);
  nlohmann::json j = error_json(r.error);
  j["case"] = case_name(s.kind);
  j["nx"] = s.nx;
  j["M"] = s.M;
  j["epsilon"] = s.eps;
  j["layers"] = r.layers;
  j["constraint_residual"] = r.upscaled.constraint_residual;
  j["identity_residual"] = r.upscaled.identities.worst();
  j["interface_oscillation"] = r.upscaled.interface_oscillation;
  j["continuum_separation"] = continuum_separation(r.coarse);
  write_json((c.out / "e2.json").string(), j, c.hash);
  for (std::size_t i = 0; i < r.error.e2.size(); ++i)
    std::printf("e2_%zu = %.4f %%  (ratio form %.4f %%)\n", i + 1, r.error.e2[i], r.error.e2_ratio[i]);
  return check_e2(c, r.error.e2) ? 0 : 3;
}

int cmd_spectra(const Context& c) {
  CaseSpec s = spec_of(c);
  FineGrid g = build_fine_grid(s.nx);
  CoarseGrid cg = build_coarse_grid(g, s.M);
  Medium m = make_medium(g, s);
  int omega = c.cfg.omega >= 0 ? c.cfg.omega : central_cell(s.M);
  SpectralReport rep = spectral_decompose(cg.patch(omega), m.kappa, c.cfg.spectral_modes);
  IdentifyResult id = identify_continua(rep, m.kappa);
  {
    std::ofstream os(c.out / "spectra.csv");
    os << provenance(c.hash) << "\nk,lambda\n";
    for (int k = 0; k < rep.values.size(); ++k) os << k + 1 << ',' << detail::fmt(rep.values[k]) << '\n';
  }
  const int w = rep.rve.cx + 1;
  for (int k = 0; k < rep.vectors.cols(); ++k)
    write_pgm((c.out / ("eigvec" + std::to_string(k + 1) + ".pgm")).string(), w, w,
              std::vector<double>(rep.vectors.col(k).data(), rep.vectors.col(k).data() + w * w));
  std::vector<double> lab(id.map.labels.begin(), id.map.labels.end());
  write_pgm((c.out / "identified.pgm").string(), id.map.nx, id.map.nx, lab);
  nlohmann::json j;
  j["omega"] = omega;
  j["eigenvalues"] = std::vector<double>(rep.values.data(), rep.values.data() + rep.values.size());
  j["gap"] = rep.gap;
  j["gap_ratio"] = rep.gap_ratio;
  j["structure"] = id.structure;
  j["continua"] = id.map.N;
  write_json((c.out / "spectra.json").string(), j, c.hash);
  std::printf("spectra on cell %d: gap after %d eigenvalues (ratio %.3g), %d continua\n", omega,
              rep.gap, rep.gap_ratio, id.map.N);
  return 0;
}

int cmd_sweep(const Context& c) {
  CaseSpec base = spec_of(c);
  std::vector<CaseSpec> pts;
  if (c.cfg.sweep.empty()) pts.push_back(base);
  for (const auto& p : c.cfg.sweep) {
    CaseSpec s = base;
    if (p.nx > 0) s.nx = p.nx;
    s.M = p.M;
    s.eps = p.eps;
    s.layers = p.layers;
    pts.push_back(s);
  }
  std::vector<SweepRow> rows = run_sweep(pts);
  write_sweep_csv((c.out / "sweep.csv").string(), rows, c.hash);
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  bool all_ok = true;
  std::vector<double> e2_all;
  for (const auto& r : rows) {
    nlohmann::json q;
    q["nx"] = r.spec.nx;
    q["M"] = r.spec.M;
    q["epsilon"] = r.spec.eps;
    q["layers"] = r.layers;
    q["ok"] = r.ok;
    q["e2_percent"] = r.e2;
    q["e2_ratio_percent"] = r.e2_ratio;
    if (!r.ok) q["message"] = r.message;
    j["points"].push_back(q);
    all_ok &= r.ok;
    e2_all.insert(e2_all.end(), r.e2.begin(), r.e2.end());
    std::printf("M=%d eps=%.6g l=%d: %s", r.spec.M, r.spec.eps, r.layers, r.ok ? "" : r.message.c_str());
    for (double e : r.e2) std::printf(" %.4f%%", e);
    std::printf("\n");
  }
  write_json((c.out / "sweep.json").string(), j, c.hash);
  if (!all_ok) return 2;
  return check_e2(c, e2_all) ? 0 : 3;
}

int cmd_decay(const Context& c) {
  CaseSpec s = spec_of(c);
  if (c.cfg.l_list.empty()) throw ValidationError("decay needs l_list");
  FineGrid g = build_fine_grid(s.nx);
  CoarseGrid cg = build_coarse_grid(g, s.M);
  Medium m = make_medium(g, s);
  int omega = c.cfg.omega >= 0 ? c.cfg.omega : central_cell(s.M);
  CellOptions co;
  co.tol = s.tol;
  auto rows = boundary_decay_study(cg, m, omega, c.cfg.l_list, co, s.extension);
  std::ofstream os(c.out / "decay.csv");
  os << provenance(c.hash) << "\nl,delta,delta_relative,row_sum\n";
  for (const auto& r : rows) {
    os << r.layers << ',' << detail::fmt(r.delta) << ',' << detail::fmt(r.delta_relative) << ','
       << detail::fmt(r.row_sum) << '\n';
    std::printf("l=%d delta=%.3e relative=%.3e\n", r.layers, r.delta, r.delta_relative);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multicontinuum upscaling of high-contrast diffusion"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file, eps_text, layers_text;
  std::vector<std::string> sets;
  RunConfig cli;
  bool check = false;
  app.add_option("-c,--config", config_file, "JSON config file");
  app.add_option("--set", sets, "key=value override (repeatable)");
  app.add_option("--case", cli.case_name, "case1, case1_fixed, case2, case3 or file");
  app.add_option("--nx", cli.nx, "fine cells per side");
  app.add_option("--M", cli.M, "coarse cells per side");
  app.add_option("--eps", eps_text, "period, e.g. 0.1 or 1/40");
  app.add_option("--layers", layers_text, "oversampling layers or auto");
  app.add_option("--out", cli.outdir, "output directory");
  app.add_option("--threads", cli.threads, "worker threads (0: all cores)");
  app.add_flag("--check", check, "compare e2 against expect_e2, exit 3 on mismatch");

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Context&);
  };
  const Sub subs[] = {
      {"solve-fine", "fine-grid reference solution", cmd_solve_fine},
      {"upscale", "effective coefficients per coarse cell", cmd_upscale},
      {"solve-coarse", "coupled coarse equations", cmd_solve_coarse},
      {"compare", "fine vs coarse averages and e2", cmd_compare},
      {"spectra", "local spectral problem and continuum identification", cmd_spectra},
      {"sweep", "run a list of (M, epsilon, l) points", cmd_sweep},
      {"decay", "effective coefficients against the layer count", cmd_decay},
  };
  std::vector<CLI::App*> apps;
  for (const auto& s : subs) apps.push_back(app.add_subcommand(s.name, s.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    std::vector<std::string> keys;
    auto given = [&](const char* opt) { return app.get_option(opt)->count() > 0; };
    if (given("--case")) keys.push_back("case");
    if (given("--nx")) keys.push_back("nx");
    if (given("--M")) keys.push_back("M");
    if (given("--out")) keys.push_back("outdir");
    if (given("--threads")) keys.push_back("threads");
    if (given("--eps")) sets.insert(sets.begin(), "epsilon=\"" + eps_text + "\"");
    if (given("--layers")) {
      bool num = !layers_text.empty() && layers_text.find_first_not_of("0123456789") == std::string::npos;
      sets.insert(sets.begin(), "layers=" + (num ? layers_text : "\"" + layers_text + "\""));
    }
    Context ctx = prepare(config_file, sets, cli, keys, check);
    for (std::size_t q = 0; q < apps.size(); ++q)
      if (apps[q]->parsed()) return subs[q].run(ctx);
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
