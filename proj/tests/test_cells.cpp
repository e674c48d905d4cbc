#include <catch_amalgamated.hpp>

#include <mcup/cells.hpp>
#include <mcup/media.hpp>

using namespace mcup;
using Catch::Approx;

TEST_CASE("single continuum on a uniform medium") {
  FineGrid g = build_fine_grid(24);
  CoarseGrid cg = build_coarse_grid(g, 6);
  ConductivityField k{24, 0.0, std::vector<double>(576, 2.5), ""};
  OversampleRegion r = oversample(cg, cg.cell(2, 3), 1);
  CellSolutionSet s = solve_cells(r, k, single_continuum(24));
  CHECK((s.phi[0].array() - 1.0).abs().maxCoeff() <= 1e-9);
  CHECK(s.mu.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(s.constraint_residual <= 1e-10);
  // centroid of the target patch
  CHECK(s.centroid(0, 0) == Approx(2.5 / 6));
  CHECK(s.centroid(1, 0) == Approx(3.5 / 6));
}

TEST_CASE("two continua: constraints and multiplier identities") {
  FineGrid g = build_fine_grid(40);
  CoarseGrid cg = build_coarse_grid(g, 10);
  for (Medium m : {gen_case1(g, 0.1), gen_case2(g, 0.1)}) {
    for (int l : {0, 1, 2}) {
      OversampleRegion r = oversample(cg, cg.cell(5, 4), l);
      CellSolutionSet s = solve_cells(r, m.kappa, m.map);
      CHECK(s.constraint_residual <= 1e-8);
      IdentityReport rep = check_identities(s, m.kappa);
      CHECK(rep.row_sum <= 1e-8);
      CHECK(rep.energy_sum <= 1e-8);
      CHECK(rep.moment_energy <= 1e-8);

      // averages of phi_i on each patch, checked directly
      for (int p = 0; p < r.patch_count(); ++p) {
        SubGrid ps = r.patch_sub(p);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            Functional f = indicator_functional(r.sub, m.map, j, ps);
            CHECK(f.coeffs.dot(s.phi[i]) / f.value == Approx(i == j ? 1.0 : 0.0).margin(1e-8));
          }
      }
    }
  }
}

TEST_CASE("empty continuum is reported") {
  FineGrid g = build_fine_grid(20);
  CoarseGrid cg = build_coarse_grid(g, 5);
  ContinuumMap map = single_continuum(20);
  map.N = 2;
  ConductivityField k{20, 0.0, std::vector<double>(400, 1.0), ""};
  try {
    solve_avg_cells(oversample(cg, 12, 1), k, map);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("continuum 2") != std::string::npos);
  }
}

TEST_CASE("gradient-constraint mode: multiplier transpose identity") {
  FineGrid g = build_fine_grid(40);
  CoarseGrid cg = build_coarse_grid(g, 4);
  Medium m = gen_case3(g, 0.1);
  GradConstrainedSet s = solve_gradconstraint_cells(cg, 5, m.kappa, m.map);
  CHECK(s.constraint_residual <= 1e-8);
  const double scale = s.alpha[1].cwiseAbs().maxCoeff() + s.beta_m[1].cwiseAbs().maxCoeff();
  for (int mm = 0; mm < 2; ++mm)
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        CHECK(std::abs(s.alpha[mm](i, k) - s.beta_m[mm](k, i)) <= 1e-8 * scale);
  CHECK(std::abs(s.beta(0, 1) - s.beta(1, 0)) <= 1e-8 * s.beta.cwiseAbs().maxCoeff());
}

TEST_CASE("interface oscillation reads only nodes shared by two continua") {
  FineGrid g = build_fine_grid(4);
  SubGrid w = whole(g);
  ContinuumMap map = single_continuum(4);
  map.N = 2;
  for (int j = 0; j < 4; ++j)
    for (int i = 2; i < 4; ++i) map.labels[j * 4 + i] = 1;
  VectorXd f = VectorXd::Zero(w.node_count());
  f[w.node(0, 2)] = 5.0;   // inside continuum 0
  f[w.node(2, 3)] = -0.7;  // on the interface column
  CHECK(interface_oscillation(w, map, {f}, w) == Approx(0.7));
  CHECK(interface_oscillation(w, single_continuum(4), {f}, w) == 0.0);
}
