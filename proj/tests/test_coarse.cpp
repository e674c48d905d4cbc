#include <catch_amalgamated.hpp>

#include <mcup/coarse.hpp>
#include <mcup/effective.hpp>
#include <mcup/verify.hpp>

using namespace mcup;
using Catch::Approx;

namespace {

std::vector<EffectiveCoefficients> constant_coefficients(const CoarseGrid& cg, int N, double kappa,
                                                         double exchange, std::vector<double> f) {
  std::vector<EffectiveCoefficients> out(cg.cell_count());
  for (int w = 0; w < cg.cell_count(); ++w) {
    EffectiveCoefficients& e = out[w];
    e.N = N;
    e.omega = w;
    e.rve_area = e.cell_area = cg.H * cg.H;
    e.alpha_raw.assign(N * N * 4, 0.0);
    e.beta_raw.assign(N * N, 0.0);
    e.beta_m_raw.assign(N * N * 2, 0.0);
    for (int i = 0; i < N; ++i) {
      e.alpha_raw[((i * N + i) * 2 + 0) * 2 + 0] = kappa * e.rve_area;
      e.alpha_raw[((i * N + i) * 2 + 1) * 2 + 1] = kappa * e.rve_area;
      for (int j = 0; j < N; ++j) e.beta_raw[i * N + j] = (i == j ? exchange : -exchange) * e.rve_area;
    }
    e.source = f;
  }
  return out;
}

}  // namespace

TEST_CASE("N=1 constant coefficients give the Q1 Laplacian") {
  CoarseGrid cg = build_coarse_grid(build_fine_grid(8), 4);
  CoarseSystem sys = assemble_coarse(cg, constant_coefficients(cg, 1, 1.0, 0.0, {0.0625}));
  REQUIRE(sys.K.rows() == 9);
  MatrixXd K(sys.K);
  // interior node stencil: 8/3 on the diagonal, -1/3 to each of the 8 neighbours
  int c = sys.free_index[cg.node(2, 2)];
  CHECK(K(c, c) == Approx(8.0 / 3.0));
  CHECK(K(c, sys.free_index[cg.node(1, 2)]) == Approx(-1.0 / 3.0));
  CHECK(K(c, sys.free_index[cg.node(1, 1)]) == Approx(-1.0 / 3.0));
  CHECK((K - K.transpose()).norm() <= 1e-12);
  CHECK(sys.rhs.sum() == Approx(9 * 0.0625));
}

TEST_CASE("identical continua without exchange give identical fields") {
  CoarseGrid cg = build_coarse_grid(build_fine_grid(20), 10);
  CoarseSolution s = solve_coarse(assemble_coarse(cg, constant_coefficients(cg, 2, 1.0, 0.0, {0.01, 0.01})));
  CHECK((s.U[0] - s.U[1]).norm() <= 1e-12 * s.U[0].norm());
  CHECK(s.U[0].maxCoeff() > 0.0);
  CHECK(s.residual <= 1e-10);
}

TEST_CASE("symmetry, zero source and input checks") {
  CoarseGrid cg = build_coarse_grid(build_fine_grid(20), 5);
  auto eff = constant_coefficients(cg, 2, 2.0, 5.0, {0.0, 0.0});
  for (auto& e : eff) e.beta_m_raw = {0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.0, 0.4};
  CoarseSystem sys = assemble_coarse(cg, eff);
  MatrixXd K(sys.K);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
  CoarseSolution s = solve_coarse(sys);
  CHECK(s.U[0].norm() == 0.0);

  eff.pop_back();
  CHECK_THROWS_AS(assemble_coarse(cg, eff), ValidationError);
}

TEST_CASE("exchange pulls the continua together") {
  CoarseGrid cg = build_coarse_grid(build_fine_grid(20), 10);
  auto weak = constant_coefficients(cg, 2, 1.0, 0.0, {0.01, 0.0});
  auto strong = constant_coefficients(cg, 2, 1.0, 1e6, {0.01, 0.0});
  CoarseSolution a = solve_coarse(assemble_coarse(cg, weak));
  CoarseSolution b = solve_coarse(assemble_coarse(cg, strong));
  CHECK(a.U[1].norm() == Approx(0).margin(1e-14));
  CHECK(continuum_separation(b) < 0.01);
  // Q1 mean over a cell is the average of the four corners
  CHECK(b.cell_mean(0, 0) == Approx(0.25 * b.node_value(0, 1, 1)));
}
