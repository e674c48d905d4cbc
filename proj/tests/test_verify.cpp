#include <catch_amalgamated.hpp>

#include <mcup/coarse.hpp>
#include <mcup/media.hpp>
#include <mcup/verify.hpp>

using namespace mcup;
using Catch::Approx;

namespace {

VectorXd nodal_x(const FineGrid& g) {
  VectorXd u(g.node_count());
  for (int j = 0; j <= g.nx; ++j)
    for (int i = 0; i <= g.nx; ++i) u[g.node(i, j)] = i * g.h;
  return u;
}

}  // namespace

TEST_CASE("reference averages") {
  FineGrid g = build_fine_grid(20);
  CoarseGrid cg = build_coarse_grid(g, 5);
  Medium m = gen_case1(g, 0.2);
  ReferenceAverages one = average_reference(VectorXd::Ones(g.node_count()), cg, m.map);
  CHECK((one.avg.array() - 1.0).abs().maxCoeff() <= 1e-14);
  CHECK(one.excluded == 0);

  ReferenceAverages x = average_reference(nodal_x(g), cg, single_continuum(20));
  for (int k = 0; k < cg.cell_count(); ++k) CHECK(x.avg(0, k) == Approx((cg.cell_a(k) + 0.5) * cg.H));

  CHECK_THROWS_AS(average_reference(VectorXd::Ones(3), cg, m.map), ValidationError);
}

TEST_CASE("e2 of an exact coarse field is zero") {
  FineGrid g = build_fine_grid(20);
  CoarseGrid cg = build_coarse_grid(g, 5);
  ReferenceAverages ref = average_reference(nodal_x(g), cg, single_continuum(20));
  CoarseSolution s;
  s.N = 1;
  s.M = 5;
  s.U.assign(1, VectorXd(cg.node_count()));
  for (int b = 0; b <= 5; ++b)
    for (int a = 0; a <= 5; ++a) s.U[0][cg.node(a, b)] = a * cg.H;
  ErrorReport rep = e2_error(s, ref);
  CHECK(rep.e2[0] == Approx(0).margin(1e-12));

  // uniform 10 percent overshoot
  s.U[0] *= 1.1;
  rep = e2_error(s, ref);
  CHECK(rep.e2[0] == Approx(10.0));
  CHECK(rep.e2_ratio[0] == Approx(1.0));
}

TEST_CASE("layered oracle closed forms") {
  auto [a, h] = layered_oracle(1.0, 4.0, 0.5);
  CHECK(a == Approx(2.5));
  CHECK(h == Approx(1.6));
  CHECK(layered_oracle(1.0, 1e12, 0.5).second == Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(layered_oracle(0.0, 1.0, 0.5), ValidationError);
}

TEST_CASE("continuum separation") {
  CoarseSolution s;
  s.N = 2;
  s.M = 1;
  s.U = {VectorXd::Constant(4, 2.0), VectorXd::Constant(4, 1.5)};
  CHECK(continuum_separation(s) == Approx(0.25));
}
