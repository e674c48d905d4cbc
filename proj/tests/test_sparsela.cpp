#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <mcup/ordering.hpp>
#include <mcup/sparsela.hpp>

using namespace mcup;
using Catch::Approx;

namespace {

SparseSym from_dense(const MatrixXd& D) { return D.sparseView(); }

// 1D Laplacian with natural ends (element stiffness [1 -1; -1 1] / h).
SparseSym neumann_1d(int cells, double h) {
  std::vector<Triplet> t;
  for (int e = 0; e < cells; ++e) {
    t.emplace_back(e, e, 1 / h);
    t.emplace_back(e + 1, e + 1, 1 / h);
    t.emplace_back(e, e + 1, -1 / h);
    t.emplace_back(e + 1, e, -1 / h);
  }
  SparseSym A(cells + 1, cells + 1);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

SparseSym mass_1d(int cells, double h) {
  std::vector<Triplet> t;
  for (int e = 0; e < cells; ++e) {
    t.emplace_back(e, e, h / 3);
    t.emplace_back(e + 1, e + 1, h / 3);
    t.emplace_back(e, e + 1, h / 6);
    t.emplace_back(e + 1, e, h / 6);
  }
  SparseSym B(cells + 1, cells + 1);
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

}  // namespace

TEST_CASE("spd solve: identity and 1D Dirichlet Laplacian") {
  SparseSym I(4, 4);
  I.setIdentity();
  VectorXd b(4);
  b << 1, -2, 3.5, 0.25;
  CHECK((solve_spd(I, b) - b).norm() == Approx(0).margin(1e-14));

  MatrixXd L(3, 3);
  L << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  VectorXd x = solve_spd(from_dense(L), VectorXd::Ones(3));
  // closed form of the 3x3 tridiagonal system
  CHECK(x[0] == Approx(1.5));
  CHECK(x[1] == Approx(2.0));
  CHECK(x[2] == Approx(1.5));

  SpdSolver s(from_dense(L));
  s.solve(VectorXd::Ones(3));
  CHECK(s.last_residual() <= 1e-10);
}

TEST_CASE("spd solve rejects indefinite matrices") {
  MatrixXd D(2, 2);
  D << 1, 0, 0, -1;
  CHECK_THROWS_AS(solve_spd(from_dense(D), VectorXd::Ones(2)), SolverError);
}

TEST_CASE("saddle: hand-solved 3x3 KKT system") {
  SparseSym A(2, 2);
  A.setIdentity();
  MatrixXd Cd(1, 2);
  Cd << 1, 0;
  VectorXd g(1);
  g << 2;
  for (auto method : {SaddleMethod::Direct, SaddleMethod::ProjectedCG}) {
    SaddleOptions opt;
    opt.method = method;
    SaddleSolution s = SaddleSolver(A, from_dense(Cd), opt).solve(VectorXd::Zero(2), g);
    CHECK(s.x[0] == Approx(2.0));
    CHECK(s.x[1] == Approx(0.0).margin(1e-12));
    CHECK(s.multipliers[0] == Approx(-2.0));
  }
}

TEST_CASE("saddle: Neumann Laplacian with a mean constraint") {
  const int cells = 20;
  const double h = 1.0 / cells;
  SparseSym A = neumann_1d(cells, h);
  MatrixXd Cd = MatrixXd::Zero(1, cells + 1);
  for (int e = 0; e < cells; ++e) {
    Cd(0, e) += h / 2;
    Cd(0, e + 1) += h / 2;
  }
  VectorXd g(1);
  g << 1.0;
  SaddleSolution s = solve_saddle({A, from_dense(Cd), VectorXd::Zero(cells + 1), g});
  CHECK((s.x - VectorXd::Ones(cells + 1)).lpNorm<Eigen::Infinity>() == Approx(0).margin(1e-10));
  CHECK(s.multipliers[0] == Approx(0).margin(1e-10));
  CHECK(s.constraint_residual <= 1e-12);
}

TEST_CASE("saddle: empty and repeated constraint rows") {
  SparseSym A(3, 3);
  A.setIdentity();
  MatrixXd Cd = MatrixXd::Zero(2, 3);
  Cd(0, 0) = 1.0;
  try {
    SaddleSolver S(A, from_dense(Cd));
    FAIL("expected an error");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  Cd(1, 0) = 2.0;
  CHECK_THROWS_AS(SaddleSolver(A, from_dense(Cd)), SolverError);
}

TEST_CASE("saddle with a nested dissection order") {
  // 2D Neumann Laplacian on a 6x6 cell grid with 4 patch-average constraints.
  const int c = 6, n = (c + 1) * (c + 1);
  std::vector<Triplet> t, ct;
  auto id = [&](int i, int j) { return j * (c + 1) + i; };
  const double K[4][4] = {{4, -1, -2, -1}, {-1, 4, -1, -2}, {-2, -1, 4, -1}, {-1, -2, -1, 4}};
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < c; ++i) {
      int nd[4] = {id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)};
      int p = (j / 3) * 2 + i / 3;
      for (int a = 0; a < 4; ++a) {
        ct.emplace_back(p, nd[a], 0.25);
        for (int b = 0; b < 4; ++b) t.emplace_back(nd[a], nd[b], K[a][b] / 6.0);
      }
    }
  SparseSym A(n, n), C(4, n);
  A.setFromTriplets(t.begin(), t.end());
  C.setFromTriplets(ct.begin(), ct.end());
  std::vector<std::vector<int>> extras(4);
  for (int p = 0; p < 4; ++p) extras[p].push_back(n + p);
  std::vector<int> order = grid_dissection(c, c, 3, extras);
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (int q = 0; q < n + 4; ++q) REQUIRE(sorted[q] == q);

  SaddleOptions opt;
  opt.method = SaddleMethod::Direct;
  opt.order = &order;
  VectorXd g(4);
  g << 9, 0, 0, 0;
  SaddleSolution s = SaddleSolver(A, C, opt).solve(VectorXd::Zero(n), g);
  VectorXd r = C * s.x - g;
  CHECK(r.norm() <= 1e-10);
  // multipliers sum to zero: the constant lies in the kernel of A
  CHECK(s.multipliers.sum() == Approx(0).margin(1e-10));
}

TEST_CASE("eigen: identity pencil") {
  SparseSym I(5, 5);
  I.setIdentity();
  EigenPairs ep = smallest_eigpairs(I, I, 3);
  for (int k = 0; k < 3; ++k) CHECK(ep.values[k] == Approx(1.0));
}

TEST_CASE("eigen: 1D Neumann Laplacian against the analytic spectrum") {
  const double pi = std::acos(-1.0);
  double prev = 1.0;
  for (int cells : {25, 50, 100}) {
    double h = 1.0 / cells;
    EigenPairs ep = smallest_eigpairs(neumann_1d(cells, h), mass_1d(cells, h), 3);
    CHECK(ep.values[0] == Approx(0).margin(1e-8));
    VectorXd c = ep.vectors.col(0);
    CHECK((c.array() - c[0]).abs().maxCoeff() <= 1e-8 * std::abs(c[0]));
    double err = std::abs(ep.values[1] - pi * pi) / (pi * pi);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.01);
}

TEST_CASE("eigen: subspace iteration agrees with the dense path") {
  const int cells = 400;
  double h = 1.0 / cells;
  SparseSym A = neumann_1d(cells, h), B = mass_1d(cells, h);
  EigenOptions iterative;
  iterative.dense_threshold = 10;
  EigenPairs a = smallest_eigpairs(A, B, 4, iterative);
  EigenPairs b = smallest_eigpairs(A, B, 4);
  for (int k = 1; k < 4; ++k) CHECK(a.values[k] == Approx(b.values[k]).epsilon(1e-7));
  CHECK(a.worst_residual <= 1e-8);
}
