#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include <mcup/media.hpp>

using namespace mcup;
using Catch::Approx;

namespace {

std::set<double> distinct(const ConductivityField& k) { return {k.values.begin(), k.values.end()}; }

double fraction_of(const ContinuumMap& m, int j) {
  double c = 0;
  for (int l : m.labels) c += l == j;
  return c / m.labels.size();
}

// 4-neighbour flood fill inside one period cell.
bool connected_in_period(const ContinuumMap& m, int pc, int label) {
  std::vector<int> seen(pc * pc, 0), stack;
  int start = -1, total = 0;
  for (int j = 0; j < pc; ++j)
    for (int i = 0; i < pc; ++i)
      if (m.at(i, j) == label) {
        ++total;
        if (start < 0) start = j * pc + i;
      }
  if (start < 0) return false;
  stack.push_back(start);
  seen[start] = 1;
  int reached = 0;
  while (!stack.empty()) {
    int c = stack.back();
    stack.pop_back();
    ++reached;
    int i = c % pc, j = c / pc;
    int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
    for (auto& q : nb) {
      if (q[0] < 0 || q[1] < 0 || q[0] >= pc || q[1] >= pc) continue;
      int d = q[1] * pc + q[0];
      if (!seen[d] && m.at(q[0], q[1]) == label) {
        seen[d] = 1;
        stack.push_back(d);
      }
    }
  }
  return reached == total;
}

}  // namespace

TEST_CASE("case 1 conductivity values follow the formulas") {
  FineGrid g = build_fine_grid(40);
  Medium m = gen_case1(g, 0.1);
  auto v = distinct(m.kappa);
  REQUIRE(v.size() == 2);
  CHECK(*v.begin() == Approx(1e-5));
  CHECK(*v.rbegin() == Approx(0.1));

  Medium fine = gen_case1(build_fine_grid(80), 1.0 / 40);
  // 0.4 / 2.5e-6
  CHECK(fine.kappa.max() / fine.kappa.min() == Approx(1.6e5));
}

TEST_CASE("case 1 layers") {
  FineGrid g = build_fine_grid(80);
  for (double eps : {0.1, 0.05, 0.025}) {
    Medium m = gen_case1(g, eps);
    CHECK(m.map.N == 2);
    CHECK(fraction_of(m.map, 1) == Approx(0.5).margin(1.0 / (eps * g.nx)));
    for (int c = 0; c < g.cell_count(); ++c)
      CHECK((m.map.labels[c] == 1) == (m.kappa.values[c] == m.kappa.max()));
  }
  // invariant along the layers
  Medium m = gen_case1(g, 0.1);
  for (int j = 1; j < g.nx; ++j)
    for (int i = 0; i < g.nx; ++i) REQUIRE(m.kappa.at(i, j) == m.kappa.at(i, 0));

  LayerParams p;
  p.normal = Axis::X2;
  Medium h = gen_case1(g, 0.1, p);
  for (int j = 0; j < g.nx; ++j)
    for (int i = 1; i < g.nx; ++i) REQUIRE(h.kappa.at(i, j) == h.kappa.at(0, j));

  p.high_fraction = 0.2;
  CHECK(fraction_of(gen_case1(build_fine_grid(100), 0.1, p).map, 1) == Approx(0.2).margin(1e-12));
  CHECK_THROWS_AS(gen_case1(g, 0.1, p), ValidationError);
}

TEST_CASE("case 1 rejects unresolved periods") {
  CHECK_THROWS_AS(gen_case1(build_fine_grid(40), 1.0 / 30), ValidationError);
  CHECK_THROWS_AS(gen_case1(build_fine_grid(40), 0.3), ValidationError);
  CHECK_THROWS_AS(gen_case1(build_fine_grid(40), 1.0 / 40), ValidationError);
}

TEST_CASE("fixed contrast variant") {
  FineGrid g = build_fine_grid(40);
  for (double eps : {0.1, 0.05}) {
    Medium m = gen_case1_fixed_contrast(g, eps);
    auto v = distinct(m.kappa);
    REQUIRE(v.size() == 2);
    CHECK(*v.begin() == Approx(1e-4));
    CHECK(*v.rbegin() == Approx(0.1));
    CHECK(m.kappa.max() / m.kappa.min() == Approx(1000));
    CHECK(m.map.labels == gen_case1(g, eps).map.labels);
  }
}

TEST_CASE("case 2 channel network") {
  FineGrid g = build_fine_grid(80);
  Medium m = gen_case2(g, 0.1);
  CHECK(fraction_of(m.map, 1) == Approx(1 - 0.75 * 0.75));
  CHECK(connected_in_period(m.map, 8, 1));
  CHECK(connected_in_period(m.map, 8, 0));
  ChannelParams zero;
  zero.width_fraction = 0.0;
  CHECK_THROWS_AS(gen_case2(g, 0.1, zero), ValidationError);
  auto v = distinct(m.kappa);
  CHECK(v.size() == 2);
}

TEST_CASE("case 3 modulation") {
  FineGrid g = build_fine_grid(80);
  ChannelParams none;
  none.modulation = 0.0;
  CHECK(gen_case3(g, 0.1, none).kappa.values == gen_case2(g, 0.1, none).kappa.values);

  Medium m = gen_case3(g, 0.1);
  CHECK(m.kappa.min() > 0.0);
  bool differs = false;
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) differs |= m.kappa.at(i, j) != m.kappa.at(i + 32, j + 32);
  CHECK(differs);
  ChannelParams bad;
  bad.modulation = 1.0;
  CHECK_THROWS_AS(gen_case3(g, 0.1, bad), ValidationError);
}

TEST_CASE("source term") {
  FineGrid g = build_fine_grid(40);
  Medium m = gen_case1(g, 0.1);
  SourceField f = gen_source(g, m.kappa, m.map);
  for (int j = 0; j < g.nx; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double x = (i + 0.5) / 40.0, y = (j + 0.5) / 40.0;
      double e = std::exp(-40.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
      double want = m.map.at(i, j) == 0 ? 1000.0 * 1e-5 * e : e;
      REQUIRE(f.values[g.cell(i, j)] == Approx(want).epsilon(1e-12));
    }
  // at the center of the bump: 1000 * 1e-5 on the low phase, 1 on the high phase
  CHECK(1000.0 * case_kappa_low(0.1) == Approx(0.01));
  // monotone in the distance from the center along a row inside one phase
  int j = 20;
  for (int i = 21; i < 39; ++i)
    if (m.map.at(i, j) == m.map.at(i + 1, j)) CHECK(f.values[g.cell(i + 1, j)] < f.values[g.cell(i, j)]);
}
