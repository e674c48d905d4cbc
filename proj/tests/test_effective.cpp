#include <catch_amalgamated.hpp>

#include <mcup/effective.hpp>
#include <mcup/upscale.hpp>
#include <mcup/verify.hpp>

using namespace mcup;
using Catch::Approx;

namespace {

Medium one_phase(const Medium& m) { return Medium{m.kappa, single_continuum(m.kappa.nx)}; }

SourceField ones(int nx) { return SourceField{nx, std::vector<double>(static_cast<std::size_t>(nx) * nx, 1.0)}; }

}  // namespace

TEST_CASE("N=1 on a constant medium gives kappa times identity") {
  FineGrid g = build_fine_grid(40);
  CoarseGrid cg = build_coarse_grid(g, 10);
  Medium m{ConductivityField{40, 0.1, std::vector<double>(1600, 3.0), ""}, single_continuum(40)};
  UpscaleOptions opt;
  opt.layers = 5;
  UpscaleResult r = upscale(cg, m, ones(40), opt);
  for (int w : {0, 9, 44, 99}) {
    const EffectiveCoefficients& e = r.cells[w];
    CHECK(e.alpha(0, 0, 0, 0) == Approx(3.0).epsilon(0.01));
    CHECK(e.alpha(0, 0, 1, 1) == Approx(3.0).epsilon(0.01));
    CHECK(e.alpha(0, 0, 0, 1) == Approx(0).margin(0.03));
    CHECK(e.beta(0, 0) == Approx(0).margin(1e-8));
    // phi = 1 so f_1 is the cell area
    CHECK(e.source[0] == Approx(0.01));
  }
}

TEST_CASE("N=1 on a laminate matches the layered closed forms") {
  FineGrid g = build_fine_grid(80);
  CoarseGrid cg = build_coarse_grid(g, 10);
  LayerParams p;
  p.kappa_low = 1.0;
  p.kappa_high = 20.0;
  Medium m = one_phase(gen_case1(g, 0.05, p));
  auto [arith, harm] = layered_oracle(1.0, 20.0, 0.5);
  UpscaleOptions opt;
  opt.layers = 5;
  UpscaleResult r = upscale(cg, m, ones(80), opt);
  const EffectiveCoefficients& e = r.cells[44];
  // layers are normal to x1: arithmetic along x2, harmonic across
  CHECK(e.alpha(0, 0, 1, 1) == Approx(arith).epsilon(0.02));
  CHECK(e.alpha(0, 0, 0, 0) == Approx(harm).epsilon(0.02));
}

TEST_CASE("memoised solves equal fresh solves") {
  FineGrid g = build_fine_grid(40);
  CoarseGrid cg = build_coarse_grid(g, 10);
  Medium m = gen_case1(g, 0.1);
  SourceField f = gen_source(g, m.kappa, m.map);
  UpscaleOptions a, b;
  a.layers = b.layers = 1;
  b.reuse = false;
  UpscaleResult ra = upscale(cg, m, f, a), rb = upscale(cg, m, f, b);
  CHECK(ra.distinct_solves < rb.distinct_solves);
  for (int w = 0; w < cg.cell_count(); ++w) {
    REQUIRE(ra.cells[w].alpha_raw == rb.cells[w].alpha_raw);
    REQUIRE(ra.cells[w].beta_raw == rb.cells[w].beta_raw);
    REQUIRE(ra.cells[w].source == rb.cells[w].source);
  }
  CHECK(ra.identities.worst() <= 1e-8);
}

TEST_CASE("boundary extension only changes regions that reach the wall") {
  FineGrid g = build_fine_grid(40);
  CoarseGrid cg = build_coarse_grid(g, 10);
  Medium m = gen_case1(g, 0.1);
  SourceField f = gen_source(g, m.kappa, m.map);
  UpscaleOptions per, clip;
  per.layers = clip.layers = 1;
  clip.extension = Extension::Clip;
  UpscaleResult rp = upscale(cg, m, f, per), rc = upscale(cg, m, f, clip);
  CHECK(rp.cells[44].alpha_raw == rc.cells[44].alpha_raw);
  CHECK(rp.cells[0].alpha_raw != rc.cells[0].alpha_raw);
  // a periodic medium looks the same from every coarse cell once extended
  for (std::size_t q = 0; q < rp.cells[0].alpha_raw.size(); ++q)
    CHECK(rp.cells[0].alpha_raw[q] == Approx(rp.cells[44].alpha_raw[q]).margin(1e-12));
}

TEST_CASE("rescaling and column layout") {
  EffectiveCoefficients e;
  e.N = 1;
  e.rve_area = e.cell_area = 0.25;
  e.alpha_raw = {1, 0, 0, 1};
  e.beta_raw = {2};
  e.beta_m_raw = {3, 4};
  e.source = {5};
  Rescaled r = rescale(e, 0.1);
  CHECK(r.alpha_hat[0] == Approx(4));
  CHECK(r.beta_hat[0] == Approx(0.08));
  CHECK(r.beta_m_hat[1] == Approx(1.6));
  CHECK(coefficient_columns(1).size() == coefficient_row(e).size());
  CHECK(coefficient_columns(2).size() == 16 + 4 + 8 + 2);
  CHECK(e.density() == Approx(4));
}
