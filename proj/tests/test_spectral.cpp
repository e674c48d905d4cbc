#include <catch_amalgamated.hpp>

#include <cmath>

#include <mcup/media.hpp>
#include <mcup/spectral.hpp>

using namespace mcup;
using Catch::Approx;

namespace {

// Two vertical high-conductivity channels on a 20x20 field.
ConductivityField two_channels(double contrast) {
  ConductivityField k{20, 0.0, std::vector<double>(400, 1.0 / contrast), ""};
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 20; ++i)
      if ((i >= 3 && i < 7) || (i >= 13 && i < 17)) k.values[j * 20 + i] = 1.0;
  return k;
}

}  // namespace

TEST_CASE("uniform medium: analytic Neumann spectrum, no structure") {
  const double pi = std::acos(-1.0);
  FineGrid g = build_fine_grid(40);
  ConductivityField k{40, 0.0, std::vector<double>(1600, 1.0), ""};
  SpectralReport rep = spectral_decompose(whole(g), k, 4);
  CHECK(rep.values[0] == 0.0);
  CHECK(rep.values[1] == Approx(pi * pi).epsilon(0.01));
  CHECK(rep.values[2] == Approx(pi * pi).epsilon(0.01));
  CHECK(rep.values[3] == Approx(2 * pi * pi).epsilon(0.01));
  CHECK(rep.gap == 1);
  CHECK_FALSE(identify_continua(rep, k).structure);
  CHECK_THROWS_AS(spectral_decompose(whole(g), k, 1), ValidationError);
}

TEST_CASE("two channels: gap, identification and contrast scaling") {
  FineGrid g = build_fine_grid(20);
  ConductivityField k = two_channels(1e6);
  SpectralReport rep = spectral_decompose(whole(g), k, 4);
  CHECK(rep.gap == 2);
  CHECK(rep.gap_ratio > 1e3);

  IdentifyResult id = identify_continua(rep, k);
  REQUIRE(id.structure);
  CHECK(id.map.N == 2);
  int agree = 0;
  for (int c = 0; c < 400; ++c) agree += id.map.labels[c] == (k.values[c] == 1.0 ? 1 : 0);
  CHECK(agree >= 396);

  IdentifyOptions split;
  split.merge_channels = false;
  IdentifyResult sep = identify_continua(rep, k, split);
  CHECK(sep.map.N == 3);
  CHECK(sep.map.labels[5] != sep.map.labels[15]);

  std::vector<double> lx, ly;
  for (double c : {1e2, 1e4, 1e6}) {
    lx.push_back(std::log10(c));
    ly.push_back(std::log10(spectral_decompose(whole(g), two_channels(c), 3).values[1]));
  }
  CHECK((ly[2] - ly[0]) / (lx[2] - lx[0]) == Approx(-1.0).margin(0.1));
}

TEST_CASE("case 1 labels recovered from the spectrum") {
  FineGrid g = build_fine_grid(80);
  CoarseGrid cg = build_coarse_grid(g, 5);
  LayerParams p;
  p.kappa_low = 1e-6;
  p.kappa_high = 1.0;
  Medium m = gen_case1(g, 0.1, p);
  ContinuumMap found = identify_global(cg, m.kappa, 6);
  int agree = 0;
  for (std::size_t c = 0; c < found.labels.size(); ++c) agree += found.labels[c] == m.map.labels[c];
  CHECK(agree >= 0.99 * found.labels.size());
}
