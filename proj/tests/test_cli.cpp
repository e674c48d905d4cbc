#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <mcup/config.hpp>
#include <mcup/io.hpp>

using namespace mcup;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mcup_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  std::string cmd = std::string(MCUP_CLI) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round trip and validation") {
  RunConfig c;
  c.eps = 1.0 / 40;
  c.nx = 80;
  c.M = 10;
  c.layers = 3;
  c.sweep = {{0, 10, 0.1, -1}, {160, 20, 0.05, 2}};
  c.l_list = {0, 1, 2};
  c.kappa_low = 1e-3;
  RunConfig back = from_json(to_json(c));
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
  c.M = 20;
  CHECK(config_hash(back) != config_hash(c));

  CHECK(parse_fraction(nlohmann::json("1/40"), "e") == Approx(0.025));
  CHECK(parse_fraction(nlohmann::json(0.5), "e") == 0.5);
  CHECK_THROWS_AS(parse_fraction(nlohmann::json("1/0"), "e"), ValidationError);
  CHECK_THROWS_AS(parse_fraction(nlohmann::json("abc"), "e"), ValidationError);

  RunConfig empty;
  CHECK_THROWS_AS(validate(empty), ValidationError);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"nonsense", 1}}), ValidationError);

  RunConfig o;
  apply_override(o, "epsilon=1/20");
  apply_override(o, "layers=auto");
  apply_override(o, "cross_terms=false");
  CHECK(*o.eps == Approx(0.05));
  CHECK(o.layers == -1);
  CHECK_FALSE(o.cross_terms);
  CHECK_THROWS_AS(apply_override(o, "M"), ValidationError);

  RunConfig bad;
  bad.eps = 1.0 / 30;
  bad.nx = 40;
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("medium csv round trip") {
  fs::path d = scratch("medium");
  FineGrid g = build_fine_grid(40);
  Medium m = gen_case2(g, 0.1);
  write_medium_csv((d / "m.csv").string(), m, "abc");
  Medium back = read_medium_csv((d / "m.csv").string());
  CHECK(back.kappa.values == m.kappa.values);
  CHECK(back.map.labels == m.map.labels);
  CHECK(back.map.N == 2);
  CHECK(back.kappa.epsilon == Approx(0.1));

  std::ofstream((d / "bad.csv").string()) << "i,j,kappa,continuum\n0,0,-1,1\n";
  CHECK_THROWS_AS(read_medium_csv((d / "bad.csv").string()), ValidationError);
}

TEST_CASE("cli: outputs and exit codes") {
  fs::path d = scratch("cli");
  std::string base = "--nx 40 --M 10 --eps 1/10 --layers 1 --out " + d.string();
  REQUIRE(run("compare " + base) == 0);
  for (const char* f : {"config.echo", "fine.csv", "eff.csv", "coarse_U1.csv", "coarse_U2.csv", "e2.json",
                        "kappa.pgm", "fine.pgm"})
    CHECK(fs::exists(d / f));
  nlohmann::json j = nlohmann::json::parse(slurp(d / "e2.json"));
  CHECK(j["e2_percent"].size() == 2);
  CHECK(j["constraint_residual"].get<double>() <= 1e-8);
  CHECK(slurp(d / "fine.csv").rfind("# mcup", 0) == 0);

  // validation failures
  CHECK(run("compare --nx 40 --M 7 --eps 1/10 --out " + d.string()) == 1);
  CHECK(run("compare --nx 40 --M 10 --out " + d.string()) == 1);
  CHECK(run("compare " + base + " --set bogus=1") == 1);

  // --check against a deliberately wrong expectation
  double e1 = j["e2_percent"][0].get<double>(), e2 = j["e2_percent"][1].get<double>();
  std::ostringstream good, bad;
  good << "expect_e2=[" << e1 << "," << e2 << "]";
  bad << "expect_e2=[" << e1 * 10 << "," << e2 << "]";
  CHECK(run("compare " + base + " --check --set '" + good.str() + "'") == 0);
  CHECK(run("compare " + base + " --check --set '" + bad.str() + "'") == 3);

  // a one-point sweep reproduces compare
  fs::path s = scratch("cli_sweep");
  REQUIRE(run("sweep --nx 40 --M 10 --eps 1/10 --layers 1 --out " + s.string()) == 0);
  nlohmann::json sw = nlohmann::json::parse(slurp(s / "sweep.json"));
  CHECK(sw["points"][0]["e2_percent"][0].get<double>() == e1);
  CHECK(sw["points"][0]["e2_percent"][1].get<double>() == e2);

  fs::path dd = scratch("cli_decay");
  REQUIRE(run("decay --nx 40 --M 10 --eps 1/10 --set 'l_list=[0,1,2]' --out " + dd.string()) == 0);
  std::string decay = slurp(dd / "decay.csv");
  CHECK(decay.find("l,delta") != std::string::npos);
  CHECK(std::count(decay.begin(), decay.end(), '\n') == 5);
}
