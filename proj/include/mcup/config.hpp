#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "grid.hpp"
#include "pipeline.hpp"

namespace mcup {

/// One (M, epsilon, l) point of a sweep; l < 0 means default_layers.
struct SweepPoint {
  int nx = 0;  // 0: inherit
  int M = 0;
  double eps = 0.0;
  int layers = -1;
  bool operator==(const SweepPoint&) const = default;
};

struct RunConfig {
  std::string case_name = "case1";
  int nx = 400;
  int M = 10;
  std::optional<double> eps;
  int layers = -1;  // -1: auto
  std::optional<double> kappa_low, kappa_high;
  double layer_fraction = 0.5;
  std::string layer_normal = "x1";
  double channel_width = 0.25;
  double modulation = 0.5;
  std::string continua = "generator";  // or "spectral"
  int spectral_modes = 4;
  bool cross_terms = true;
  bool gradient_constraint = false;
  bool dump_cells = false;
  std::string extension = "periodic";
  std::string medium_file;
  std::string outdir = "out";
  double tol = 1e-10;
  int threads = 1;
  int omega = -1;  // -1: central cell
  std::vector<int> l_list;
  std::vector<SweepPoint> sweep;
  std::vector<double> expect_e2;  // used by --check
  double expect_factor = 2.0;

  bool operator==(const RunConfig&) const = default;
};

/// Parses "0.025", "1/40" or a JSON number.
inline double parse_fraction(const nlohmann::json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ValidationError(key + ": expected a number or a fraction string");
  std::string s = v.get<std::string>();
  try {
    auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      double x = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return x;
    }
    double a = std::stod(s.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(s);
    std::string rest = s.substr(slash + 1);
    double b = std::stod(rest, &used);
    if (used != rest.size() || b == 0.0) throw std::invalid_argument(s);
    return a / b;
  } catch (const std::exception&) {
    throw ValidationError(key + ": cannot parse '" + s + "'");
  }
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["case"] = c.case_name;
  j["nx"] = c.nx;
  j["M"] = c.M;
  if (c.eps) j["epsilon"] = *c.eps;
  j["layers"] = c.layers < 0 ? nlohmann::json("auto") : nlohmann::json(c.layers);
  if (c.kappa_low) j["kappa_low"] = *c.kappa_low;
  if (c.kappa_high) j["kappa_high"] = *c.kappa_high;
  j["layer_fraction"] = c.layer_fraction;
  j["layer_normal"] = c.layer_normal;
  j["channel_width"] = c.channel_width;
  j["modulation"] = c.modulation;
  j["continua"] = c.continua;
  j["spectral_modes"] = c.spectral_modes;
  j["cross_terms"] = c.cross_terms;
  j["gradient_constraint"] = c.gradient_constraint;
  j["dump_cells"] = c.dump_cells;
  j["extension"] = c.extension;
  if (!c.medium_file.empty()) j["medium_file"] = c.medium_file;
  j["outdir"] = c.outdir;
  j["tol"] = c.tol;
  j["threads"] = c.threads;
  j["omega"] = c.omega;
  j["l_list"] = c.l_list;
  j["sweep"] = nlohmann::json::array();
  for (const auto& p : c.sweep) {
    nlohmann::json q;
    if (p.nx > 0) q["nx"] = p.nx;
    q["M"] = p.M;
    q["epsilon"] = p.eps;
    q["layers"] = p.layers < 0 ? nlohmann::json("auto") : nlohmann::json(p.layers);
    j["sweep"].push_back(q);
  }
  j["expect_e2"] = c.expect_e2;
  j["expect_factor"] = c.expect_factor;
  return j;
}

namespace detail {

inline int parse_layers(const nlohmann::json& v, const std::string& key) {
  if (v.is_string() && v.get<std::string>() == "auto") return -1;
  if (!v.is_number_integer()) throw ValidationError(key + ": expected an integer or \"auto\"");
  int l = v.get<int>();
  if (l < 0) throw ValidationError(key + ": layer count must be >= 0, got " + std::to_string(l));
  return l;
}

template <class T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(key + ": wrong type");
  }
}

}  // namespace detail

/// Overlays the keys present in j onto c. Unknown keys are rejected.
inline void merge_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    if (k == "case") c.case_name = detail::get_as<std::string>(v, k);
    else if (k == "nx") c.nx = detail::get_as<int>(v, k);
    else if (k == "M") c.M = detail::get_as<int>(v, k);
    else if (k == "epsilon") c.eps = parse_fraction(v, k);
    else if (k == "layers") c.layers = detail::parse_layers(v, k);
    else if (k == "kappa_low") c.kappa_low = parse_fraction(v, k);
    else if (k == "kappa_high") c.kappa_high = parse_fraction(v, k);
    else if (k == "layer_fraction") c.layer_fraction = parse_fraction(v, k);
    else if (k == "layer_normal") c.layer_normal = detail::get_as<std::string>(v, k);
    else if (k == "channel_width") c.channel_width = parse_fraction(v, k);
    else if (k == "modulation") c.modulation = parse_fraction(v, k);
    else if (k == "continua") c.continua = detail::get_as<std::string>(v, k);
    else if (k == "spectral_modes") c.spectral_modes = detail::get_as<int>(v, k);
    else if (k == "cross_terms") c.cross_terms = detail::get_as<bool>(v, k);
    else if (k == "gradient_constraint") c.gradient_constraint = detail::get_as<bool>(v, k);
    else if (k == "dump_cells") c.dump_cells = detail::get_as<bool>(v, k);
    else if (k == "extension") c.extension = detail::get_as<std::string>(v, k);
    else if (k == "medium_file") c.medium_file = detail::get_as<std::string>(v, k);
    else if (k == "outdir") c.outdir = detail::get_as<std::string>(v, k);
    else if (k == "tol") c.tol = parse_fraction(v, k);
    else if (k == "threads") c.threads = detail::get_as<int>(v, k);
    else if (k == "omega") c.omega = detail::get_as<int>(v, k);
    else if (k == "l_list") {
      c.l_list.clear();
      if (!v.is_array()) throw ValidationError("l_list: expected an array");
      for (const auto& e : v) c.l_list.push_back(detail::parse_layers(e, k));
    } else if (k == "sweep") {
      if (!v.is_array()) throw ValidationError("sweep: expected an array of points");
      c.sweep.clear();
      for (std::size_t q = 0; q < v.size(); ++q) {
        const auto& e = v[q];
        std::string where = "sweep[" + std::to_string(q) + "]";
        if (!e.contains("M") || !e.contains("epsilon"))
          throw ValidationError(where + ": needs M and epsilon");
        SweepPoint p;
        p.M = detail::get_as<int>(e["M"], where + ".M");
        p.eps = parse_fraction(e["epsilon"], where + ".epsilon");
        if (e.contains("nx")) p.nx = detail::get_as<int>(e["nx"], where + ".nx");
        if (e.contains("layers")) p.layers = detail::parse_layers(e["layers"], where + ".layers");
        c.sweep.push_back(p);
      }
    } else if (k == "expect_e2") {
      c.expect_e2 = detail::get_as<std::vector<double>>(v, k);
    } else if (k == "expect_factor") {
      c.expect_factor = parse_fraction(v, k);
    } else {
      throw ValidationError("config: unknown key '" + k + "'");
    }
  }
}

inline RunConfig from_json(const nlohmann::json& j) {
  RunConfig c;
  merge_json(c, j);
  return c;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read config file " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

/// Applies one "key=value" override; the value is read as JSON, falling back to a string.
inline void apply_override(RunConfig& c, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + kv + "': expected key=value");
  std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
  nlohmann::json v = nlohmann::json::parse(val, nullptr, false);
  if (v.is_discarded()) v = val;
  merge_json(c, nlohmann::json{{key, v}});
}

/// 16 hex digits of FNV-1a over the canonical JSON form.
inline std::string config_hash(const RunConfig& c) {
  std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Extension parse_extension(const std::string& s) {
  if (s == "clip") return Extension::Clip;
  if (s == "periodic") return Extension::Periodic;
  if (s == "reflect") return Extension::Reflect;
  throw ValidationError("extension must be clip, periodic or reflect, got '" + s + "'");
}

/// Checks everything that can be checked before a solve.
inline void validate(const RunConfig& c) {
  CaseKind kind = parse_case(c.case_name);
  if (!c.eps) throw ValidationError("epsilon is required");
  if (!(*c.eps > 0.0 && *c.eps <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
  if (c.nx < 2) throw ValidationError("nx must be >= 2, got " + std::to_string(c.nx));
  if (c.M < 1) throw ValidationError("M must be >= 1, got " + std::to_string(c.M));
  if (c.nx % c.M != 0)
    throw ValidationError("nx=" + std::to_string(c.nx) + " is not divisible by M=" + std::to_string(c.M));
  if (kind != CaseKind::File) {
    double pc = *c.eps * c.nx;
    if (std::abs(1.0 / *c.eps - std::round(1.0 / *c.eps)) > 1e-9 || std::abs(pc - std::round(pc)) > 1e-9)
      throw ValidationError("epsilon=" + std::to_string(*c.eps) + " is not resolved by nx=" +
                            std::to_string(c.nx));
  } else if (c.medium_file.empty()) {
    throw ValidationError("case 'file' needs medium_file");
  }
  if (c.layer_normal != "x1" && c.layer_normal != "x2")
    throw ValidationError("layer_normal must be x1 or x2");
  if (c.continua != "generator" && c.continua != "spectral")
    throw ValidationError("continua must be generator or spectral");
  if (c.spectral_modes < 2) throw ValidationError("spectral_modes must be >= 2");
  if (!(c.tol > 0.0)) throw ValidationError("tol must be positive");
  if (c.threads < 0) throw ValidationError("threads must be >= 0");
  if (c.omega >= c.M * c.M) throw ValidationError("omega is outside the coarse grid");
  parse_extension(c.extension);
  for (const auto& p : c.sweep) {
    int nx = p.nx > 0 ? p.nx : c.nx;
    if (p.M < 1 || nx % p.M != 0)
      throw ValidationError("sweep point nx=" + std::to_string(nx) + " is not divisible by M=" +
                            std::to_string(p.M));
  }
}

inline CaseSpec to_case_spec(const RunConfig& c) {
  validate(c);
  CaseSpec s;
  s.kind = parse_case(c.case_name);
  s.nx = c.nx;
  s.M = c.M;
  s.eps = *c.eps;
  s.layers = c.layers;
  s.layer.high_fraction = c.layer_fraction;
  s.layer.normal = c.layer_normal == "x2" ? Axis::X2 : Axis::X1;
  s.layer.kappa_low = s.channel.kappa_low = c.kappa_low;
  s.layer.kappa_high = s.channel.kappa_high = c.kappa_high;
  s.channel.width_fraction = c.channel_width;
  s.channel.modulation = c.modulation;
  s.cross_terms = c.cross_terms;
  s.mode = c.gradient_constraint ? CellMode::GradientConstraint : CellMode::Oversampled;
  s.extension = parse_extension(c.extension);
  s.spectral_continua = c.continua == "spectral";
  s.spectral_modes = c.spectral_modes;
  s.tol = c.tol;
  s.threads = c.threads;
  return s;
}

}  // namespace mcup
