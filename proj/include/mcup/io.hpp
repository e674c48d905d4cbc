#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coarse.hpp"
#include "effective.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "media.hpp"
#include "pipeline.hpp"
#include "verify.hpp"

namespace mcup {

inline constexpr const char* kVersion = "0.3.0";

/// First line of every artifact.
inline std::string provenance(const std::string& config_hash) {
  return std::string("# mcup ") + kVersion + " config=" + config_hash;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot write " + path);
  return os;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

}  // namespace detail

/// Nodal fine solution: i,j,x,y,u.
inline void write_fine_csv(const std::string& path, const FineGrid& g, const VectorXd& u,
                           const std::string& hash) {
  auto os = detail::open_out(path);
  os << provenance(hash) << "\ni,j,x,y,u\n";
  for (int j = 0; j <= g.nx; ++j)
    for (int i = 0; i <= g.nx; ++i)
      os << i << ',' << j << ',' << detail::fmt(i * g.h) << ',' << detail::fmt(j * g.h) << ','
         << detail::fmt(u[g.node(i, j)]) << '\n';
}

/// Per-cell conductivity and 1-based continuum label: i,j,kappa,continuum.
inline void write_medium_csv(const std::string& path, const Medium& m, const std::string& hash) {
  auto os = detail::open_out(path);
  os << provenance(hash) << "\n# epsilon=" << detail::fmt(m.kappa.epsilon) << " N=" << m.map.N
     << "\ni,j,kappa,continuum\n";
  const int nx = m.kappa.nx;
  for (int j = 0; j < nx; ++j)
    for (int i = 0; i < nx; ++i)
      os << i << ',' << j << ',' << detail::fmt(m.kappa.at(i, j)) << ',' << m.map.at(i, j) + 1
         << '\n';
}

inline Medium read_medium_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read medium file " + path);
  double eps = 0.0;
  int N = 0;
  std::vector<std::array<double, 4>> rows;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto e = line.find("epsilon=");
      if (e != std::string::npos) eps = std::stod(line.substr(e + 8));
      continue;
    }
    if (!header) {
      if (line != "i,j,kappa,continuum")
        throw ValidationError(path + ":" + std::to_string(lineno) + ": expected header i,j,kappa,continuum");
      header = true;
      continue;
    }
    auto f = detail::split_csv(line);
    if (f.size() != 4) throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
    try {
      rows.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
    N = std::max(N, static_cast<int>(rows.back()[3]));
  }
  const int nx = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rows.size()))));
  if (nx < 2 || static_cast<std::size_t>(nx) * nx != rows.size())
    throw ValidationError(path + ": cell count " + std::to_string(rows.size()) + " is not a square");
  Medium m;
  m.kappa.nx = m.map.nx = nx;
  m.kappa.epsilon = eps;
  m.kappa.descriptor = "file " + path;
  m.kappa.values.assign(rows.size(), 0.0);
  m.map.labels.assign(rows.size(), -1);
  m.map.N = N;
  for (const auto& r : rows) {
    int i = static_cast<int>(r[0]), j = static_cast<int>(r[1]), c = static_cast<int>(r[3]);
    if (i < 0 || j < 0 || i >= nx || j >= nx) throw ValidationError(path + ": cell index out of range");
    if (!(r[2] > 0.0)) throw ValidationError(path + ": kappa must be positive");
    if (c < 1) throw ValidationError(path + ": continuum labels start at 1");
    m.kappa.values[j * nx + i] = r[2];
    m.map.labels[j * nx + i] = c - 1;
  }
  if (std::count(m.map.labels.begin(), m.map.labels.end(), -1) > 0)
    throw ValidationError(path + ": missing cells");
  return m;
}

/// Binary grayscale image, row 0 at the top (y decreasing downwards).
inline void write_pgm(const std::string& path, int w, int h, const std::vector<double>& v,
                      bool log_scale = false) {
  if (static_cast<int>(v.size()) != w * h) throw ValidationError("pgm: size mismatch");
  std::vector<double> t(v);
  if (log_scale)
    for (double& x : t) x = std::log10(std::max(x, 1e-300));
  auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  double a = *lo, b = *hi;
  auto os = detail::open_out(path);
  os << "P5\n" << w << ' ' << h << "\n255\n";
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x) {
      double s = b > a ? (t[y * w + x] - a) / (b - a) : 0.5;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * s))));
    }
}

inline void write_eff_csv(const std::string& path, const std::vector<EffectiveCoefficients>& eff,
                          const std::string& hash) {
  auto os = detail::open_out(path);
  os << provenance(hash) << "\nomega";
  const int N = eff.empty() ? 0 : eff[0].N;
  for (const auto& c : coefficient_columns(N)) os << ',' << c;
  os << '\n';
  for (const auto& e : eff) {
    os << e.omega;
    for (double v : coefficient_row(e)) os << ',' << detail::fmt(v);
    os << '\n';
  }
}

inline void write_coarse_csv(const std::string& path, const CoarseSolution& sol, int i,
                             const std::string& hash) {
  auto os = detail::open_out(path);
  os << provenance(hash) << "\na,b,x,y,U" << i + 1 << '\n';
  const double H = 1.0 / sol.M;
  for (int b = 0; b <= sol.M; ++b)
    for (int a = 0; a <= sol.M; ++a)
      os << a << ',' << b << ',' << detail::fmt(a * H) << ',' << detail::fmt(b * H) << ','
         << detail::fmt(sol.node_value(i, a, b)) << '\n';
}

inline nlohmann::json error_json(const ErrorReport& r) {
  nlohmann::json j;
  j["e2_percent"] = r.e2;
  j["e2_ratio_percent"] = r.e2_ratio;
  j["excluded_cells"] = r.excluded;
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j, const std::string& hash) {
  nlohmann::json out = j;
  out["version"] = kVersion;
  out["config_hash"] = hash;
  auto os = detail::open_out(path);
  os << out.dump(2) << '\n';
}

/// Sweep table: one row per point, failures keep their message.
inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                            const std::string& hash) {
  auto os = detail::open_out(path);
  os << provenance(hash)
     << "\ncase,nx,M,H,epsilon,l,ok,e2_1,e2_2,e2ratio_1,e2ratio_2,beta11,alpha11_11,alpha22_22,"
        "constraint_residual,identity_residual,message\n";
  for (const auto& r : rows) {
    auto at = [](const std::vector<double>& v, std::size_t k) {
      return k < v.size() ? detail::fmt(v[k]) : std::string();
    };
    os << case_name(r.spec.kind) << ',' << r.spec.nx << ',' << r.spec.M << ','
       << detail::fmt(1.0 / r.spec.M) << ',' << detail::fmt(r.spec.eps) << ',' << r.layers << ','
       << (r.ok ? 1 : 0) << ',' << at(r.e2, 0) << ',' << at(r.e2, 1) << ',' << at(r.e2_ratio, 0)
       << ',' << at(r.e2_ratio, 1) << ',';
    if (r.ok) {
      const auto& e = r.central;
      os << detail::fmt(e.beta(0, 0)) << ',' << detail::fmt(e.alpha(0, 0, 0, 0)) << ',';
      os << (e.N > 1 ? detail::fmt(e.alpha(1, 1, 1, 1)) : std::string()) << ','
         << detail::fmt(r.constraint_residual) << ',' << detail::fmt(r.identity_residual) << ',';
    } else {
      os << ",,,,,";
    }
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << msg << '\n';
  }
}

}  // namespace mcup
