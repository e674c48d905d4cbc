#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "grid.hpp"
#include "media.hpp"
#include "ordering.hpp"
#include "sparsela.hpp"

namespace mcup {

// Element node order: (0,0), (1,0), (1,1), (0,1).

/// Q1 stiffness of a square cell with unit conductivity (independent of h in 2D).
inline Eigen::Matrix4d q1_stiffness() {
  Eigen::Matrix4d K;
  K << 4, -1, -2, -1,
      -1, 4, -1, -2,
      -2, -1, 4, -1,
      -1, -2, -1, 4;
  return K / 6.0;
}

inline Eigen::Matrix4d q1_mass(double h) {
  Eigen::Matrix4d M;
  M << 4, 2, 1, 2,
       2, 4, 2, 1,
       1, 2, 4, 2,
       2, 1, 2, 4;
  return M * (h * h / 36.0);
}

inline std::array<int, 4> cell_nodes(const SubGrid& s, int li, int lj) {
  return {s.node(li, lj), s.node(li + 1, lj), s.node(li + 1, lj + 1), s.node(li, lj + 1)};
}

/// Q1 gradient on the cell at reference point (xi, eta) in [0,1]^2.
inline Eigen::Vector2d q1_gradient(const std::array<double, 4>& u, double h, double xi,
                                   double eta) {
  return {((u[1] - u[0]) * (1.0 - eta) + (u[2] - u[3]) * eta) / h,
          ((u[3] - u[0]) * (1.0 - xi) + (u[2] - u[1]) * xi) / h};
}

inline constexpr std::array<double, 2> kGauss2 = {0.21132486540518713, 0.78867513459481287};

/// Free/constrained partition of the nodes of a sub-grid.
struct FemSpace {
  SubGrid grid;
  std::vector<char> constrained;  // per node
  std::vector<int> free_index;    // -1 for constrained nodes
  int free_count = 0;

  static FemSpace natural(const SubGrid& g) {
    FemSpace s;
    s.grid = g;
    s.constrained.assign(g.node_count(), 0);
    s.free_index.resize(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) s.free_index[i] = i;
    s.free_count = g.node_count();
    return s;
  }
  static FemSpace dirichlet(const SubGrid& g) {
    FemSpace s;
    s.grid = g;
    s.constrained.assign(g.node_count(), 0);
    s.free_index.assign(g.node_count(), -1);
    for (int lj = 0; lj <= g.cy; ++lj)
      for (int li = 0; li <= g.cx; ++li) {
        int n = g.node(li, lj);
        if (li == 0 || lj == 0 || li == g.cx || lj == g.cy) s.constrained[n] = 1;
        else s.free_index[n] = s.free_count++;
      }
    return s;
  }
};

namespace detail {

inline void check_cover(const SubGrid& s, int nx) {
  if (s.i0 < 0 || s.j0 < 0 || s.i0 + s.cx > nx || s.j0 + s.cy > nx)
    throw ValidationError("sub-grid exceeds the field");
}

template <class CellMatrix>
SparseSym assemble_cells(const FemSpace& space, CellMatrix&& cell_matrix) {
  const SubGrid& g = space.grid;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(g.cell_count()) * 16);
  for (int lj = 0; lj < g.cy; ++lj)
    for (int li = 0; li < g.cx; ++li) {
      Eigen::Matrix4d Ke = cell_matrix(li, lj);
      auto nodes = cell_nodes(g, li, lj);
      for (int a = 0; a < 4; ++a) {
        int ra = space.free_index[nodes[a]];
        if (ra < 0) continue;
        for (int b = 0; b < 4; ++b) {
          int cb = space.free_index[nodes[b]];
          if (cb < 0) continue;
          t.emplace_back(ra, cb, Ke(a, b));
        }
      }
    }
  SparseSym A(space.free_count, space.free_count);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

}  // namespace detail

inline SparseSym assemble_stiffness(const FemSpace& space, const ConductivityField& k) {
  detail::check_cover(space.grid, k.nx);
  const Eigen::Matrix4d K0 = q1_stiffness();
  const SubGrid& g = space.grid;
  return detail::assemble_cells(space, [&](int li, int lj) -> Eigen::Matrix4d {
    double kc = k.at(g.i0 + li, g.j0 + lj);
    if (!(kc > 0.0)) throw ValidationError("conductivity must be positive");
    return kc * K0;
  });
}

inline SparseSym assemble_stiffness(const SubGrid& g, const ConductivityField& k) {
  return assemble_stiffness(FemSpace::natural(g), k);
}

/// Matrix of u, v -> integral of kappa u v.
inline SparseSym assemble_weighted_mass(const FemSpace& space, const ConductivityField& k) {
  detail::check_cover(space.grid, k.nx);
  const SubGrid& g = space.grid;
  const Eigen::Matrix4d M0 = q1_mass(g.h);
  return detail::assemble_cells(space, [&](int li, int lj) -> Eigen::Matrix4d {
    return k.at(g.i0 + li, g.j0 + lj) * M0;
  });
}

struct Functional {
  VectorXd coeffs;  // over the nodes of the space
  double value = 0.0;
};

namespace detail {

template <class Weight>
Functional cell_functional(const SubGrid& space, const SubGrid& patch, Weight&& w) {
  if (patch.i0 < space.i0 || patch.j0 < space.j0 || patch.i0 + patch.cx > space.i0 + space.cx ||
      patch.j0 + patch.cy > space.j0 + space.cy)
    throw ValidationError("patch lies outside the space");
  Functional f{VectorXd::Zero(space.node_count()), 0.0};
  const double q = space.h * space.h / 4.0;
  for (int gj = patch.j0; gj < patch.j0 + patch.cy; ++gj)
    for (int gi = patch.i0; gi < patch.i0 + patch.cx; ++gi) {
      double wc = w(gi, gj);
      if (wc == 0.0) continue;
      for (int n : cell_nodes(space, gi - space.i0, gj - space.j0)) f.coeffs[n] += q * wc;
      f.value += 4.0 * q * wc;
    }
  return f;
}

}  // namespace detail

/// v -> integral over patch of psi_j v.
inline Functional indicator_functional(const SubGrid& space, const ContinuumMap& map, int j,
                                       const SubGrid& patch) {
  return detail::cell_functional(space, patch, [&](int gi, int gj) {
    return map.at(gi, gj) == j ? 1.0 : 0.0;
  });
}

/// v -> integral over patch of (x_m - c) psi_j v, x_m taken at cell centers.
inline Functional moment_functional(const SubGrid& space, const ContinuumMap& map, int j,
                                    const SubGrid& patch, int m, double c) {
  return detail::cell_functional(space, patch, [&](int gi, int gj) {
    if (map.at(gi, gj) != j) return 0.0;
    return ((m == 0 ? gi : gj) + 0.5) * space.h - c;
  });
}

/// v -> integral over patch of psi_j d_n v (exact for Q1).
inline Functional gradient_functional(const SubGrid& space, const ContinuumMap& map, int j,
                                      const SubGrid& patch, int n) {
  Functional f{VectorXd::Zero(space.node_count()), 0.0};
  const double q = space.h / 2.0;
  for (int gj = patch.j0; gj < patch.j0 + patch.cy; ++gj)
    for (int gi = patch.i0; gi < patch.i0 + patch.cx; ++gi) {
      if (map.at(gi, gj) != j) continue;
      auto nd = cell_nodes(space, gi - space.i0, gj - space.j0);
      if (n == 0) {
        f.coeffs[nd[1]] += q; f.coeffs[nd[2]] += q;
        f.coeffs[nd[0]] -= q; f.coeffs[nd[3]] -= q;
      } else {
        f.coeffs[nd[3]] += q; f.coeffs[nd[2]] += q;
        f.coeffs[nd[0]] -= q; f.coeffs[nd[1]] -= q;
      }
    }
  return f;
}

/// Load for a cellwise-constant source.
inline VectorXd assemble_load(const FemSpace& space, const SourceField& f) {
  const SubGrid& g = space.grid;
  VectorXd b = VectorXd::Zero(space.free_count);
  const double q = g.h * g.h / 4.0;
  for (int lj = 0; lj < g.cy; ++lj)
    for (int li = 0; li < g.cx; ++li) {
      double fc = f.values[(g.j0 + lj) * f.nx + g.i0 + li];
      for (int n : cell_nodes(g, li, lj))
        if (space.free_index[n] >= 0) b[space.free_index[n]] += q * fc;
    }
  return b;
}

/// Load for a source given pointwise, 2x2 Gauss per cell.
inline VectorXd assemble_load(const FemSpace& space, const std::function<double(double, double)>& f) {
  const SubGrid& g = space.grid;
  VectorXd b = VectorXd::Zero(space.free_count);
  for (int lj = 0; lj < g.cy; ++lj)
    for (int li = 0; li < g.cx; ++li) {
      auto nodes = cell_nodes(g, li, lj);
      for (double eta : kGauss2)
        for (double xi : kGauss2) {
          double x = (g.i0 + li + xi) * g.h, y = (g.j0 + lj + eta) * g.h;
          double w = f(x, y) * g.h * g.h / 4.0;
          std::array<double, 4> N = {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
          for (int a = 0; a < 4; ++a)
            if (space.free_index[nodes[a]] >= 0) b[space.free_index[nodes[a]]] += w * N[a];
        }
    }
  return b;
}

/// Integral of kappa grad u . grad v over the cells of `cells` (a rectangle inside g);
/// u, v are nodal over g. Evaluated from nodal differences so nearly constant fields stay accurate.
inline double energy(const SubGrid& g, const ConductivityField& k, const VectorXd& u,
                     const VectorXd& v, const SubGrid& cells) {
  double total = 0.0;
  for (int gj = cells.j0; gj < cells.j0 + cells.cy; ++gj)
    for (int gi = cells.i0; gi < cells.i0 + cells.cx; ++gi) {
      auto nd = cell_nodes(g, gi - g.i0, gj - g.j0);
      std::array<double, 4> ue, ve;
      for (int a = 0; a < 4; ++a) {
        ue[a] = u[nd[a]];
        ve[a] = v[nd[a]];
      }
      double s = 0.0;
      for (double eta : kGauss2)
        for (double xi : kGauss2)
          s += q1_gradient(ue, g.h, xi, eta).dot(q1_gradient(ve, g.h, xi, eta));
      total += k.at(gi, gj) * s * g.h * g.h / 4.0;
    }
  return total;
}

inline double energy(const SubGrid& g, const ConductivityField& k, const VectorXd& u,
                     const VectorXd& v) {
  return energy(g, k, u, v, g);
}

/// Elimination order for the free nodes of a space.
inline std::vector<int> dissection_order(const FemSpace& space) {
  std::vector<int> full = grid_dissection(space.grid.cx, space.grid.cy);
  std::vector<int> order;
  order.reserve(space.free_count);
  for (int n : full)
    if (space.free_index[n] >= 0) order.push_back(space.free_index[n]);
  return order;
}

/// Expand a vector over free nodes to all nodes, zero on constrained ones.
inline VectorXd expand(const FemSpace& space, const VectorXd& free) {
  VectorXd u = VectorXd::Zero(space.grid.node_count());
  for (int n = 0; n < space.grid.node_count(); ++n)
    if (space.free_index[n] >= 0) u[n] = free[space.free_index[n]];
  return u;
}

/// Fine-scale reference: -div(kappa grad u) = f, u = 0 on the boundary of the unit square.
inline VectorXd solve_fine_reference(const FineGrid& fine, const ConductivityField& k,
                                     const SourceField& f, double tol = 1e-10) {
  if (k.nx != fine.nx || f.nx != fine.nx) throw ValidationError("reference: grid size mismatch");
  FemSpace space = FemSpace::dirichlet(whole(fine));
  SparseSym A = assemble_stiffness(space, k);
  VectorXd b = assemble_load(space, f);
  std::vector<int> order = dissection_order(space);
  return expand(space, solve_spd(A, b, tol, &order));
}

/// L2 error of a nodal Q1 field against an exact function, 3x3 Gauss per cell.
inline double l2_error(const SubGrid& g, const VectorXd& u,
                       const std::function<double(double, double)>& exact) {
  static const double gp[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
  static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double s = 0.0;
  for (int lj = 0; lj < g.cy; ++lj)
    for (int li = 0; li < g.cx; ++li) {
      auto nd = cell_nodes(g, li, lj);
      for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a) {
          double xi = gp[a], eta = gp[b];
          double uh = u[nd[0]] * (1 - xi) * (1 - eta) + u[nd[1]] * xi * (1 - eta) +
                      u[nd[2]] * xi * eta + u[nd[3]] * (1 - xi) * eta;
          double e = uh - exact((g.i0 + li + xi) * g.h, (g.j0 + lj + eta) * g.h);
          s += gw[a] * gw[b] * e * e * g.h * g.h;
        }
    }
  return std::sqrt(s);
}

}  // namespace mcup
