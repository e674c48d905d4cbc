#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"

namespace mcup {

/// Uniform nx-by-nx grid of square cells on the unit square.
/// Nodes and cells are numbered row-major with i running along x1.
struct FineGrid {
  int nx = 0;
  double h = 0.0;

  int node_count() const { return (nx + 1) * (nx + 1); }
  int cell_count() const { return nx * nx; }
  int node(int i, int j) const { return j * (nx + 1) + i; }
  int cell(int i, int j) const { return j * nx + i; }
  Eigen::Vector2d cell_center(int i, int j) const {
    return {(i + 0.5) * h, (j + 0.5) * h};
  }
  Eigen::Vector2d node_coord(int i, int j) const { return {i * h, j * h}; }
};

inline FineGrid build_fine_grid(int nx) {
  if (nx < 2) throw ValidationError("fine grid needs nx >= 2, got " + std::to_string(nx));
  return FineGrid{nx, 1.0 / nx};
}

/// Rectangle of fine cells [i0, i0+cx) x [j0, j0+cy) with its own local node numbering.
struct SubGrid {
  int i0 = 0, j0 = 0;
  int cx = 0, cy = 0;
  double h = 0.0;

  int nodes_x() const { return cx + 1; }
  int nodes_y() const { return cy + 1; }
  int node_count() const { return (cx + 1) * (cy + 1); }
  int cell_count() const { return cx * cy; }
  int node(int li, int lj) const { return lj * (cx + 1) + li; }
  double area() const { return cx * cy * h * h; }
  bool contains_cell(int gi, int gj) const {
    return gi >= i0 && gi < i0 + cx && gj >= j0 && gj < j0 + cy;
  }
};

inline SubGrid whole(const FineGrid& g) { return SubGrid{0, 0, g.nx, g.nx, g.h}; }

struct CoarseGrid {
  FineGrid fine;
  int M = 0;
  double H = 0.0;
  int s = 0;  // fine cells per coarse side

  int cell_count() const { return M * M; }
  int node_count() const { return (M + 1) * (M + 1); }
  int cell(int a, int b) const { return b * M + a; }
  int node(int a, int b) const { return b * (M + 1) + a; }
  int cell_a(int k) const { return k % M; }
  int cell_b(int k) const { return k / M; }

  SubGrid patch(int k) const {
    return SubGrid{cell_a(k) * s, cell_b(k) * s, s, s, fine.h};
  }
  int owner(int fine_cell) const {
    int i = fine_cell % fine.nx, j = fine_cell / fine.nx;
    return cell(i / s, j / s);
  }
  std::vector<int> fine_cells(int k) const {
    std::vector<int> out;
    out.reserve(s * s);
    int a = cell_a(k), b = cell_b(k);
    for (int j = b * s; j < (b + 1) * s; ++j)
      for (int i = a * s; i < (a + 1) * s; ++i) out.push_back(fine.cell(i, j));
    return out;
  }
};

inline CoarseGrid build_coarse_grid(const FineGrid& fine, int M) {
  if (M < 1) throw ValidationError("coarse grid needs M >= 1, got " + std::to_string(M));
  if (fine.nx % M != 0)
    throw ValidationError("fine nx=" + std::to_string(fine.nx) +
                          " is not divisible by coarse M=" + std::to_string(M));
  return CoarseGrid{fine, M, 1.0 / M, fine.nx / M};
}

/// Target coarse cell extended by l layers of coarse cells, clipped to the domain.
struct OversampleRegion {
  int target = 0;
  int layers = 0;
  int a0 = 0, a1 = 0, b0 = 0, b1 = 0;  // half-open coarse index ranges
  int s = 0;
  std::vector<int> patches;  // coarse cells, row-major over the rectangle
  int p0 = 0;
  SubGrid sub;

  int patches_x() const { return a1 - a0; }
  int patches_y() const { return b1 - b0; }
  int patch_count() const { return static_cast<int>(patches.size()); }
  /// Local patch index of a local fine cell.
  int patch_of(int li, int lj) const { return (lj / s) * patches_x() + li / s; }
  SubGrid patch_sub(int p) const {
    int pa = p % patches_x(), pb = p / patches_x();
    return SubGrid{sub.i0 + pa * s, sub.j0 + pb * s, s, s, sub.h};
  }
  /// Local cell offset of the target patch inside the region.
  int target_li() const { return (p0 % patches_x()) * s; }
  int target_lj() const { return (p0 / patches_x()) * s; }
};

inline OversampleRegion oversample(const CoarseGrid& cg, int omega, int l) {
  if (omega < 0 || omega >= cg.cell_count())
    throw ValidationError("coarse cell index " + std::to_string(omega) + " out of range");
  if (l < 0) throw ValidationError("layer count must be nonnegative");
  OversampleRegion r;
  r.target = omega;
  r.layers = l;
  r.s = cg.s;
  int a = cg.cell_a(omega), b = cg.cell_b(omega);
  r.a0 = std::max(0, a - l);
  r.a1 = std::min(cg.M, a + l + 1);
  r.b0 = std::max(0, b - l);
  r.b1 = std::min(cg.M, b + l + 1);
  for (int bb = r.b0; bb < r.b1; ++bb)
    for (int aa = r.a0; aa < r.a1; ++aa) {
      if (aa == a && bb == b) r.p0 = static_cast<int>(r.patches.size());
      r.patches.push_back(cg.cell(aa, bb));
    }
  r.sub = SubGrid{r.a0 * cg.s, r.b0 * cg.s, (r.a1 - r.a0) * cg.s, (r.b1 - r.b0) * cg.s,
                  cg.fine.h};
  return r;
}

inline int default_layers(double H) {
  if (!(H > 0.0 && H < 1.0)) throw ValidationError("default_layers needs 0 < H < 1");
  return static_cast<int>(std::ceil(-2.0 * std::log(H) - 1e-12));
}

}  // namespace mcup
