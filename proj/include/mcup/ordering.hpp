#pragma once

#include <functional>
#include <vector>

namespace mcup {

namespace detail {

struct Dissector {
  int nodes_x;
  std::vector<int>* out;

  int node(int i, int j) const { return j * nodes_x + i; }

  void line_x(int m, int j0, int j1) {
    for (int j = j0; j <= j1; ++j) out->push_back(node(m, j));
  }
  void line_y(int m, int i0, int i1) {
    for (int i = i0; i <= i1; ++i) out->push_back(node(i, m));
  }

  void fine(int i0, int i1, int j0, int j1) {
    if (i0 > i1 || j0 > j1) return;
    int w = i1 - i0 + 1, hh = j1 - j0 + 1;
    if (w * hh <= 16) {
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) out->push_back(node(i, j));
      return;
    }
    if (w >= hh) {
      int m = (i0 + i1) / 2;
      fine(i0, m - 1, j0, j1);
      fine(m + 1, i1, j0, j1);
      line_x(m, j0, j1);
    } else {
      int m = (j0 + j1) / 2;
      fine(i0, i1, j0, m - 1);
      fine(i0, i1, m + 1, j1);
      line_y(m, i0, i1);
    }
  }

  // A lone patch owns the whole grid, so its interior block would be singular
  // for a Neumann operator; its extras go in front of the top separator instead.
  void lone(int i0, int i1, int j0, int j1, const std::vector<int>& extras) {
    int w = i1 - i0 + 1, hh = j1 - j0 + 1;
    if (w < 3 && hh < 3) {
      fine(i0, i1, j0, j1);
      out->insert(out->end(), extras.begin(), extras.end());
      return;
    }
    if (w >= hh) {
      int m = (i0 + i1) / 2;
      fine(i0, m - 1, j0, j1);
      fine(m + 1, i1, j0, j1);
      out->insert(out->end(), extras.begin(), extras.end());
      line_x(m, j0, j1);
    } else {
      int m = (j0 + j1) / 2;
      fine(i0, i1, j0, m - 1);
      fine(i0, i1, m + 1, j1);
      out->insert(out->end(), extras.begin(), extras.end());
      line_y(m, i0, i1);
    }
  }
};

}  // namespace detail

/// Nested-dissection elimination order for the nodes of a cx-by-cy cell grid
/// (node index lj*(cx+1)+li). If block > 0 the grid is tiled by block-sized
/// patches, patch p = pb*(cx/block)+pa; separators follow patch edges and
/// extras[p] is placed right after the interior of patch p.
inline std::vector<int> grid_dissection(int cx, int cy, int block = 0,
                                        const std::vector<std::vector<int>>& extras = {}) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(cx + 1) * (cy + 1));
  detail::Dissector d{cx + 1, &order};
  if (block <= 0) {
    d.fine(0, cx, 0, cy);
    for (const auto& e : extras) order.insert(order.end(), e.begin(), e.end());
    return order;
  }
  int px = cx / block, py = cy / block;
  static const std::vector<int> none;
  auto extra = [&](int p) -> const std::vector<int>& {
    return p < static_cast<int>(extras.size()) ? extras[p] : none;
  };
  if (px * py == 1) {
    d.lone(0, cx, 0, cy, extra(0));
    return order;
  }
  std::function<void(int, int, int, int, int, int, int, int)> rec =
      [&](int a0, int a1, int b0, int b1, int i0, int i1, int j0, int j1) {
        if (a1 - a0 == 1 && b1 - b0 == 1) {
          d.fine(i0, i1, j0, j1);
          const auto& e = extra(b0 * px + a0);
          order.insert(order.end(), e.begin(), e.end());
          return;
        }
        if (a1 - a0 >= b1 - b0) {
          int am = (a0 + a1) / 2, m = am * block;
          rec(a0, am, b0, b1, i0, m - 1, j0, j1);
          rec(am, a1, b0, b1, m + 1, i1, j0, j1);
          d.line_x(m, j0, j1);
        } else {
          int bm = (b0 + b1) / 2, m = bm * block;
          rec(a0, a1, b0, bm, i0, i1, j0, m - 1);
          rec(a0, a1, bm, b1, i0, i1, m + 1, j1);
          d.line_y(m, i0, i1);
        }
      };
  rec(0, px, 0, py, 0, cx, 0, cy);
  return order;
}

}  // namespace mcup
