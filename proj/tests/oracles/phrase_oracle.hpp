#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

// Half-open rectangle: source [sb, se), target [tb, te).
using Rect = std::array<int, 4>;

// Every rectangle that holds at least one link and no link crossing its border.
inline std::vector<Rect> consistent_rectangles(int m, int n, const std::set<std::pair<int, int>>& links,
                                               int max_len) {
  std::vector<Rect> out;
  for (int sb = 0; sb < m; ++sb)
    for (int se = sb + 1; se <= m && se - sb <= max_len; ++se)
      for (int tb = 0; tb < n; ++tb)
        for (int te = tb + 1; te <= n && te - tb <= max_len; ++te) {
          bool inside = false, crossing = false;
          for (auto [i, j] : links) {
            bool si = i >= sb && i < se, tj = j >= tb && j < te;
            if (si && tj) inside = true;
            if (si != tj) crossing = true;
          }
          if (inside && !crossing) out.push_back({sb, se, tb, te});
        }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
