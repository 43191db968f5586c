#pragma once

#include <array>
#include <vector>

#include "ials/warehouse/config.hpp"

namespace ials::warehouse {

inline constexpr int kRegionCells = 25;
inline constexpr int kItemsPerRegion = 12;
inline constexpr int kNumActions = 5;  // up, down, left, right, stay
inline constexpr int kObsWidth = kRegionCells + kItemsPerRegion;
inline constexpr int kDSetWidth = 2 * kItemsPerRegion;
inline constexpr int kNeighborHeads = 4;  // north, east, south, west
inline constexpr int kElsewhere = 3;

inline constexpr std::array<int, kNumActions> kActionDr{-1, 1, 0, 0, 0};
inline constexpr std::array<int, kNumActions> kActionDc{0, 0, -1, 1, 0};

/// Local (row, col) of the 12 item cells: top, right, bottom, left edge, three
/// each. Head h's shared cells are items 3h..3h+2.
inline constexpr std::array<std::array<int, 2>, kItemsPerRegion> kItemCells{{
    {0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}, {4, 1}, {4, 2}, {4, 3}, {1, 0}, {2, 0}, {3, 0}}};

inline constexpr int local_cell(int r, int c) { return r * 5 + c; }

/// Local item index at a local cell, -1 if the cell holds no shelf.
inline constexpr std::array<int, kRegionCells> kItemAtCell = [] {
  std::array<int, kRegionCells> a{};
  for (auto& v : a) v = -1;
  for (int i = 0; i < kItemsPerRegion; ++i) a[static_cast<std::size_t>(kItemCells[static_cast<std::size_t>(i)][0] * 5 + kItemCells[static_cast<std::size_t>(i)][1])] = i;
  return a;
}();

/// Global layout: shelf ids and per-region item tables.
struct Geometry {
  int robots = 0;     // robots per side
  int grid = 0;       // cells per side
  std::vector<int> shelf_at;             // grid*grid -> shelf id or -1
  std::vector<std::array<int, 2>> shelf_cell;  // shelf id -> (row, col)
  std::vector<std::array<int, kItemsPerRegion>> region_items;  // region -> shelf ids in local order

  explicit Geometry(const WarehouseConfig& cfg) {
    cfg.validate();
    robots = cfg.robot_grid;
    grid = cfg.grid_size();
    shelf_at.assign(static_cast<std::size_t>(grid * grid), -1);
    for (int r = 0; r < grid; ++r) {
      for (int c = 0; c < grid; ++c) {
        const bool hline = r % 4 == 0, vline = c % 4 == 0;
        if (hline != vline) {
          shelf_at[static_cast<std::size_t>(r * grid + c)] = static_cast<int>(shelf_cell.size());
          shelf_cell.push_back({r, c});
        }
      }
    }
    region_items.resize(static_cast<std::size_t>(robots * robots));
    for (int R = 0; R < robots; ++R) {
      for (int C = 0; C < robots; ++C) {
        for (int i = 0; i < kItemsPerRegion; ++i) {
          const auto& lc = kItemCells[static_cast<std::size_t>(i)];
          region_items[static_cast<std::size_t>(region(R, C))][static_cast<std::size_t>(i)] =
              shelf_at[static_cast<std::size_t>((4 * R + lc[0]) * grid + 4 * C + lc[1])];
        }
      }
    }
  }

  int region(int R, int C) const { return R * robots + C; }
  int num_regions() const { return robots * robots; }
  int num_shelves() const { return static_cast<int>(shelf_cell.size()); }

  /// Neighbor region in direction h (0 N, 1 E, 2 S, 3 W), -1 at the border.
  int neighbor(int R, int C, int h) const {
    static constexpr int dR[4] = {-1, 0, 1, 0};
    static constexpr int dC[4] = {0, 1, 0, -1};
    const int r = R + dR[h], c = C + dC[h];
    if (r < 0 || r >= robots || c < 0 || c >= robots) return -1;
    return region(r, c);
  }
};

}  // namespace ials::warehouse
