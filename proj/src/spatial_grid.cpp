#include "icebot/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

#include "icebot/error.hpp"

namespace icebot {

namespace {
// Slack (in cell units) on the query box so that points that distance()
// accepts at the rounding boundary are never excluded by the cell range.
constexpr double kCellSlack = 1e-9;
}  // namespace

SpatialGrid::SpatialGrid(double cell_size) : cell_size_(cell_size), inv_cell_(1.0 / cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error(ErrorCode::InvalidArgument, "grid cell size must be positive");
  }
}

std::size_t SpatialGrid::CellHash::operator()(const Cell& c) const noexcept {
  // FNV-1a style mix of the four cell coordinates.
  std::uint64_t h = 1469598103934665603ull;
  for (auto v : c) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

SpatialGrid::Cell SpatialGrid::cell_of(const Configuration& q) const {
  Cell c{};
  for (std::size_t i = 0; i < kAxes; ++i) {
    c[i] = static_cast<std::int64_t>(std::floor(q[i] * inv_cell_));
  }
  return c;
}

void SpatialGrid::insert(Id id, const Configuration& q) { cells_[cell_of(q)].push_back(id); }

std::vector<SpatialGrid::Id> SpatialGrid::query(
    const Configuration& q, double radius,
    std::span<const Configuration> coords) const {
  std::vector<Id> out;
  if (cells_.empty()) return out;

  Cell lo{};
  Cell hi{};
  for (std::size_t i = 0; i < kAxes; ++i) {
    lo[i] = static_cast<std::int64_t>(std::floor((q[i] - radius) * inv_cell_ - kCellSlack));
    hi[i] = static_cast<std::int64_t>(std::floor((q[i] + radius) * inv_cell_ + kCellSlack));
  }

  double box_cells = 1.0;
  for (std::size_t i = 0; i < kAxes; ++i) box_cells *= static_cast<double>(hi[i] - lo[i] + 1);
  if (box_cells > static_cast<double>(cells_.size())) {
    // Wide query: scanning occupied cells is cheaper than enumerating the box.
    for (const auto& [cell, ids] : cells_) {
      for (Id id : ids) {
        if (distance(coords[id], q) <= radius) out.push_back(id);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // With radius == cell size this walks the 3^4 block around q's cell.
  Cell c = lo;
  while (true) {
    if (auto it = cells_.find(c); it != cells_.end()) {
      for (Id id : it->second) {
        if (distance(coords[id], q) <= radius) out.push_back(id);
      }
    }
    std::size_t axis = 0;
    while (axis < kAxes) {
      if (++c[axis] <= hi[axis]) break;
      c[axis] = lo[axis];
      ++axis;
    }
    if (axis == kAxes) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace icebot
