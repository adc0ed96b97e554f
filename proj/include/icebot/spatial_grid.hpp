#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "icebot/config.hpp"

namespace icebot {

// Uniform hash grid over the 4-D configuration space. Stores ids only; the
// caller owns the coordinates and supplies them to range queries.
class SpatialGrid {
 public:
  using Id = std::size_t;
  using Cell = std::array<std::int64_t, kAxes>;

  explicit SpatialGrid(double cell_size);

  double cell_size() const noexcept { return cell_size_; }

  void insert(Id id, const Configuration& q);

  // Ids of every stored point whose distance() to q is <= radius, ascending.
  // `coords[id]` is the configuration stored under id.
  std::vector<Id> query(const Configuration& q, double radius,
                        std::span<const Configuration> coords) const;

  std::size_t cell_count() const noexcept { return cells_.size(); }

 private:
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept;
  };

  Cell cell_of(const Configuration& q) const;

  double cell_size_;
  double inv_cell_;
  std::unordered_map<Cell, std::vector<Id>, CellHash> cells_;
};

}  // namespace icebot
