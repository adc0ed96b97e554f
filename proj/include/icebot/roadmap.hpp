#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "icebot/config.hpp"
#include "icebot/spatial_grid.hpp"

namespace icebot {

using VertexId = std::size_t;

struct Edge {
  VertexId to = 0;
  double weight = 0.0;
};

struct ViewBookmark {
  std::string label;
  VertexId vertex_id = 0;
  double saved_at = 0.0;

  friend bool operator==(const ViewBookmark&, const ViewBookmark&) = default;
};

struct RoadmapStats {
  std::size_t vertex_count = 0;
  std::size_t edge_count = 0;
  std::size_t view_count = 0;

  friend bool operator==(const RoadmapStats&, const RoadmapStats&) = default;
};

// Topological roadmap of visited motor configurations plus the library of
// saved views. Vertices and edges are append-only, so ids are stable forever
// and any copy is a valid subgraph of every later state.
class Roadmap {
 public:
  static constexpr int kFormatVersion = 1;
  // Vertices are matched by exact equality after rounding each axis to this
  // quantum (1e-6 of its unit).
  static constexpr double kQuantum = 1e-6;

  explicit Roadmap(double epsilon = 1.0);

  double epsilon() const noexcept { return epsilon_; }

  // One step of the construction loop. If q equals the previously observed
  // configuration nothing changes. Otherwise q is matched to an identical
  // vertex or inserted and joined to every vertex within epsilon. Returns the
  // matched-or-inserted id.
  VertexId observe(const Configuration& q);

  // Vertices within distance <= eps of q (inclusive), ascending ids.
  std::vector<VertexId> neighborhood(const Configuration& q, double eps) const;
  std::vector<VertexId> neighborhood(const Configuration& q) const { return neighborhood(q, epsilon_); }

  // Bookmarks the most recently observed vertex. saved_at defaults to the
  // number of observations so far, which is monotonic.
  const ViewBookmark& save_view(const std::string& label, std::optional<double> saved_at = std::nullopt);

  RoadmapStats stats() const noexcept;

  std::optional<VertexId> find_vertex(const Configuration& q) const;
  const ViewBookmark* find_view(const std::string& label) const;

  const std::vector<Configuration>& vertices() const noexcept { return vertices_; }
  const Configuration& vertex(VertexId id) const { return vertices_.at(id); }
  const std::vector<Edge>& adjacent(VertexId id) const { return adjacency_.at(id); }
  // Undirected edge list in insertion order; first < second.
  const std::vector<std::pair<VertexId, VertexId>>& edges() const noexcept { return edges_; }
  const std::vector<ViewBookmark>& views() const noexcept { return views_; }
  std::optional<VertexId> last_observed() const noexcept { return last_observed_; }
  std::size_t observation_count() const noexcept { return observation_count_; }
  // New vertices that did not get an edge back to their predecessor
  // (teleop step larger than epsilon).
  std::size_t disconnected_insertions() const noexcept { return disconnected_insertions_; }

  // Versioned JSON document; field order is fixed so save -> load -> save is
  // byte-identical.
  std::string to_json() const;
  static Roadmap from_json(const std::string& text);
  void save(const std::string& path) const;
  static Roadmap load(const std::string& path);

 private:
  using Key = std::array<std::int64_t, kAxes>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  static Key key_of(const Configuration& q);
  VertexId insert_vertex(const Configuration& q);
  void add_edge(VertexId a, VertexId b);

  double epsilon_;
  std::vector<Configuration> vertices_;
  std::vector<std::vector<Edge>> adjacency_;
  std::vector<std::pair<VertexId, VertexId>> edges_;
  std::vector<ViewBookmark> views_;
  std::unordered_map<Key, VertexId, KeyHash> index_;
  SpatialGrid grid_;
  std::optional<VertexId> last_observed_;
  std::optional<Key> last_key_;
  std::size_t observation_count_ = 0;
  std::size_t disconnected_insertions_ = 0;
};

}  // namespace icebot
