#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "icebot/config.hpp"
#include "icebot/roadmap.hpp"

namespace icebot {

struct RecoveryPath {
  static constexpr int kFormatVersion = 1;

  std::vector<VertexId> vertex_ids;
  std::vector<Configuration> waypoints;  // front = start vertex, back = view vertex
  double total_cost = 0.0;
  std::chrono::duration<double> search_time{0.0};

  std::string to_json() const;
  static RecoveryPath from_json(const std::string& text);
};

// Minimum-cost roadmap path from `start` to the vertex bookmarked as `view`.
// A* with distance() to the goal as heuristic; equal priorities pop the
// smaller vertex id first. Throws Error with InvalidStart, UnknownView or
// Unreachable.
RecoveryPath plan(const Roadmap& roadmap, VertexId start, const std::string& view);

// Same search between two vertices.
RecoveryPath plan_between(const Roadmap& roadmap, VertexId start, VertexId goal);

// Sum of distance() over consecutive waypoints.
double path_cost(const RecoveryPath& path);

// Vertex for an arbitrary configuration: the exact match if any, else the
// nearest vertex within epsilon (ties -> smaller id). Throws OffRoadmap.
VertexId snap_to_roadmap(const Roadmap& roadmap, const Configuration& q);

}  // namespace icebot
