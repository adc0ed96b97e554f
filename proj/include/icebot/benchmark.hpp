#pragma once

#include <cstdint>
#include <vector>

#include "icebot/config.hpp"
#include "icebot/roadmap.hpp"

namespace icebot {

struct BenchmarkResult {
  std::size_t n_states = 0;
  RoadmapStats stats;
  double build_time = 0.0;       // s
  double mean_query_time = 0.0;  // s
  double p99_query_time = 0.0;   // s
  double max_query_time = 0.0;   // s
  std::size_t queries = 0;
};

// Random-walk teleop trace of n_states observations (steps <= epsilon),
// clamped to limits.
std::vector<Configuration> random_walk_trace(std::size_t n_states, std::uint64_t seed, double epsilon = 1.0,
                                             const JointLimits& limits = {});

// Builds a roadmap from a random-walk trace, bookmarks views along it and
// times random recovery queries. Throws InvalidArgument when n_states < 2.
BenchmarkResult benchmark(std::size_t n_states, std::uint64_t seed = 1, std::size_t queries = 100,
                          double epsilon = 1.0);

}  // namespace icebot
