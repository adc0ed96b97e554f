#include "icebot/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "icebot/error.hpp"
#include "icebot/planner.hpp"

namespace icebot {

std::vector<Configuration> random_walk_trace(std::size_t n_states, std::uint64_t seed, double epsilon,
                                             const JointLimits& limits) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> length(0.2 * epsilon, 0.9 * epsilon);

  Configuration q;
  for (std::size_t i = 0; i < kAxes; ++i) q[i] = 0.5 * (limits.axes[i].lo + limits.axes[i].hi);

  std::vector<Configuration> trace;
  trace.reserve(n_states);
  trace.push_back(q);
  while (trace.size() < n_states) {
    Configuration dir;
    for (std::size_t i = 0; i < kAxes; ++i) dir[i] = gauss(rng);
    const double norm = distance(dir, Configuration{});
    if (norm < 1e-12) continue;
    const double step = length(rng);
    Configuration next = q;
    for (std::size_t i = 0; i < kAxes; ++i) next[i] += dir[i] / norm * step;
    next = clamp(next, limits);  // projection onto the box never lengthens the step
    if (next == q) continue;
    q = next;
    trace.push_back(q);
  }
  return trace;
}

BenchmarkResult benchmark(std::size_t n_states, std::uint64_t seed, std::size_t queries, double epsilon) {
  if (n_states < 2) throw Error(ErrorCode::InvalidArgument, "benchmark needs at least 2 states");
  const auto trace = random_walk_trace(n_states, seed, epsilon);
  const std::size_t n_views = std::min<std::size_t>(10, n_states);

  std::mt19937_64 rng(seed ^ 0x5eedf00dull);
  std::vector<std::size_t> save_at(n_views);
  std::uniform_int_distribution<std::size_t> pick_step(0, n_states - 1);
  for (auto& s : save_at) s = pick_step(rng);
  std::sort(save_at.begin(), save_at.end());

  Roadmap map(epsilon);
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t next_view = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    map.observe(trace[i]);
    while (next_view < save_at.size() && save_at[next_view] == i) {
      map.save_view("view" + std::to_string(next_view), static_cast<double>(i));
      ++next_view;
    }
  }
  const double build = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::uniform_int_distribution<VertexId> pick_vertex(0, map.stats().vertex_count - 1);
  std::uniform_int_distribution<std::size_t> pick_view(0, map.views().size() - 1);
  std::vector<double> times;
  times.reserve(queries);
  for (std::size_t k = 0; k < queries; ++k) {
    const VertexId start = pick_vertex(rng);
    const auto& label = map.views()[pick_view(rng)].label;
    const auto q0 = std::chrono::steady_clock::now();
    [[maybe_unused]] const RecoveryPath path = plan(map, start, label);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - q0).count());
  }

  BenchmarkResult r;
  r.n_states = n_states;
  r.stats = map.stats();
  r.build_time = build;
  r.queries = queries;
  if (!times.empty()) {
    double sum = 0.0;
    for (double t : times) sum += t;
    r.mean_query_time = sum / static_cast<double>(times.size());
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size())));
    r.p99_query_time = sorted[std::max<std::size_t>(rank, 1) - 1];
    r.max_query_time = sorted.back();
  }
  return r;
}

}  // namespace icebot
