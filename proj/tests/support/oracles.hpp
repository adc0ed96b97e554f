#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these share code with the library beyond the public types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "icebot/config.hpp"
#include "icebot/roadmap.hpp"

namespace oracle {

using icebot::Configuration;

inline double dist(const Configuration& a, const Configuration& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < icebot::kAxes; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Linear scan.
inline std::vector<std::size_t> brute_neighborhood(const std::vector<Configuration>& pts, const Configuration& q,
                                                   double eps) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (dist(pts[i], q) <= eps) out.push_back(i);
  }
  return out;
}

// Plain O(V^2) Dijkstra over the roadmap's edge list, weights recomputed from
// the vertex coordinates. Returns nullopt when goal is unreachable.
inline std::optional<double> dijkstra(const icebot::Roadmap& map, std::size_t start, std::size_t goal) {
  const auto& v = map.vertices();
  const std::size_t n = v.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& [a, b] : map.edges()) {
    const double w = icebot::distance(v[a], v[b]);
    adj[a].push_back({b, w});
    adj[b].push_back({a, w});
  }
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  std::vector<bool> done(n, false);
  d[start] = 0.0;
  for (std::size_t iter = 0; iter < n; ++iter) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && std::isfinite(d[i]) && (u == n || d[i] < d[u])) u = i;
    }
    if (u == n) break;
    done[u] = true;
    if (u == goal) break;
    for (const auto& [w, c] : adj[u]) d[w] = std::min(d[w], d[u] + c);
  }
  if (!std::isfinite(d[goal])) return std::nullopt;
  return d[goal];
}

// Tip position of a constant-curvature arc by integrating its unit tangent
// with the midpoint rule. theta is the total bend (rad) in the plane at
// azimuth alpha about +z; the arc starts at z0 pointing along +z.
inline Eigen::Vector3d integrate_arc(double theta, double alpha, double length, double z0, int steps = 100000) {
  const double kappa = theta / length;
  const double ds = length / steps;
  Eigen::Vector3d p(0.0, 0.0, z0);
  for (int i = 0; i < steps; ++i) {
    const double s = (i + 0.5) * ds;
    const double a = kappa * s;
    p += ds * Eigen::Vector3d(std::cos(alpha) * std::sin(a), std::sin(alpha) * std::sin(a), std::cos(a));
  }
  return p;
}

inline Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double a = w.norm();
  if (a < 1e-300) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

inline Eigen::Matrix3d euler_zyz(double a, double b, double c) {
  return (Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(c, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

// RMS residual of the best translation for a fixed rotation R (the optimal
// translation aligns the centroids).
inline double rms_for_rotation(const Eigen::Matrix3d& R, const std::vector<Eigen::Vector3d>& src,
                               const std::vector<Eigen::Vector3d>& dst) {
  Eigen::Vector3d cs = Eigen::Vector3d::Zero(), cd = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());
  double s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) s += (R * (src[i] - cs) - (dst[i] - cd)).squaredNorm();
  return std::sqrt(s / static_cast<double>(src.size()));
}

// Brute-force registration residual: ZYZ Euler grid, then pattern search on
// a local rotation vector with a shrinking step.
inline double grid_registration_rms(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst,
                                    int grid = 24) {
  const double pi = std::numbers::pi;
  Eigen::Matrix3d best = Eigen::Matrix3d::Identity();
  double best_rms = rms_for_rotation(best, src, dst);
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j <= grid / 2; ++j) {
      for (int k = 0; k < grid; ++k) {
        const Eigen::Matrix3d R = euler_zyz(2 * pi * i / grid, pi * j / (grid / 2), 2 * pi * k / grid);
        const double r = rms_for_rotation(R, src, dst);
        if (r < best_rms) {
          best_rms = r;
          best = R;
        }
      }
    }
  }
  double step = pi / grid;
  while (step > 1e-12) {
    bool improved = false;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {1.0, -1.0}) {
        Eigen::Vector3d w = Eigen::Vector3d::Zero();
        w(axis) = sign * step;
        const Eigen::Matrix3d R = best * exp_so3(w);
        const double r = rms_for_rotation(R, src, dst);
        if (r < best_rms) {
          best_rms = r;
          best = R;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best_rms;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

// Random-walk teleop trace with steps up to max_step, starting mid-range.
inline std::vector<Configuration> random_walk(std::mt19937_64& rng, std::size_t n, double max_step,
                                              const icebot::JointLimits& lim = {}) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> len(0.05 * max_step, max_step);
  Configuration q;
  for (std::size_t i = 0; i < icebot::kAxes; ++i) q[i] = 0.5 * (lim.axes[i].lo + lim.axes[i].hi);
  std::vector<Configuration> out{q};
  while (out.size() < n) {
    Configuration d{g(rng), g(rng), g(rng), g(rng)};
    const double norm = dist(d, {});
    const double s = len(rng) / norm;
    Configuration next = q;
    for (std::size_t i = 0; i < icebot::kAxes; ++i) next[i] += d[i] * s;
    q = icebot::clamp(next, lim);
    out.push_back(q);
  }
  return out;
}

}  // namespace oracle
