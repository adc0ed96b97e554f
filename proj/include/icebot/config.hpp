#pragma once

#include <array>
#include <cstddef>

namespace icebot {

inline constexpr std::size_t kAxes = 4;

// A point in motor space: two knob angles and bulk rotation in degrees,
// translation along the catheter axis in millimetres.
struct Configuration {
  double phi1 = 0.0;  // anterior-posterior knob
  double phi2 = 0.0;  // right-left knob
  double phi3 = 0.0;  // bulk rotation
  double d4 = 0.0;    // translation

  double& operator[](std::size_t axis);
  double operator[](std::size_t axis) const;

  std::array<double, kAxes> to_array() const { return {phi1, phi2, phi3, d4}; }
  static Configuration from_array(const std::array<double, kAxes>& v) {
    return {v[0], v[1], v[2], v[3]};
  }

  bool is_finite() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct JointLimits {
  std::array<Interval, kAxes> axes{{{-90.0, 90.0}, {-90.0, 90.0}, {-180.0, 180.0}, {0.0, 120.0}}};

  // Throws Error(Config) unless lo < hi (and both finite) on every axis.
  void validate() const;
  bool contains(const Configuration& q) const;

  friend bool operator==(const JointLimits&, const JointLimits&) = default;
};

// Euclidean norm of (a - b) over all four axes with 1 mm treated as 1 degree.
double distance(const Configuration& a, const Configuration& b);

Configuration clamp(const Configuration& q, const JointLimits& limits);

}  // namespace icebot
