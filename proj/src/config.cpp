#include "icebot/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icebot/error.hpp"

namespace icebot {

double& Configuration::operator[](std::size_t axis) {
  switch (axis) {
    case 0: return phi1;
    case 1: return phi2;
    case 2: return phi3;
    case 3: return d4;
  }
  throw Error(ErrorCode::InvalidArgument, "axis index out of range");
}

double Configuration::operator[](std::size_t axis) const {
  return const_cast<Configuration&>(*this)[axis];
}

bool Configuration::is_finite() const {
  return std::isfinite(phi1) && std::isfinite(phi2) && std::isfinite(phi3) && std::isfinite(d4);
}

void JointLimits::validate() const {
  for (std::size_t i = 0; i < kAxes; ++i) {
    const auto& [lo, hi] = axes[i];
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw Error(ErrorCode::Config, "joint limits for axis " + std::to_string(i) + " need lo < hi");
    }
  }
}

bool JointLimits::contains(const Configuration& q) const {
  for (std::size_t i = 0; i < kAxes; ++i) {
    if (q[i] < axes[i].lo || q[i] > axes[i].hi) return false;
  }
  return true;
}

double distance(const Configuration& a, const Configuration& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kAxes; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

Configuration clamp(const Configuration& q, const JointLimits& limits) {
  Configuration out = q;
  for (std::size_t i = 0; i < kAxes; ++i) {
    out[i] = std::clamp(q[i], limits.axes[i].lo, limits.axes[i].hi);
  }
  return out;
}

}  // namespace icebot
