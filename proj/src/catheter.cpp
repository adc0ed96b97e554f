#include "icebot/catheter.hpp"

#include <cmath>
#include <numbers>

#include "icebot/error.hpp"

namespace icebot {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kFdStep = 1e-4;
constexpr double kSeriesBelow = 1e-4;

// sin(t)/t and (1 - cos t)/t^2, exact through t = 0.
double sinc(double t) {
  if (t < kSeriesBelow) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

double cosc(double t) {
  if (t < kSeriesBelow) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  return (1.0 - std::cos(t)) / (t * t);
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

}  // namespace

void CatheterParams::validate() const {
  if (!(bend_length > 0.0) || !std::isfinite(bend_length)) {
    throw Error(ErrorCode::Config, "catheter bend_length must be positive");
  }
  if (!(knob_gain > 0.0) || !std::isfinite(knob_gain)) {
    throw Error(ErrorCode::Config, "catheter knob_gain must be positive");
  }
  if (!std::isfinite(shaft_offset)) throw Error(ErrorCode::Config, "catheter shaft_offset must be finite");
}

TipPose forward_kinematics(const Configuration& q, const CatheterParams& p) {
  const double bend_ap = p.knob_gain * q.phi1 * kDegToRad;
  const double bend_rl = p.knob_gain * q.phi2 * kDegToRad;
  const double theta = std::hypot(bend_ap, bend_rl);
  const double L = p.bend_length;

  // Arc end point and end rotation written without the bending-plane azimuth,
  // so both stay smooth through the straight configuration.
  const double a = sinc(theta);
  const double b = cosc(theta);
  const Eigen::Vector3d local(L * b * bend_ap, L * b * bend_rl, p.shaft_offset + q.d4 + L * a);
  const Eigen::Matrix3d w = skew(Eigen::Vector3d(-bend_rl, bend_ap, 0.0));
  const Eigen::Matrix3d bend = Eigen::Matrix3d::Identity() + a * w + b * w * w;

  const Eigen::Matrix3d roll = Eigen::AngleAxisd(q.phi3 * kDegToRad, Eigen::Vector3d::UnitZ()).toRotationMatrix();

  TipPose pose;
  pose.position = roll * local;
  pose.orientation = roll * bend;
  pose.imaging_axis = pose.orientation.col(0);
  return pose;
}

Jacobian jacobian(const Configuration& q, const CatheterParams& p) {
  const Eigen::Matrix3d R = forward_kinematics(q, p).orientation;
  Jacobian J;
  for (std::size_t j = 0; j < kAxes; ++j) {
    Configuration plus = q;
    Configuration minus = q;
    plus[j] += kFdStep;
    minus[j] -= kFdStep;
    const TipPose fp = forward_kinematics(plus, p);
    const TipPose fm = forward_kinematics(minus, p);
    const auto col = static_cast<Eigen::Index>(j);
    J.block<3, 1>(0, col) = (fp.position - fm.position) / (2.0 * kFdStep);
    const Eigen::Matrix3d W = R.transpose() * (fp.orientation - fm.orientation) / (2.0 * kFdStep);
    const Eigen::Matrix3d S = 0.5 * (W - W.transpose());
    J.block<3, 1>(3, col) = Eigen::Vector3d(S(2, 1), S(0, 2), S(1, 0)) * kRadToDeg;
  }
  return J;
}

Vector4d tip_rates_to_joint_rates(const Vector6d& twist, const Configuration& q, const CatheterParams& p,
                                  double damping) {
  const Jacobian J = jacobian(q, p);
  const Eigen::Matrix4d A = J.transpose() * J + damping * damping * Eigen::Matrix4d::Identity();
  return A.ldlt().solve(J.transpose() * twist);
}

}  // namespace icebot
