#pragma once

#include <Eigen/Dense>

#include "icebot/config.hpp"

namespace icebot {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector4d = Eigen::Vector4d;
using Jacobian = Eigen::Matrix<double, 6, 4>;

// Pose of the imaging transducer, base frame at the sheath exit with +z along
// the insertion axis.
struct TipPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // mm
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
  // Image-plane normal: body x-axis of the tip frame.
  Eigen::Vector3d imaging_axis = Eigen::Vector3d::UnitX();
};

struct CatheterParams {
  double bend_length = 60.0;   // mm
  double knob_gain = 1.0;      // degrees of tip bend per degree of knob
  double shaft_offset = 0.0;   // mm from sheath exit to bending-section base at d4 = 0

  void validate() const;
};

// Single constant-curvature arc. Knob angles set orthogonal bend components
// (k*phi1 toward +x, k*phi2 toward +y); phi3 rolls the distal assembly about
// +z; d4 advances it along +z.
TipPose forward_kinematics(const Configuration& q, const CatheterParams& p = {});

// Central differences (h = 1e-4 units per axis). Rows 0..2: base-frame linear
// velocity, mm per unit. Rows 3..5: body-frame angular velocity, degrees per
// unit, so the whole twist follows the 1 mm == 1 degree convention.
Jacobian jacobian(const Configuration& q, const CatheterParams& p = {});

inline constexpr double kDefaultDamping = 0.05;

// Damped least squares: qdot = J^T (J J^T + lambda^2 I)^-1 v, evaluated in the
// equivalent (J^T J + lambda^2 I)^-1 J^T v form.
Vector4d tip_rates_to_joint_rates(const Vector6d& twist, const Configuration& q, const CatheterParams& p = {},
                                  double damping = kDefaultDamping);

}  // namespace icebot
