#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace icebot {

// Named fiducials in one image/space frame (mm).
struct LabeledPointSet {
  static constexpr int kFormatVersion = 1;

  std::string frame_name;
  std::map<std::string, Eigen::Vector3d> points;

  std::string to_json() const;
  static LabeledPointSet from_json(const std::string& text);
  static LabeledPointSet load(const std::string& path);
};

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Eigen::Vector3d apply_direction(const Eigen::Vector3d& d) const { return rotation * d; }
};

struct Registration {
  RigidTransform transform;
  double fre = 0.0;  // RMS residual after alignment, mm
  std::vector<std::string> matched;
};

double tip_position_error(const Eigen::Vector3d& p, const Eigen::Vector3d& p_ref);

// Angle between two direction vectors from the normalised dot product, in
// degrees within [0, 180]. Throws on a zero vector.
double orientation_error(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

// Geodesic angle of Ra^T Rb in degrees.
double rotation_angle_between(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb);

// Least-squares rigid alignment of src onto dst over the points they share by
// name, equally weighted, reflection excluded.
Registration rigid_register(const LabeledPointSet& src, const LabeledPointSet& dst);

// Same on already-paired points.
Registration rigid_register(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst);

struct ErrorSample {
  std::string target;
  double position_error = 0.0;                // mm
  std::optional<double> orientation_error;    // degrees; not every sample has one
};

// Sample list document: {format_version, samples: [{target, position_error,
// orientation_error?}]}.
std::string error_samples_to_json(const std::vector<ErrorSample>& samples);
std::vector<ErrorSample> error_samples_from_json(const std::string& text);
std::vector<ErrorSample> load_error_samples(const std::string& path);

struct SummaryStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) estimator, 0 when n == 1
  std::size_t count = 0;
};

struct TargetRow {
  std::string target;
  SummaryStat position;
  SummaryStat orientation;
};

struct RecoveryReport {
  std::vector<TargetRow> rows;  // first-appearance order of targets
  SummaryStat overall_position;
  SummaryStat overall_orientation;

  std::string to_text() const;
  std::string to_json() const;
};

SummaryStat summarize(const std::vector<double>& values);

// Throws EmptyGroup when samples is empty or a target has no entries.
RecoveryReport build_report(const std::vector<ErrorSample>& samples);

struct ReferenceRow {
  const char* target;
  double position_mean, position_std;
  double orientation_mean, orientation_std;
};

// In vivo per-valve results the simulator is compared against (mm, degrees).
inline constexpr ReferenceRow kInVivoReference[] = {
    {"Aortic Valve", 2.19, 0.91, 3.08, 2.49},
    {"Mitral Valve", 1.71, 0.74, 4.87, 2.09},
    {"Tricuspid Valve", 2.38, 0.96, 3.85, 1.70},
};

}  // namespace icebot
