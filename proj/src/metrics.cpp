#include "icebot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "icebot/error.hpp"
#include "json.hpp"

namespace icebot {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kCollinearTol = 1e-9;

bool spans_plane(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix3Xd centered(3, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) centered.col(static_cast<Eigen::Index>(i)) = pts[i] - c;
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3Xd>(centered).singularValues();
  return sv(0) > 0.0 && sv(1) > kCollinearTol * sv(0);
}

std::string format_stat(const SummaryStat& s, int precision) {
  if (s.count == 0) return "-";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f +/- %.*f (n=%zu%s)", precision, s.mean, precision, s.stddev, s.count,
                s.count == 1 ? ", single sample" : "");
  return buf;
}

nlohmann::ordered_json stat_json(const SummaryStat& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["std"] = s.stddev;
  j["n"] = s.count;
  return j;
}

}  // namespace

double tip_position_error(const Eigen::Vector3d& p, const Eigen::Vector3d& p_ref) { return (p - p_ref).norm(); }

double orientation_error(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorCode::InvalidArgument, "orientation_error: zero vector");
  // Same angle as acos(a.b / |a||b|), but keeps full precision near 0 and 180
  // degrees where acos of a rounded cosine loses half the digits.
  const double cosine = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  const double sine = a.cross(b).norm() / (na * nb);
  return std::atan2(sine, cosine) * kRadToDeg;
}

double rotation_angle_between(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb) {
  return Eigen::AngleAxisd(Ra.transpose() * Rb).angle() * kRadToDeg;
}

Registration rigid_register(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst) {
  if (src.size() != dst.size()) throw Error(ErrorCode::InvalidArgument, "rigid_register: size mismatch");
  if (src.size() < 3) throw Error(ErrorCode::TooFewPoints, "rigid_register: need at least 3 correspondences");
  if (!spans_plane(src) || !spans_plane(dst)) {
    throw Error(ErrorCode::DegenerateGeometry, "rigid_register: collinear fiducials");
  }

  const auto n = static_cast<double>(src.size());
  Eigen::Vector3d cs = Eigen::Vector3d::Zero();
  Eigen::Vector3d cd = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= n;
  cd /= n;

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0);

  Registration reg;
  reg.transform.rotation = V * d.asDiagonal() * U.transpose();
  reg.transform.translation = cd - reg.transform.rotation * cs;

  double sq = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) sq += (reg.transform.apply(src[i]) - dst[i]).squaredNorm();
  reg.fre = std::sqrt(sq / n);
  return reg;
}

Registration rigid_register(const LabeledPointSet& src, const LabeledPointSet& dst) {
  std::vector<Eigen::Vector3d> a;
  std::vector<Eigen::Vector3d> b;
  std::vector<std::string> names;
  for (const auto& [name, p] : src.points) {
    if (auto it = dst.points.find(name); it != dst.points.end()) {
      a.push_back(p);
      b.push_back(it->second);
      names.push_back(name);
    }
  }
  Registration reg = rigid_register(a, b);
  reg.matched = std::move(names);
  return reg;
}

SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

RecoveryReport build_report(const std::vector<ErrorSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyGroup, "build_report: no samples");
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<double> all_pos;
  std::vector<double> all_ori;
  for (const auto& s : samples) {
    if (s.target.empty()) throw Error(ErrorCode::EmptyGroup, "build_report: sample without target");
    auto [it, inserted] = groups.try_emplace(s.target);
    if (inserted) order.push_back(s.target);
    it->second.first.push_back(s.position_error);
    all_pos.push_back(s.position_error);
    if (s.orientation_error) {
      it->second.second.push_back(*s.orientation_error);
      all_ori.push_back(*s.orientation_error);
    }
  }
  RecoveryReport report;
  for (const auto& target : order) {
    const auto& [pos, ori] = groups.at(target);
    report.rows.push_back({target, summarize(pos), summarize(ori)});
  }
  report.overall_position = summarize(all_pos);
  report.overall_orientation = summarize(all_ori);
  return report;
}

std::string RecoveryReport::to_text() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s | %-36s | %-36s\n", "", "Catheter tip position error [mm]",
                "Imager orientation error [deg]");
  out << line;
  out << std::string(96, '-') << '\n';
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-18s | %-36s | %-36s\n", r.target.c_str(), format_stat(r.position, 2).c_str(),
                  format_stat(r.orientation, 2).c_str());
    out << line;
  }
  out << std::string(96, '-') << '\n';
  std::snprintf(line, sizeof line, "%-18s | %-36s | %-36s\n", "All targets", format_stat(overall_position, 2).c_str(),
                format_stat(overall_orientation, 2).c_str());
  out << line;
  out << "\nIn vivo reference:\n";
  for (const auto& ref : kInVivoReference) {
    char pos[48];
    char ori[48];
    std::snprintf(pos, sizeof pos, "%.2f +/- %.2f", ref.position_mean, ref.position_std);
    std::snprintf(ori, sizeof ori, "%.2f +/- %.2f", ref.orientation_mean, ref.orientation_std);
    std::snprintf(line, sizeof line, "%-18s | %-36s | %-36s\n", ref.target, pos, ori);
    out << line;
  }
  return out.str();
}

std::string RecoveryReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  auto jrows = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["target"] = r.target;
    j["position_error_mm"] = stat_json(r.position);
    j["orientation_error_deg"] = stat_json(r.orientation);
    jrows.push_back(std::move(j));
  }
  doc["rows"] = std::move(jrows);
  doc["overall"] = {{"position_error_mm", stat_json(overall_position)},
                    {"orientation_error_deg", stat_json(overall_orientation)}};
  auto jref = nlohmann::ordered_json::array();
  for (const auto& ref : kInVivoReference) {
    nlohmann::ordered_json j;
    j["target"] = ref.target;
    j["position_error_mm"] = {{"mean", ref.position_mean}, {"std", ref.position_std}};
    j["orientation_error_deg"] = {{"mean", ref.orientation_mean}, {"std", ref.orientation_std}};
    jref.push_back(std::move(j));
  }
  doc["in_vivo_reference"] = std::move(jref);
  return doc.dump(2) + "\n";
}

std::string LabeledPointSet::to_json() const {
  nlohmann::ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["frame_name"] = frame_name;
  nlohmann::ordered_json pts = nlohmann::ordered_json::object();
  for (const auto& [name, p] : points) pts[name] = {p.x(), p.y(), p.z()};
  doc["points"] = std::move(pts);
  return doc.dump(2) + "\n";
}

LabeledPointSet LabeledPointSet::from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "point set: unsupported format_version");
    }
    LabeledPointSet set;
    set.frame_name = doc.at("frame_name").get<std::string>();
    for (const auto& [name, jp] : doc.at("points").items()) {
      const auto v = jp.get<std::array<double, 3>>();
      set.points[name] = Eigen::Vector3d(v[0], v[1], v[2]);
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("point set: bad document: ") + e.what());
  }
}

LabeledPointSet LabeledPointSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string error_samples_to_json(const std::vector<ErrorSample>& samples) {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["target"] = s.target;
    j["position_error"] = s.position_error;
    if (s.orientation_error) j["orientation_error"] = *s.orientation_error;
    arr.push_back(std::move(j));
  }
  doc["samples"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::vector<ErrorSample> error_samples_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format_version").get<int>() != 1) {
      throw Error(ErrorCode::VersionMismatch, "samples: unsupported format_version");
    }
    std::vector<ErrorSample> out;
    for (const auto& j : doc.at("samples")) {
      ErrorSample s{j.at("target").get<std::string>(), j.at("position_error").get<double>(), std::nullopt};
      if (j.contains("orientation_error") && !j["orientation_error"].is_null()) {
        s.orientation_error = j["orientation_error"].get<double>();
      }
      out.push_back(std::move(s));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("samples: bad document: ") + e.what());
  }
}

std::vector<ErrorSample> load_error_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return error_samples_from_json(ss.str());
}

}  // namespace icebot
