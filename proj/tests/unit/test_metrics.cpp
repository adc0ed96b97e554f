#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "icebot/catheter.hpp"
#include "icebot/error.hpp"
#include "icebot/metrics.hpp"
#include "oracles.hpp"

using namespace icebot;

namespace {

constexpr double d2r = std::numbers::pi / 180.0;

std::vector<Eigen::Vector3d> random_points(std::mt19937_64& rng, int n, double spread = 50.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace

TEST_CASE("tip position error") {
  CHECK(tip_position_error({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(tip_position_error({0, 0, 0}, {3, 4, 0}) == 5.0);
}

TEST_CASE("orientation error examples") {
  CHECK(orientation_error({1, 0, 0}, {1, 0, 0}) == 0.0);
  CHECK(orientation_error({1, 0, 0}, {0, 1, 0}) == doctest::Approx(90.0).epsilon(1e-14));
  CHECK(orientation_error({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(180.0).epsilon(1e-14));
  // nearly parallel vectors whose cosine rounds above 1
  CHECK(orientation_error({1, 1e-9, 0}, {1, 1e-9, 0}) == 0.0);
  CHECK_THROWS_AS(orientation_error({0, 0, 0}, {1, 0, 0}), Error);
}

TEST_CASE("orientation error reproduces constructed angles") {
  std::mt19937_64 rng(51);
  for (double theta : {0.0, 30.0, 90.0, 179.0, 0.5, 135.0}) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d a = oracle::random_unit(rng);
      const Eigen::Vector3d axis = a.cross(oracle::random_unit(rng)).normalized();
      const Eigen::Vector3d b = Eigen::AngleAxisd(theta * d2r, axis) * a;
      REQUIRE(std::abs(orientation_error(a, b) - theta) < 1e-9);
      // symmetric and scale invariant
      REQUIRE(std::abs(orientation_error(b, a) - theta) < 1e-9);
      REQUIRE(std::abs(orientation_error(3.5 * a, 0.01 * b) - theta) < 1e-9);
    }
  }
}

TEST_CASE("rotation angle between frames") {
  std::mt19937_64 rng(52);
  for (double theta : {0.0, 0.5, 30.0, 179.0}) {
    const Eigen::Matrix3d R = oracle::random_rotation(rng);
    const Eigen::Matrix3d S = R * Eigen::AngleAxisd(theta * d2r, oracle::random_unit(rng)).toRotationMatrix();
    CHECK(rotation_angle_between(R, S) == doctest::Approx(theta).epsilon(1e-9));
  }
}

TEST_CASE("registration: identity") {
  std::mt19937_64 rng(53);
  const auto pts = random_points(rng, 6);
  const auto r = rigid_register(pts, pts);
  CHECK((r.transform.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(r.transform.translation.norm() < 1e-12);
  CHECK(r.fre < 1e-12);
}

TEST_CASE("registration: noiseless rigid transforms are recovered") {
  std::mt19937_64 rng(54);
  std::uniform_int_distribution<int> count(3, 12);
  std::uniform_real_distribution<double> t(-200.0, 200.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto src = random_points(rng, count(rng));
    const Eigen::Matrix3d R = oracle::random_rotation(rng);
    const Eigen::Vector3d T(t(rng), t(rng), t(rng));
    std::vector<Eigen::Vector3d> dst;
    for (const auto& p : src) dst.push_back(R * p + T);
    const auto reg = rigid_register(src, dst);
    REQUIRE(reg.fre < 1e-9);
    REQUIRE((reg.transform.rotation - R).norm() < 1e-9);
    REQUIRE((reg.transform.translation - T).norm() < 1e-8);
    REQUIRE(reg.transform.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("registration: reflections are never returned") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> tiny(0.0, 1e-3);
  for (int trial = 0; trial < 2000; ++trial) {
    auto src = random_points(rng, 5);
    if (trial % 2 == 0) {
      for (auto& p : src) p.z() = tiny(rng);  // near-planar
    }
    std::vector<Eigen::Vector3d> dst;
    // mirror image: the best proper rotation still has det +1
    for (const auto& p : src) dst.emplace_back(p.x(), p.y(), -p.z());
    const auto reg = rigid_register(src, dst);
    REQUIRE(reg.transform.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE((reg.transform.rotation.transpose() * reg.transform.rotation - Eigen::Matrix3d::Identity()).norm() <
            1e-9);
  }
}

TEST_CASE("registration: noisy FRE matches the grid oracle") {
  std::mt19937_64 rng(56);
  std::normal_distribution<double> noise(0.0, 1.5);
  for (int trial = 0; trial < 25; ++trial) {
    const auto src = random_points(rng, 8);
    const Eigen::Matrix3d R = oracle::random_rotation(rng);
    std::vector<Eigen::Vector3d> dst;
    for (const auto& p : src) dst.push_back(R * p + Eigen::Vector3d(10, -4, 7) + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)));
    const auto reg = rigid_register(src, dst);
    const double expect = oracle::grid_registration_rms(src, dst);
    CHECK(reg.fre == doctest::Approx(expect).epsilon(0.01));
    CHECK(reg.fre <= expect + 1e-9);
  }
}

TEST_CASE("registration: FRE is invariant under a global rigid motion") {
  std::mt19937_64 rng(57);
  std::normal_distribution<double> noise(0.0, 2.0);
  const auto src = random_points(rng, 7);
  std::vector<Eigen::Vector3d> dst;
  for (const auto& p : src) dst.push_back(p + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)));
  const double fre = rigid_register(src, dst).fre;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix3d G = oracle::random_rotation(rng);
    const Eigen::Vector3d t(noise(rng) * 30, noise(rng) * 30, noise(rng) * 30);
    std::vector<Eigen::Vector3d> a, b;
    for (std::size_t k = 0; k < src.size(); ++k) {
      a.push_back(G * src[k] + t);
      b.push_back(G * dst[k] + t);
    }
    CHECK(rigid_register(a, b).fre == doctest::Approx(fre).epsilon(1e-9));
  }
}

TEST_CASE("registration: error cases") {
  auto code_of = [](const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b) {
    try {
      rigid_register(a, b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  const std::vector<Eigen::Vector3d> two{{0, 0, 0}, {1, 0, 0}};
  CHECK(code_of(two, two) == ErrorCode::TooFewPoints);
  const std::vector<Eigen::Vector3d> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {5, 5, 5}};
  CHECK(code_of(line, line) == ErrorCode::DegenerateGeometry);
  const std::vector<Eigen::Vector3d> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const std::vector<Eigen::Vector3d> line3{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  CHECK(code_of(tri, line3) == ErrorCode::DegenerateGeometry);
}

TEST_CASE("registration by label uses only shared names") {
  LabeledPointSet us{"ultrasound", {}};
  LabeledPointSet ct{"ct", {}};
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const std::map<std::string, Eigen::Vector3d> pts{
      {"tip", {0, 0, 0}}, {"Aortic Valve", {30, 5, -2}}, {"Mitral Valve", {12, 40, 8}}, {"Tricuspid Valve", {-20, 10, 15}}};
  for (const auto& [name, p] : pts) {
    us.points[name] = p;
    ct.points[name] = R * p + Eigen::Vector3d(1, 2, 3);
  }
  us.points["only_here"] = {100, 100, 100};
  const auto reg = rigid_register(us, ct);
  CHECK(reg.matched.size() == 4);
  CHECK(reg.fre < 1e-9);
}

TEST_CASE("imaging axis pipeline is exact without noise") {
  // Ultrasound-frame tip pose registered into the CT frame, then compared
  // with the CT-frame imaging axis through the angle formula.
  std::mt19937_64 rng(58);
  for (int i = 0; i < 100; ++i) {
    const TipPose tip = forward_kinematics({20.0 * i / 100, -10, 15, 30});
    const Eigen::Matrix3d R = oracle::random_rotation(rng);
    const Eigen::Vector3d t(5, 6, 7);
    const auto src = random_points(rng, 5);
    std::vector<Eigen::Vector3d> dst;
    for (const auto& p : src) dst.push_back(R * p + t);
    const auto reg = rigid_register(src, dst);
    const Eigen::Vector3d axis_ct = R * tip.imaging_axis;
    CHECK(orientation_error(reg.transform.apply_direction(tip.imaging_axis), axis_ct) < 1e-5);
    CHECK(tip_position_error(reg.transform.apply(tip.position), R * tip.position + t) < 1e-9);
  }
}

TEST_CASE("summarize uses the sample estimator") {
  const auto s = summarize({2, 2, 2});
  CHECK(s.mean == 2.0);
  CHECK(s.stddev == 0.0);
  CHECK(s.count == 3);
  const auto t = summarize({1, 2, 3, 4});
  CHECK(t.mean == 2.5);
  CHECK(t.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const auto one = summarize({7});
  CHECK(one.mean == 7.0);
  CHECK(one.stddev == 0.0);
}

TEST_CASE("build_report") {
  const std::vector<ErrorSample> samples{
      {"Tricuspid Valve", 1.0, 2.0}, {"Aortic Valve", 2.0, std::nullopt}, {"Aortic Valve", 4.0, 3.0},
      {"Mitral Valve", 3.0, 1.0}};
  const auto r = build_report(samples);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].target == "Tricuspid Valve");
  CHECK(r.rows[1].target == "Aortic Valve");
  CHECK(r.rows[1].position.mean == 3.0);
  CHECK(r.rows[1].position.count == 2);
  CHECK(r.rows[1].orientation.count == 1);
  CHECK(r.overall_position.count == 4);
  CHECK(r.overall_orientation.count == 3);

  const std::string text = r.to_text();
  CHECK(text.find("single sample") != std::string::npos);
  CHECK(text.find("2.19 +/- 0.91") != std::string::npos);
  CHECK(text.find("4.87 +/- 2.09") != std::string::npos);
  const std::string json = r.to_json();
  CHECK(json.find("\"in_vivo_reference\"") != std::string::npos);

  CHECK_THROWS_AS(build_report({}), Error);
}

TEST_CASE("point set file round trip") {
  LabeledPointSet s{"ct", {{"Aortic Valve", {1.5, 2, 3}}, {"tip", {0, 0, -4}}}};
  const auto back = LabeledPointSet::from_json(s.to_json());
  CHECK(back.frame_name == "ct");
  CHECK(back.points == s.points);
  const auto path = std::filesystem::temp_directory_path() / "icebot_points.json";
  std::ofstream(path) << s.to_json();
  CHECK(LabeledPointSet::load(path.string()).points == s.points);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(LabeledPointSet::from_json(R"({"format_version":9,"frame_name":"x","points":{}})"), Error);
}

TEST_CASE("error sample document round trip") {
  const std::vector<ErrorSample> samples{{"Aortic Valve", 2.5, 3.0}, {"Mitral Valve", 1.25, std::nullopt}};
  const std::string text = error_samples_to_json(samples);
  const auto back = error_samples_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].target == "Aortic Valve");
  CHECK(back[0].orientation_error == 3.0);
  CHECK_FALSE(back[1].orientation_error.has_value());
  CHECK(error_samples_to_json(back) == text);
  CHECK_THROWS_AS(error_samples_from_json(R"({"format_version":1,"samples":[{"target":"x"}]})"), Error);
  CHECK_THROWS_AS(load_error_samples("/nonexistent/samples.json"), Error);
}
