#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "landnav/error.hpp"
#include "landnav/inmotion.hpp"
#include "landnav/pipeline.hpp"
#include "oracles.hpp"

using namespace landnav;

namespace {

const EarthModel kEarth = EarthModel::wgs84();

Mat3 heading_rotation(double heading) {
  Mat3 C;
  C.col(0) = Vec3(std::cos(heading), 0.0, std::sin(heading));
  C.col(1) = Vec3(-std::sin(heading), 0.0, std::cos(heading));
  C.col(2) = Vec3(0.0, -1.0, 0.0);
  return C;
}

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

// Perfect speed epochs at 1 Hz from the truth trajectory.
std::vector<SpeedEstimate> true_speeds(const TruthTrajectory& truth) {
  std::vector<SpeedEstimate> out;
  const double t0 = truth.samples().front().nav.t;
  for (double t = std::ceil(t0); t <= truth.samples().back().nav.t + 1e-9; t += 1.0) {
    SpeedEstimate s;
    s.t = t;
    s.speed = truth.sample_at(t).speed;
    s.covariance.setZero();
    out.push_back(s);
  }
  return out;
}

std::vector<ImuIncrement> after(const std::vector<ImuIncrement>& imu, double t) {
  std::vector<ImuIncrement> out;
  for (const auto& m : imu)
    if (m.t > t + 1e-9) out.push_back(m);
  return out;
}

}  // namespace

TEST_SUITE("inmotion") {

TEST_CASE("body attitude stays identity without rotation and follows a constant rate") {
  Mat3 C = Mat3::Identity();
  for (int k = 0; k < 10000; ++k) C = accumulate_body_attitude(C, Vec3::Zero(), Vec3::Zero());
  CHECK(C == Mat3::Identity());

  const Vec3 axis = Vec3(0.3, -0.5, 0.8).normalized();
  const double rate = 0.2, h = 0.005;
  for (int k = 0; k < 20000; ++k) C = accumulate_body_attitude(C, axis * rate * h, axis * rate * h);
  const Mat3 expected = Eigen::AngleAxisd(rate * 2.0 * h * 20000, axis).toRotationMatrix();
  CHECK(attitude_error(C, expected).norm() < 1e-10);
}

TEST_CASE("body attitude under coning beats the single-sample update by 100x") {
  const double a = 0.01, w = 2.0 * kPi * 2.0, h = 0.005;
  auto rate = [&](double t) { return oracle::coning_rate(a, w, t); };
  Mat3 two = Mat3::Identity(), one = Mat3::Identity(), ref = Mat3::Identity();
  for (int k = 0; k < 2000; ++k) {
    const double t0 = 2.0 * k * h, t1 = t0 + h, t2 = t1 + h;
    const Vec3 d1 = oracle::coning_increment(a, w, t0, t1), d2 = oracle::coning_increment(a, w, t1, t2);
    two = accumulate_body_attitude(two, d1, d2);
    one = orthonormalize(one * rotation_vector_to_dcm(d1 + d2));
    ref = oracle::rk4_attitude(ref, rate, t0, t2, 200);
  }
  ref = orthonormalize(orthonormalize(ref));
  const double e2 = attitude_error(two, ref).norm(), e1 = attitude_error(one, ref).norm();
  MESSAGE("coning two-sample " << e2 << " single " << e1);
  CHECK(e1 > 100.0 * e2);
}

TEST_CASE("navigation-frame attitude follows the earth rotation") {
  const GeodeticPosition p{1.0, 40.0 * kDeg, 200.0};
  const Vec3 w = kEarth.earth_rate(p);
  CHECK(accumulate_nav_attitude(Mat3::Identity(), w, 0.0) == Mat3::Identity());
  CHECK_THROWS(accumulate_nav_attitude(Mat3::Identity(), w, -1.0));

  Mat3 C = Mat3::Identity();
  for (int k = 0; k < 6 * 3600; ++k) C = accumulate_nav_attitude(C, w, 1.0);
  const Vec3 rv = dcm_to_rotation_vector(C);
  CHECK(rv.norm() == doctest::Approx(kEarth.rotation_rate * 6.0 * 3600.0).epsilon(1e-12));
  CHECK(angle_between(rv, w) < 1e-12);

  Mat3 D = Mat3::Identity();
  for (int k = 0; k < 30000; ++k) D = accumulate_nav_attitude(D, w, 0.01);
  const Mat3 ref = Eigen::AngleAxisd(w.norm() * 300.0, w.normalized()).toRotationMatrix();
  CHECK(attitude_error(D, ref).norm() < 1e-10);
}

TEST_CASE("gravity integral step is exact without rotation and third order with it") {
  const Vec3 g(0.0, -9.8, 0.0);
  CHECK(gravity_integral_step(Mat3::Identity(), Vec3::Zero(), g, 0.37) == 0.37 * g);

  const Vec3 omega(0.02, 0.05, -0.03);
  const auto e = oracle::gravity_step_errors(omega, g, {0.8, 0.4, 0.2, 0.1});
  for (std::size_t i = 1; i < e.size(); ++i) {
    const double order = std::log2(e[i - 1] / e[i]);
    MESSAGE("gravity step order " << order);
    CHECK(order > 2.9);
    CHECK(order < 3.1);
  }
}

TEST_CASE("gravity-side steps sweep independent directions") {
  const GeodeticPosition p{0.2, 45.0 * kDeg, 0.0};
  const Vec3 w = kEarth.earth_rate(p), g = kEarth.gravity(p);
  Mat3 C = Mat3::Identity();
  std::vector<Vec3> steps, sums;
  Vec3 beta = Vec3::Zero();
  for (int k = 0; k <= 300; ++k) {
    const Vec3 step = gravity_integral_step(C, w, g, 1.0);
    beta += step;
    if (k % 10 == 0) {
      steps.push_back(step);
      sums.push_back(beta);
    }
    C = accumulate_nav_attitude(C, w, 1.0);
  }
  double smallest = kPi;
  for (std::size_t i = 0; i < steps.size(); ++i)
    for (std::size_t j = i + 6; j < steps.size(); ++j) smallest = std::min(smallest, angle_between(steps[i], steps[j]));
  MESSAGE("smallest step angle 60 s apart " << smallest);
  CHECK(smallest > 1e-4);

  // Cumulative sums over 120 s at 60 deg latitude already span two directions.
  const GeodeticPosition q{0.2, 60.0 * kDeg, 0.0};
  std::vector<ObservationPair> pairs;
  AlignmentAccumulator acc;
  ImuIncrement still;
  for (int k = 0; k < 12000; ++k) {
    acc.step(still, still, 0.01, kEarth.earth_rate(q), kEarth.gravity(q));
    if ((k + 1) % 100 == 0) pairs.push_back({acc.elapsed, acc.beta, acc.beta});
  }
  Eigen::MatrixXd dirs(pairs.size(), 3);
  for (std::size_t i = 0; i < pairs.size(); ++i) dirs.row(i) = pairs[i].b.normalized().transpose();
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(dirs).singularValues();
  CHECK(s[1] / s[0] > 1e-4);
}

TEST_CASE("force integral: zero, rotation free, and a rotating accelerating profile") {
  CHECK(force_integral_step(Mat3::Identity(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()) == Vec3::Zero());
  const Vec3 dv(0.01, -0.02, 0.049);
  CHECK(force_integral_step(Mat3::Identity(), Vec3::Zero(), Vec3::Zero(), dv, dv) == dv + dv);

  // Rotation about z by phi(t) = 0.1 t + 0.2 sin(3 t); force has steady and oscillating parts.
  auto phi = [](double t) { return 0.1 * t + 0.2 * std::sin(3.0 * t); };
  auto force = [](double t) { return Vec3(0.5 + 0.3 * std::sin(2.0 * t), 0.2 * std::cos(1.5 * t), -9.8); };
  auto dvel = [](double t0, double t1) {
    return Vec3(0.5 * (t1 - t0) - 0.15 * (std::cos(2.0 * t1) - std::cos(2.0 * t0)),
                0.2 / 1.5 * (std::sin(1.5 * t1) - std::sin(1.5 * t0)), -9.8 * (t1 - t0));
  };
  auto att = [&](double t) { return Eigen::AngleAxisd(phi(t), Vec3::UnitZ()).toRotationMatrix(); };
  const double h = 0.005;
  Mat3 C = Mat3::Identity();
  Vec3 alpha = Vec3::Zero(), ref = Vec3::Zero();
  for (int k = 0; k < 30000; ++k) {
    const double t0 = 2.0 * k * h, t1 = t0 + h, t2 = t1 + h;
    const Vec3 a1(0.0, 0.0, phi(t1) - phi(t0)), a2(0.0, 0.0, phi(t2) - phi(t1));
    alpha += force_integral_step(C, a1, a2, dvel(t0, t1), dvel(t1, t2));
    C = accumulate_body_attitude(C, a1, a2);
    const int fine = 20;
    const double dt = 2.0 * h / fine;
    for (int i = 0; i < fine; i += 2) {
      const double s = t0 + i * dt;
      ref += dt / 3.0 * (att(s) * force(s) + 4.0 * att(s + dt) * force(s + dt) + att(s + 2 * dt) * force(s + 2 * dt));
    }
  }
  const double rel = (alpha - ref).norm() / ref.norm();
  MESSAGE("force integral relative error " << rel);
  CHECK(rel < 1e-7);
}

TEST_CASE("observation pairs: stationary geometry and the truth identity") {
  AlignmentAccumulator acc;
  acc.alpha = Vec3(1.0, 2.0, 3.0);
  acc.beta = Vec3(-1.0, 0.5, 0.25);
  const ObservationPair still = alignment_observation(acc, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                                                      Vec3(1.0, 0.5, 0.3));
  CHECK(still.a == -acc.alpha);
  CHECK(still.b == acc.beta);

  TruthConfig cfg;
  cfg.start = {2.0, 35.0 * kDeg, 100.0};
  cfg.initial.heading = 0.4;
  cfg.suspension.pitch_amplitude = 0.3 * kDeg;
  cfg.suspension.roll_amplitude = 0.3 * kDeg;
  const TruthTrajectory truth = generate_truth({{SegmentKind::SpeedRamp, 10.0, 12.0},
                                                {SegmentKind::Arc, 40.0, 0.0, 0.04, 0.02, 0.01},
                                                {SegmentKind::SpeedRamp, 10.0, 18.0},
                                                {SegmentKind::Arc, 40.0, 0.0, -0.05, -0.02, -0.01}},
                                               cfg);
  const Vec3 lever(1.0, 0.5, 0.3);
  const auto ideal = ideal_imu_increments(truth);
  const auto& samples = truth.samples();

  // Odometer-point body velocity and the earth-referenced body rate from truth.
  auto body_terms = [&](const TruthSample& s, Vec3& y, Vec3& w_eb) {
    const Mat3 C_nb = s.nav.C_bn.transpose();
    w_eb = s.omega_ib_b - C_nb * kEarth.earth_rate(s.nav.p);
    y = C_nb * s.nav.v + w_eb.cross(lever);
  };

  auto residuals = [&](const Vec3& gyro_bias) {
    AlignmentAccumulator a;
    Vec3 y0, w0;
    body_terms(samples[0], y0, w0);
    const Mat3 C_nb0 = samples[0].nav.C_bn.transpose();
    double worst = 0.0;
    for (std::size_t k = 0; 2 * k + 1 < ideal.size(); ++k) {
      ImuIncrement m1 = ideal[2 * k], m2 = ideal[2 * k + 1];
      m1.dtheta += gyro_bias * truth.step();
      m2.dtheta += gyro_bias * truth.step();
      const TruthSample& s0 = samples[2 * k];
      const TruthSample& s2 = samples[2 * k + 2];
      const Vec3 v_mid = 0.5 * (s0.nav.v + s2.nav.v);
      const Vec3 w_ie = kEarth.earth_rate(s0.nav.p);
      a.step(m1, m2, m2.t - s0.nav.t, w_ie + kEarth.transport_rate(s0.nav.p, v_mid), kEarth.gravity(s0.nav.p),
             w_ie.cross(v_mid));
      if ((k + 1) % 100 != 0) continue;
      Vec3 y, w_eb;
      body_terms(s2, y, w_eb);
      const ObservationPair pair = alignment_observation(a, y, y0, w_eb, w0, lever);
      worst = std::max(worst, (pair.a - C_nb0 * pair.b).norm());
    }
    return worst;
  };
  const double clean = residuals(Vec3::Zero());
  MESSAGE("truth identity residual " << clean);
  CHECK(clean < 1e-6);
  const double small = residuals(Vec3(1.0, -1.0, 1.0) * 0.01 * kDeg / 3600.0);
  const double large = residuals(Vec3(1.0, -1.0, 1.0) * 0.1 * kDeg / 3600.0);
  CHECK(small > clean);
  CHECK(large > 5.0 * small);
}

TEST_CASE("attitude solve: exact pairs recover, collinear pairs are reported") {
  const Mat3 C_bn = rotation_vector_to_dcm(Vec3(0.3, -1.2, 0.7));
  const Vec3 b1(0.0, 9.8, 0.0), b2(3.0, 0.0, 1.0);
  const std::vector<ObservationPair> pairs = {{1.0, C_bn.transpose() * b1, b1}, {2.0, C_bn.transpose() * b2, b2}};
  const AttitudeSolution sol = solve_initial_attitude(pairs);
  CHECK(attitude_error(sol.C_bn0, C_bn).norm() < 1e-12);
  CHECK(std::abs(sol.min_eigenvalue) < 1e-9);
  CHECK_FALSE(sol.weak);

  const std::vector<ObservationPair> collinear = {{1.0, C_bn.transpose() * b1, b1},
                                                  {2.0, C_bn.transpose() * (2.0 * b1), 2.0 * b1},
                                                  {3.0, C_bn.transpose() * (3.0 * b1), 3.0 * b1}};
  CHECK_THROWS_AS(solve_initial_attitude(collinear), NavError);
  CHECK_THROWS_AS(solve_initial_attitude({pairs[0]}), NavError);
}

TEST_CASE("initial velocity") {
  CHECK(initial_velocity(heading_rotation(0.3), Vec3::Zero(), Vec3::Zero(), Vec3(1.0, 0.5, 0.3)) == Vec3::Zero());
  CHECK(initial_velocity(Mat3::Identity(), Vec3(10.0, 0.0, 0.0), Vec3(0.1, 0.2, 0.3), Vec3::Zero()) ==
        Vec3(10.0, 0.0, 0.0));

  TruthConfig cfg;
  cfg.start = {0.0, 0.5, 0.0};
  const TruthTrajectory truth =
      generate_truth({{SegmentKind::SpeedRamp, 8.0, 10.0}, {SegmentKind::Arc, 20.0, 0.0, 0.1}}, cfg);
  const Vec3 lever(1.0, 0.5, 0.3);
  double worst = 0.0;
  for (const TruthSample& s : truth.samples()) {
    const Mat3 C_nb = s.nav.C_bn.transpose();
    const Vec3 w_eb = s.omega_ib_b - C_nb * kEarth.earth_rate(s.nav.p);
    const Vec3 y = C_nb * s.nav.v + w_eb.cross(lever);
    worst = std::max(worst, (initial_velocity(s.nav.C_bn, y, s.omega_ib_b, lever) - s.nav.v).norm());
  }
  MESSAGE("initial velocity worst error " << worst);
  CHECK(worst < 2.0 * kEarth.rotation_rate * lever.norm());
}

TEST_CASE("restoration: standing still, translation in longitude, gaps") {
  const GeodeticPosition p0{0.5, 0.6, 30.0};
  const Mat3 C = heading_rotation(1.1);
  std::vector<AlignmentRecord> history;
  for (int k = 0; k <= 300; ++k) history.push_back({static_cast<double>(k), Mat3::Identity(), Mat3::Identity(), Vec3::Zero(), Vec3::Zero()});
  const GeodeticPosition p = restore_position(kEarth, p0, C, history, Vec3(1.0, 0.5, 0.3));
  CHECK(kEarth.local_offset(p0, p).norm() < 1e-9);

  for (auto& r : history) {
    r.y = Vec3(15.0, 0.1, -0.05);
    r.C_bb0 = rotation_vector_to_dcm(Vec3(0.0, 0.0, 1e-3 * r.t));
  }
  const GeodeticPosition a = restore_position(kEarth, p0, C, history, Vec3(1.0, 0.5, 0.3));
  GeodeticPosition shifted = p0;
  shifted.longitude += 0.25;
  const GeodeticPosition b = restore_position(kEarth, shifted, C, history, Vec3(1.0, 0.5, 0.3));
  CHECK(b.longitude - a.longitude == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(b.latitude == a.latitude);
  CHECK(b.height == a.height);

  history.erase(history.begin() + 100);
  CHECK_THROWS_AS(restore_position(kEarth, p0, C, history, Vec3::Zero()), NavError);
  CHECK_THROWS_AS(restore_position(kEarth, p0, C, {}, Vec3::Zero()), NavError);
}

TEST_CASE("perfect sensors on a straight run: alignment and restoration match truth") {
  TruthConfig cfg;
  cfg.start = {116.0 * kDeg, 28.0 * kDeg, 50.0};
  cfg.initial.heading = 30.0 * kDeg;
  const TruthTrajectory truth = generate_truth({{SegmentKind::SpeedRamp, 10.0, 15.0}, {SegmentKind::Straight, 320.0}}, cfg);
  const auto imu = after(ideal_imu_increments(truth), 12.0);
  const auto speeds = true_speeds(truth);
  AlignmentConfig ac;
  ac.nominal_factor = 1.0;
  const CalibrationSet calib{0.0, 0.0, Vec3::Zero(), 1.0};
  const double t_start = 12.0 + ac.settle;
  const AlignmentResult r = align_in_motion(imu, speeds, calib, truth.position_at(t_start), ac);
  REQUIRE(r.t_start == doctest::Approx(t_start));
  const Vec3 att = attitude_error(r.state.C_bn, truth.sample_at(r.t_end).nav.C_bn);
  const Vec3 dp = kEarth.local_offset(truth.position_at(r.t_end), r.state.p);
  const double travelled = truth.sample_at(r.t_end).distance - truth.sample_at(r.t_start).distance;
  MESSAGE("perfect attitude error deg " << att.transpose() / kDeg << " position error " << dp.transpose()
                                        << " over " << travelled << " m");
  CHECK(travelled == doctest::Approx(15.0 * 300.0).epsilon(1e-6));
  CHECK(dp.norm() < 0.1);
  CHECK(std::abs(att[1]) < 0.01 * kDeg);
  CHECK((r.state.v - truth.sample_at(r.t_end).nav.v).norm() < 1e-3);
}

TEST_CASE("reference drive: alignment accuracy, restoration and handoff composition") {
  const Scenario s = default_scenario();
  const SimulatedData d = simulate(s, 1);
  const auto speeds = prefilter_speeds(s, d.odometer);
  const double t_start = s.alignment_start;
  CalibrationSet calib{s.truth.mount.yaw, s.truth.mount.pitch, s.truth.mount.lever_arm, s.odometer.scale_factor};

  std::vector<ImuIncrement> imu;
  for (const auto& m : d.imu)
    if (m.t > t_start - s.problem2.alignment.settle + 1e-9) imu.push_back(m);
  std::vector<SpeedEstimate> sp;
  for (const auto& e : speeds)
    if (e.t >= imu.front().t - 1e-9) sp.push_back(e);
  AlignmentConfig ac = s.problem2.alignment;
  const AlignmentResult r = align_in_motion(imu, sp, calib, d.truth.position_at(t_start), ac);
  REQUIRE(r.t_start == doctest::Approx(t_start));

  const Vec3 att = attitude_error(r.state.C_bn, d.truth.sample_at(r.t_end).nav.C_bn);
  MESSAGE("alignment error deg " << att.transpose() / kDeg);
  CHECK(std::abs(att[1]) < 1.0 * kDeg);
  CHECK(std::abs(att[0]) < 0.02 * kDeg);
  CHECK(std::abs(att[2]) < 0.02 * kDeg);

  const double travelled = d.truth.sample_at(r.t_end).distance - d.truth.sample_at(r.t_start).distance;
  const double dp = kEarth.local_offset(d.truth.position_at(r.t_end), r.state.p).head<3>().norm();
  MESSAGE("restoration error " << dp << " m over " << travelled << " m");
  CHECK(dp < 0.005 * travelled);

  // Handoff state is the composition of the solve, the velocity and the restoration.
  const AlignmentRecord& end = r.history.back();
  const Mat3 C_bn = end.C_nn0.transpose() * r.solution.C_bn0 * end.C_bb0;
  CHECK(attitude_error(r.state.C_bn, C_bn).norm() < 1e-12);
  CHECK((r.state.v - initial_velocity(C_bn, end.y, end.omega_ib, calib.lever_arm)).norm() < 1e-12);
  const GeodeticPosition p = restore_position(kEarth, r.p_start, r.solution.C_bn0, r.history, calib.lever_arm);
  CHECK(kEarth.local_offset(p, r.state.p).norm() < 1e-6);

  // Heading error medians over 30 s windows shrink as the window grows.
  std::vector<double> medians;
  for (double w0 = 60.0; w0 < 300.0; w0 += 30.0) {
    std::vector<double> errs;
    for (const AlignmentEpoch& e : r.epochs) {
      const double t = e.t - r.t_start;
      if (t >= w0 && t < w0 + 30.0) errs.push_back(std::abs(attitude_error(e.C_bn, d.truth.sample_at(e.t).nav.C_bn)[1]));
    }
    REQUIRE(!errs.empty());
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    medians.push_back(errs[errs.size() / 2]);
  }
  std::string trend;
  for (double m : medians) trend += std::to_string(m / kDeg) + " ";
  MESSAGE("heading error medians deg " << trend);
  for (std::size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] <= medians[i - 1]);
}

}  // TEST_SUITE
