#include <doctest.h>

#include <cmath>

#include "landnav/simulator.hpp"
#include "landnav/strapdown.hpp"
#include "oracles.hpp"

using namespace landnav;

TEST_SUITE("strapdown") {

TEST_CASE("zero increments leave the attitude unchanged") {
  const Mat3 C = rotation_vector_to_dcm(Vec3(0.1, -0.4, 0.7));
  CHECK((attitude_update(C, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 0.01) - C).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("constant rate about one axis matches the axis-angle closed form") {
  const Vec3 w = Vec3(0.3, -0.2, 0.5);
  const double h = 0.005;
  Mat3 C = Mat3::Identity();
  for (int k = 0; k < 100; ++k) C = attitude_update(C, w * h, w * h, Vec3::Zero(), 2 * h);
  const Mat3 exact = Eigen::AngleAxisd(w.norm() * 1.0, w.normalized()).toRotationMatrix();
  CHECK((C - exact).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-sample coning beats single-sample by at least 100x") {
  const oracle::DriftPair d = oracle::coning_drift(0.01, 5.0, 0.005, 10.0);
  MESSAGE("coning drift two-sample " << d.two_sample << " single " << d.single_sample);
  CHECK(d.ratio() >= 100.0);
}

TEST_CASE("two-sample sculling beats single-sample by at least 100x") {
  const oracle::DriftPair d = oracle::sculling_drift(0.01, 2.0, 5.0, 0.005, 10.0);
  MESSAGE("sculling drift two-sample " << d.two_sample << " single " << d.single_sample);
  CHECK(d.ratio() >= 100.0);
}

TEST_CASE("stationary level balance") {
  const EarthModel flat = [] {
    EarthModel e = EarthModel::wgs84();
    e.rotation_rate = 0.0;
    return e;
  }();
  const GeodeticPosition p{0.0, 0.5, 0.0};
  FrameRates mid = FrameRates::at(flat, p, Vec3::Zero());
  const double h = 0.005;
  const Vec3 dv = -mid.gravity * h;  // accelerometers read -g
  const Vec3 v = velocity_update(Mat3::Identity(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), dv, dv, mid, Vec3::Zero(), 2 * h);
  CHECK(v.norm() < 1e-15);
}

TEST_CASE("no rotation passes constant increments through") {
  FrameRates none;
  const Vec3 dv(0.01, -0.02, 0.03);
  const Vec3 v = velocity_update(Mat3::Identity(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), dv, dv, none, Vec3::Zero(), 0.01);
  CHECK((v - 2 * dv).norm() == 0.0);
  CHECK(sculling_velocity_increment(Vec3::Zero(), Vec3::Zero(), dv, dv) == 2 * dv);
}

TEST_CASE("velocity increment matches a fine-step reference under rotation and acceleration") {
  // Rotation about a fixed axis with sinusoidal angle, force with a constant part.
  const double A = 0.02, w = 2 * kPi * 1.5, F0 = 3.0, B = 1.0, h = 0.005;
  const Vec3 axis = Vec3(1.0, 2.0, -0.5).normalized();
  auto att = [&](double t) { return Eigen::AngleAxisd(A * std::sin(w * t), axis).toRotationMatrix(); };
  auto force = [&](double t) { return Vec3(F0 + B * std::sin(w * t), B * std::cos(w * t), -0.5 * B); };
  auto integrate = [&](auto fn, double t0, double t1) {
    const int n = 2000;
    const double dt = (t1 - t0) / n;
    Vec3 s = Vec3::Zero();
    for (int i = 0; i < n; i += 2)
      s += dt / 3.0 * (fn(t0 + i * dt) + 4.0 * fn(t0 + (i + 1) * dt) + fn(t0 + (i + 2) * dt));
    return s;
  };
  FrameRates none;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t0 = 0.037 * k, t1 = t0 + h, t2 = t1 + h;
    const Vec3 th1 = axis * A * (std::sin(w * t1) - std::sin(w * t0));
    const Vec3 th2 = axis * A * (std::sin(w * t2) - std::sin(w * t1));
    // Increments in the body frame: the body rotates, so rotate the force back to b(t).
    const Vec3 v1 = integrate(force, t0, t1), v2 = integrate(force, t1, t2);
    const Vec3 dv = velocity_update(att(t0), Vec3::Zero(), th1, th2, v1, v2, none, Vec3::Zero(), 2 * h);
    const Vec3 ref = integrate([&](double t) { return Vec3(att(t) * force(t)); }, t0, t2);
    worst = std::max(worst, (dv - ref).norm() / ref.norm());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("position update") {
  const EarthModel sphere = EarthModel::spherical(6371000.0);
  const GeodeticPosition p{0.2, 0.0, 0.0};
  const GeodeticPosition same = position_update(sphere, p, Vec3::Zero(), 0.01);
  CHECK(same.latitude == p.latitude);
  CHECK(same.longitude == p.longitude);
  CHECK(same.height == p.height);
  const GeodeticPosition north = position_update(sphere, p, Vec3(25.0, 0.0, 0.0), 0.01);
  CHECK(north.latitude == doctest::Approx(25.0 * 0.01 / 6371000.0).epsilon(1e-14));
  CHECK(north.longitude == p.longitude);
}

TEST_CASE("position integration along a 60 s curved path matches a fine-step oracle") {
  const EarthModel e = EarthModel::wgs84();
  const double V = 20.0, turn = 0.05, climb = 0.3;
  auto vel = [&](double t) { return Vec3(V * std::cos(turn * t), climb, V * std::sin(turn * t)); };
  auto rate = [&](const GeodeticPosition& p, double t) {
    const Vec3 r = e.curvature_matrix(p) * vel(t);
    return r;
  };
  const GeodeticPosition p0{1.9, 0.7, 100.0};
  GeodeticPosition p = p0;
  const double T = 0.01;
  for (int k = 0; k < 6000; ++k) p = position_update(e, p, vel((k + 0.5) * T), T);
  GeodeticPosition q = p0;
  const double dt = T / 10.0;
  for (int k = 0; k < 60000; ++k) {
    const double t = k * dt;
    auto add = [](const GeodeticPosition& a, const Vec3& d, double s) {
      return GeodeticPosition{a.longitude + s * d.x(), a.latitude + s * d.y(), a.height + s * d.z()};
    };
    const Vec3 k1 = rate(q, t), k2 = rate(add(q, k1, dt / 2), t + dt / 2), k3 = rate(add(q, k2, dt / 2), t + dt / 2),
               k4 = rate(add(q, k3, dt), t + dt);
    q = add(q, k1 + 2 * k2 + 2 * k3 + k4, dt / 6);
  }
  CHECK(std::abs(p.latitude - q.latitude) < 1e-10);
  CHECK(std::abs(p.longitude - q.longitude) < 1e-10);
}

TEST_CASE("stationary mechanization drifts less than 1 m in 300 s") {
  TruthConfig cfg;
  cfg.start = {0.5, 0.6, 30.0};
  const TruthTrajectory truth = generate_truth({{SegmentKind::Pause, 300.0}}, cfg);
  const auto imu = ideal_imu_increments(truth);
  Strapdown sd(cfg.earth, truth.samples().front().nav);
  double worst_orth = 0.0;
  for (std::size_t i = 0; i + 1 < imu.size(); i += 2) {
    sd.step(imu[i], imu[i + 1]);
    worst_orth = std::max(worst_orth, orthonormality_error(sd.state().C_bn));
  }
  CHECK(cfg.earth.local_offset(truth.samples().front().nav.p, sd.state().p).norm() < 1.0);
  CHECK(worst_orth < 1e-10);
}

TEST_CASE("circular laps close against simulator truth with perfect sensors") {
  TruthConfig cfg;
  cfg.start = {2.0, 0.5, 10.0};
  const double lap = 60.0;
  const TruthTrajectory truth = generate_truth(
      {{SegmentKind::SpeedRamp, 20.0, 10.0}, {SegmentKind::Arc, lap, 0.0, 2 * kPi / lap}, {SegmentKind::Arc, lap, 0.0, 2 * kPi / lap}},
      cfg);
  const auto imu = ideal_imu_increments(truth);
  Strapdown sd(cfg.earth, truth.samples().front().nav);
  std::vector<double> errors;
  for (std::size_t i = 0; i + 1 < imu.size(); i += 2) {
    sd.step(imu[i], imu[i + 1]);
    const double t = imu[i + 1].t;
    for (double mark : {20.0, 20.0 + lap, 20.0 + 2 * lap})
      if (std::abs(t - mark) < 1e-9)
        errors.push_back(cfg.earth.local_offset(truth.sample_at(t).nav.p, sd.state().p).norm());
    CHECK(orthonormality_error(sd.state().C_bn) < 1e-10);
  }
  REQUIRE(errors.size() == 3);
  MESSAGE("loop errors " << errors[0] << " " << errors[1] << " " << errors[2]);
  CHECK(errors[1] - errors[0] < 0.01);
  CHECK(errors[2] - errors[1] < 0.01);
}

TEST_CASE("mechanize_step rejects bad intervals") {
  NavState s;
  s.p = {0.0, 0.5, 0.0};
  ImuIncrement a{0.01, Vec3::Zero(), Vec3::Zero()}, b{0.01, Vec3::Zero(), Vec3::Zero()};
  CHECK_THROWS(mechanize_step(EarthModel::wgs84(), s, a, b));
}

}  // TEST_SUITE
