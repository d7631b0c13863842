#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "landnav/inmotion.hpp"
#include "landnav/measurement.hpp"
#include "landnav/strapdown.hpp"

namespace oracle {

using landnav::Mat3;
using landnav::Vec3;

struct DriftPair {
  double two_sample = 0.0;
  double single_sample = 0.0;
  double ratio() const { return single_sample / two_sample; }
};

// Body rate of the coning motion: two out-of-phase sinusoids on x and y.
inline Vec3 coning_rate(double a, double w, double t) { return {a * w * std::cos(w * t), a * w * std::sin(w * t), 0.0}; }

inline Vec3 coning_increment(double a, double w, double t0, double t1) {
  return {a * (std::sin(w * t1) - std::sin(w * t0)), -a * (std::cos(w * t1) - std::cos(w * t0)), 0.0};
}

// dC/dt = C [omega x], classical RK4.
template <class Rate>
Mat3 rk4_attitude(Mat3 C, Rate rate, double t0, double t1, int steps) {
  const double dt = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * dt;
    const Mat3 k1 = C * landnav::skew(rate(t));
    const Mat3 k2 = (C + 0.5 * dt * k1) * landnav::skew(rate(t + 0.5 * dt));
    const Mat3 k3 = (C + 0.5 * dt * k2) * landnav::skew(rate(t + 0.5 * dt));
    const Mat3 k4 = (C + dt * k3) * landnav::skew(rate(t + dt));
    C += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return C;
}

// Attitude drift after `duration` for the two-sample update and for a
// single-sample update (whole-interval increment, no coning term), both
// against an RK4 reference on a 100x finer grid.
inline DriftPair coning_drift(double amplitude, double freq_hz, double h, double duration) {
  const double w = 2.0 * landnav::kPi * freq_hz;
  const int pairs = static_cast<int>(std::lround(duration / (2.0 * h)));
  Mat3 two = Mat3::Identity(), one = Mat3::Identity(), ref = Mat3::Identity();
  auto rate = [&](double t) { return coning_rate(amplitude, w, t); };
  for (int k = 0; k < pairs; ++k) {
    const double t0 = 2.0 * k * h, t1 = t0 + h, t2 = t0 + 2.0 * h;
    const Vec3 d1 = coning_increment(amplitude, w, t0, t1), d2 = coning_increment(amplitude, w, t1, t2);
    two = landnav::attitude_update(two, d1, d2, Vec3::Zero(), 2.0 * h);
    one = landnav::orthonormalize(one * landnav::rotation_vector_to_dcm(d1 + d2));
    ref = rk4_attitude(ref, rate, t0, t2, 200);
  }
  ref = landnav::orthonormalize(landnav::orthonormalize(ref));
  return {landnav::attitude_error(two, ref).norm(), landnav::attitude_error(one, ref).norm()};
}

// Sculling: angular oscillation about x in phase with a specific-force
// oscillation along y. The attitude is Rx(A sin wt) exactly, so the
// reference velocity is the integral of C(t) f(t), taken with Simpson's
// rule on a 100x finer grid. Returns the velocity drift of the two-sample
// algorithm and of a single-sample one (rotation compensation only).
inline DriftPair sculling_drift(double angle_amp, double force_amp, double freq_hz, double h, double duration) {
  const double w = 2.0 * landnav::kPi * freq_hz;
  auto att = [&](double t) { return Eigen::AngleAxisd(angle_amp * std::sin(w * t), Vec3::UnitX()).toRotationMatrix(); };
  auto force = [&](double t) { return Vec3(0.0, force_amp * std::sin(w * t), 0.0); };
  auto dtheta = [&](double t0, double t1) {
    return Vec3(angle_amp * (std::sin(w * t1) - std::sin(w * t0)), 0.0, 0.0);
  };
  auto dvel = [&](double t0, double t1) {
    return Vec3(0.0, force_amp * (std::cos(w * t0) - std::cos(w * t1)) / w, 0.0);
  };
  const int pairs = static_cast<int>(std::lround(duration / (2.0 * h)));
  Vec3 two = Vec3::Zero(), one = Vec3::Zero(), ref = Vec3::Zero();
  const int fine = 200;
  for (int k = 0; k < pairs; ++k) {
    const double t0 = 2.0 * k * h, t1 = t0 + h, t2 = t0 + 2.0 * h;
    const Mat3 C0 = att(t0);
    const Vec3 a1 = dtheta(t0, t1), a2 = dtheta(t1, t2), v1 = dvel(t0, t1), v2 = dvel(t1, t2);
    two += C0 * landnav::sculling_velocity_increment(a1, a2, v1, v2);
    one += C0 * (v1 + v2 + 0.5 * (a1 + a2).cross(v1 + v2));
    const double dt = (t2 - t0) / fine;
    for (int i = 0; i < fine; i += 2) {
      const double s = t0 + i * dt;
      ref += dt / 3.0 * (att(s) * force(s) + 4.0 * att(s + dt) * force(s + dt) + att(s + 2 * dt) * force(s + 2 * dt));
    }
  }
  return {(two - ref).norm(), (one - ref).norm()};
}

// Exact integral of exp(s [w x]) g over [0, T] (Rodrigues series in closed form).
inline Vec3 exact_gravity_integral(const Vec3& omega, const Vec3& g, double T) {
  const double n = omega.norm();
  const Mat3 W = landnav::skew(omega);
  if (n * T < 1e-8) return T * g + 0.5 * T * T * W * g;
  const double c1 = (1.0 - std::cos(n * T)) / (n * n);
  const double c2 = (n * T - std::sin(n * T)) / (n * n * n);
  return (T * Mat3::Identity() + c1 * W + c2 * W * W) * g;
}

// Local error of one gravity-integral step for each step length.
inline std::vector<double> gravity_step_errors(const Vec3& omega, const Vec3& g, const std::vector<double>& steps) {
  std::vector<double> out;
  for (double T : steps)
    out.push_back((landnav::gravity_integral_step(Mat3::Identity(), omega, g, T) - exact_gravity_integral(omega, g, T)).norm());
  return out;
}

// Random operating point for the odometer/NHC measurement model.
struct MeasurementPoint {
  landnav::NavState nav;
  landnav::CalibrationSet calib;
  Vec3 omega_ib = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
};

inline MeasurementPoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto vec = [&](double scale) -> Vec3 { return Vec3(u(rng), u(rng), u(rng)) * scale; };
  MeasurementPoint m;
  m.nav.C_bn = landnav::rotation_vector_to_dcm(vec(3.0));
  m.nav.v = vec(30.0);
  m.nav.p = {u(rng) * landnav::kPi, u(rng) * 80.0 * landnav::kDeg, 500.0 * u(rng)};
  m.calib.yaw = u(rng) * landnav::kPi;
  m.calib.pitch = u(rng) * landnav::kPi;
  m.calib.lever_arm = vec(2.0);
  m.calib.factor = 8.6 * (1.0 + 0.1 * u(rng)) * (u(rng) < 0.0 ? -1.0 : 1.0);
  m.omega_ib = vec(0.5);
  m.gyro_bias = vec(1e-6);
  return m;
}

// Applies an error vector (estimate minus truth) to a measurement point.
inline MeasurementPoint perturbed(const landnav::EarthModel& earth, MeasurementPoint m,
                                  const Eigen::Matrix<double, landnav::es::kSize, 1>& dx) {
  namespace es = landnav::es;
  m.nav.C_bn = landnav::rotation_vector_to_dcm(-Vec3(dx.segment<3>(es::kAtt))) * m.nav.C_bn;
  m.nav.v += dx.segment<3>(es::kVel);
  m.nav.p = earth.displace(m.nav.p, dx.segment<3>(es::kPos));
  m.gyro_bias += dx.segment<3>(es::kGyroBias);
  m.calib.yaw += dx[es::kYaw];
  m.calib.pitch += dx[es::kPitch];
  m.calib.lever_arm += dx.segment<3>(es::kLever);
  m.calib.factor += dx[es::kFactor];
  return m;
}

inline Vec3 predict(const landnav::EarthModel& earth, const MeasurementPoint& m) {
  return landnav::measurement_predict(earth, m.nav, m.calib, m.omega_ib, m.gyro_bias);
}

// Central differences of the measurement with respect to every error state.
inline landnav::MeasurementJacobian finite_difference_jacobian(const landnav::EarthModel& earth,
                                                               const MeasurementPoint& m) {
  landnav::MeasurementJacobian H;
  for (int j = 0; j < landnav::es::kSize; ++j) {
    const double h = (j >= landnav::es::kPos && j < landnav::es::kPos + 3) ? 1e-1 : 1e-6;
    Eigen::Matrix<double, landnav::es::kSize, 1> dx = Eigen::Matrix<double, landnav::es::kSize, 1>::Zero();
    dx[j] = h;
    const Vec3 plus = predict(earth, perturbed(earth, m, dx));
    dx[j] = -h;
    const Vec3 minus = predict(earth, perturbed(earth, m, dx));
    H.col(j) = (plus - minus) / (2.0 * h);
  }
  return H;
}

// Largest entry-wise difference, each row scaled by its largest entry.
inline double jacobian_relative_error(const landnav::MeasurementJacobian& analytic,
                                      const landnav::MeasurementJacobian& numeric) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double scale = std::max(numeric.row(i).cwiseAbs().maxCoeff(), 1e-12);
    worst = std::max(worst, (analytic.row(i) - numeric.row(i)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

// Largest relative spread between the measurements of the four variants. The
// variants differ from the original mount by a half turn about one axis, which
// can flip the sign of a nonholonomic row; those rows are measured as zero, so
// they are compared by magnitude. The odometer row must agree with its sign.
inline double variant_spread(const landnav::EarthModel& earth, const MeasurementPoint& m) {
  const Vec3 y0 = predict(earth, m);
  const double scale = std::max(y0.cwiseAbs().maxCoeff(), 1e-300);
  double worst = 0.0;
  for (const auto& v : landnav::indiscriminable_variants(m.calib.yaw, m.calib.pitch, m.calib.factor)) {
    MeasurementPoint w = m;
    w.calib.yaw = v.yaw;
    w.calib.pitch = v.pitch;
    w.calib.factor = v.factor;
    const Vec3 y = predict(earth, w);
    worst = std::max(worst, std::abs(y[0] - y0[0]) / scale);
    worst = std::max(worst, (y.tail<2>().cwiseAbs() - y0.tail<2>().cwiseAbs()).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

// dPhi/dt = F Phi by RK4 with fixed sub-steps.
template <class Matrix>
Matrix integrate_transition(const Matrix& F, double dt, int steps) {
  Matrix phi = Matrix::Identity();
  const double h = dt / steps;
  for (int k = 0; k < steps; ++k) {
    const Matrix k1 = F * phi;
    const Matrix k2 = F * (phi + 0.5 * h * k1);
    const Matrix k3 = F * (phi + 0.5 * h * k2);
    const Matrix k4 = F * (phi + h * k3);
    phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return phi;
}

}  // namespace oracle
