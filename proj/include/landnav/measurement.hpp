#pragma once

#include <array>

#include <Eigen/Dense>

#include "landnav/earth.hpp"
#include "landnav/strapdown.hpp"

namespace landnav {

/// Error-state layout: attitude (n-frame small angle), velocity, position
/// (N-U-E metres), gyro bias, accel bias, yaw, pitch, lever arm, odometer factor.
namespace es {
inline constexpr int kAtt = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
inline constexpr int kYaw = 15;
inline constexpr int kPitch = 16;
inline constexpr int kLever = 17;
inline constexpr int kFactor = 20;
inline constexpr int kSize = 21;
}  // namespace es

using ErrorVector = Eigen::Matrix<double, es::kSize, 1>;
using Covariance = Eigen::Matrix<double, es::kSize, es::kSize>;
using MeasurementJacobian = Eigen::Matrix<double, 3, es::kSize>;

/// IMU-vehicle misalignment, lever arm and odometer factor (pulses/m).
struct CalibrationSet {
  double yaw = 0.0;
  double pitch = 0.0;
  Vec3 lever_arm = Vec3::Zero();
  double factor = 1.0;

  MisalignmentAngles angles() const { return {yaw, pitch}; }
};

/// Odometer reading in pulses/s followed by the two nonholonomic residuals (m/s):
/// diag(f, 1, 1) C_b^a (C_n^b v^n + omega_eb^b x l^b), with
/// omega_eb^b = omega_ib^b - b_g - C_n^b omega_ie^n.
Vec3 measurement_predict(const EarthModel& earth, const NavState& nav, const CalibrationSet& calib,
                         const Vec3& omega_ib, const Vec3& gyro_bias);

/// Same measurement with an explicit roll angle in C_b^a.
Vec3 measurement_predict(const EarthModel& earth, const NavState& nav, const CalibrationSet& calib, double roll,
                         const Vec3& omega_ib, const Vec3& gyro_bias);

/// d(predicted - true)/d(error state), for errors defined as estimate minus truth.
MeasurementJacobian measurement_jacobian(const EarthModel& earth, const NavState& nav, const CalibrationSet& calib,
                                         const Vec3& omega_ib, const Vec3& gyro_bias);

struct CalibrationTriple {
  double yaw;
  double pitch;
  double factor;
};

/// The four (yaw, pitch, factor) triples producing identical measurements,
/// starting with the input itself; angles wrapped into (-pi, pi].
std::array<CalibrationTriple, 4> indiscriminable_variants(double yaw, double pitch, double factor);

}  // namespace landnav
