#include "landnav/measurement.hpp"

namespace landnav {

namespace {

Vec3 predict_with(const EarthModel& earth, const NavState& nav, const Mat3& C_ba, const CalibrationSet& calib,
                  const Vec3& omega_ib, const Vec3& gyro_bias) {
  const Mat3 C_nb = nav.C_bn.transpose();
  const Vec3 w_eb = omega_ib - gyro_bias - C_nb * earth.earth_rate(nav.p);
  Vec3 y = C_ba * (C_nb * nav.v + w_eb.cross(calib.lever_arm));
  y[0] *= calib.factor;
  return y;
}

}  // namespace

Vec3 measurement_predict(const EarthModel& earth, const NavState& nav, const CalibrationSet& calib,
                         const Vec3& omega_ib, const Vec3& gyro_bias) {
  return predict_with(earth, nav, misalignment_dcm(calib.angles()), calib, omega_ib, gyro_bias);
}

Vec3 measurement_predict(const EarthModel& earth, const NavState& nav, const CalibrationSet& calib, double roll,
                         const Vec3& omega_ib, const Vec3& gyro_bias) {
  return predict_with(earth, nav, misalignment_dcm(calib.yaw, calib.pitch, roll), calib, omega_ib, gyro_bias);
}

MeasurementJacobian measurement_jacobian(const EarthModel& earth, const NavState& nav, const CalibrationSet& calib,
                                         const Vec3& omega_ib, const Vec3& gyro_bias) {
  const Mat3 C_nb = nav.C_bn.transpose();
  const Vec3 w_ie = earth.earth_rate(nav.p);
  const Vec3 w_eb = omega_ib - gyro_bias - C_nb * w_ie;
  const Vec3 body_velocity = C_nb * nav.v + w_eb.cross(calib.lever_arm);
  const Mat3 A = misalignment_dcm(calib.angles());
  const Mat3 D = Eigen::Vector3d(calib.factor, 1.0, 1.0).asDiagonal();
  const Mat3 DA = D * A;
  const Mat3 l_x = skew(calib.lever_arm);

  MeasurementJacobian H = MeasurementJacobian::Zero();
  H.block<3, 3>(0, es::kAtt) = DA * (-C_nb * skew(nav.v) - l_x * C_nb * skew(w_ie));
  H.block<3, 3>(0, es::kVel) = DA * C_nb;
  H.block<3, 3>(0, es::kGyroBias) = DA * l_x;
  H.col(es::kYaw) = D * misalignment_dcm_dyaw(calib.angles()) * body_velocity;
  H.col(es::kPitch) = D * misalignment_dcm_dpitch(calib.angles()) * body_velocity;
  H.block<3, 3>(0, es::kLever) = DA * skew(w_eb);
  H(0, es::kFactor) = A.row(0).dot(body_velocity);
  return H;
}

std::array<CalibrationTriple, 4> indiscriminable_variants(double yaw, double pitch, double factor) {
  return {{{wrap_angle(yaw), wrap_angle(pitch), factor},
           {wrap_angle(kPi + yaw), wrap_angle(kPi - pitch), factor},
           {wrap_angle(kPi + yaw), wrap_angle(-pitch), -factor},
           {wrap_angle(yaw), wrap_angle(kPi + pitch), -factor}}};
}

}  // namespace landnav
