#include "landnav/rotation.hpp"

#include <cmath>

namespace landnav {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 rotation_vector_to_dcm(const Vec3& rv) {
  const double a2 = rv.squaredNorm();
  const Mat3 k = skew(rv);
  double s, c;
  if (a2 < 1e-16) {
    s = 1.0 - a2 / 6.0;
    c = 0.5 - a2 / 24.0;
  } else {
    const double a = std::sqrt(a2);
    s = std::sin(a) / a;
    c = (1.0 - std::cos(a)) / a2;
  }
  return Mat3::Identity() + s * k + c * k * k;
}

Vec3 dcm_to_rotation_vector(const Mat3& c) {
  const Eigen::AngleAxisd aa(c);
  return aa.angle() * aa.axis();
}

Mat3 orthonormalize(const Mat3& c) {
  return c - 0.5 * c * (c.transpose() * c - Mat3::Identity());
}

double orthonormality_error(const Mat3& c) {
  return (c.transpose() * c - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Quaterniond dcm_to_quaternion(const Mat3& c) {
  Eigen::Quaterniond q(c);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Mat3 quaternion_to_dcm(const Eigen::Quaterniond& q) { return q.normalized().toRotationMatrix(); }

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Mat3 misalignment_dcm(double yaw, double pitch, double roll) {
  const double cp = std::cos(yaw), sp = std::sin(yaw);
  const double ct = std::cos(pitch), st = std::sin(pitch);
  const double cr = std::cos(roll), sr = std::sin(roll);
  Mat3 m;
  m << ct * cp, st, -ct * sp,
       sr * sp - cr * cp * st, cr * ct, cp * sr + cr * st * sp,
       cr * sp + cp * sr * st, -ct * sr, cr * cp - sr * st * sp;
  return m;
}

Mat3 misalignment_dcm_dyaw(const MisalignmentAngles& a) {
  const double cp = std::cos(a.yaw), sp = std::sin(a.yaw);
  const double ct = std::cos(a.pitch), st = std::sin(a.pitch);
  Mat3 m;
  m << -ct * sp, 0.0, -ct * cp,
       sp * st, 0.0, st * cp,
       cp, 0.0, -sp;
  return m;
}

Mat3 misalignment_dcm_dpitch(const MisalignmentAngles& a) {
  const double cp = std::cos(a.yaw), sp = std::sin(a.yaw);
  const double ct = std::cos(a.pitch), st = std::sin(a.pitch);
  Mat3 m;
  m << -st * cp, ct, st * sp,
       -cp * ct, -st, ct * sp,
       0.0, 0.0, 0.0;
  return m;
}

Vec3 attitude_error(const Mat3& c_est, const Mat3& c_true) {
  // C_est C_true^T = I - phi x  =>  phi = -vee(.)
  return -dcm_to_rotation_vector(c_est * c_true.transpose());
}

}  // namespace landnav
