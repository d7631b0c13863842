#pragma once

#include <Eigen/Dense>

namespace landnav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDeg = kPi / 180.0;

/// Axis indices of the North-Up-East local-level frame.
inline constexpr int kNorth = 0;
inline constexpr int kUp = 1;
inline constexpr int kEast = 2;

/// Cross-product matrix: skew(a) * b == a.cross(b).
Mat3 skew(const Vec3& v);

/// Inverse of skew() for the antisymmetric part of m.
Vec3 vee(const Mat3& m);

/// Rodrigues' formula; series expansion below 1e-8 rad.
Mat3 rotation_vector_to_dcm(const Vec3& rv);
Vec3 dcm_to_rotation_vector(const Mat3& c);

/// One step of the symmetric correction C <- C - 0.5 C (C^T C - I).
Mat3 orthonormalize(const Mat3& c);

/// Max-abs entry of C^T C - I.
double orthonormality_error(const Mat3& c);

Eigen::Quaterniond dcm_to_quaternion(const Mat3& c);
Mat3 quaternion_to_dcm(const Eigen::Quaterniond& q);

/// Wraps into (-pi, pi].
double wrap_angle(double a);

/// IMU-to-vehicle misalignment. Yaw rotates about the body y axis first,
/// then pitch about z; roll about x is not observable and stays at zero.
struct MisalignmentAngles {
  double yaw = 0.0;
  double pitch = 0.0;
};

/// C_b^a for the y-z-x rotation sequence, including roll.
Mat3 misalignment_dcm(double yaw, double pitch, double roll);
inline Mat3 misalignment_dcm(const MisalignmentAngles& a) { return misalignment_dcm(a.yaw, a.pitch, 0.0); }

/// Partial derivatives of C_b^a (roll = 0) with respect to yaw and pitch.
Mat3 misalignment_dcm_dyaw(const MisalignmentAngles& a);
Mat3 misalignment_dcm_dpitch(const MisalignmentAngles& a);

/// Small-angle attitude error phi (n-frame) such that C_est = (I - phi x) C_true.
Vec3 attitude_error(const Mat3& c_est, const Mat3& c_true);

}  // namespace landnav
