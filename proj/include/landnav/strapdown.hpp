#pragma once

#include "landnav/earth.hpp"
#include "landnav/rotation.hpp"

namespace landnav {

/// One IMU sub-interval: incremental angle and incremental velocity ending at t.
struct ImuIncrement {
  double t = 0.0;
  Vec3 dtheta = Vec3::Zero();  // rad
  Vec3 dvel = Vec3::Zero();    // m/s
};

/// Attitude C_b^n, velocity v^n (N-U-E) and geodetic position of the IMU.
struct NavState {
  Mat3 C_bn = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  GeodeticPosition p;
  double t = 0.0;
};

inline constexpr double kMaxLandSpeed = 150.0;
inline constexpr double kMaxSubIntervalAngle = 0.5;

/// Frame rates evaluated at one point of an update interval.
struct FrameRates {
  Vec3 earth_rate = Vec3::Zero();      // omega_ie^n
  Vec3 transport_rate = Vec3::Zero();  // omega_en^n
  Vec3 gravity = Vec3::Zero();         // g^n

  Vec3 nav_rate() const { return earth_rate + transport_rate; }  // omega_in^n
  static FrameRates at(const EarthModel& earth, const GeodeticPosition& p, const Vec3& v);
};

/// Two-sample rotation vector: dth1 + dth2 + 2/3 dth1 x dth2.
Vec3 coning_rotation_vector(const Vec3& dth1, const Vec3& dth2);

/// Two-sample specific-force velocity increment in the start-of-interval body frame:
/// dv + 1/2 dth x dv + 1/6 dth x (dth x dv) + 2/3 (dth1 x dv2 + dv1 x dth2),
/// with dth and dv the sums over the two sub-intervals.
Vec3 sculling_velocity_increment(const Vec3& dth1, const Vec3& dth2, const Vec3& dv1, const Vec3& dv2);

/// Propagates C_b^n over one update interval T. The navigation frame turns by
/// omega_in^n T, the body by the coning-corrected rotation vector.
Mat3 attitude_update(const Mat3& C_bn, const Vec3& dth1, const Vec3& dth2, const Vec3& omega_in, double T);

/// Velocity after one update interval; Coriolis and gravity use `mid`, which
/// should describe the interval midpoint. `v_mid` is the midpoint velocity.
Vec3 velocity_update(const Mat3& C_bn, const Vec3& v, const Vec3& dth1, const Vec3& dth2, const Vec3& dv1,
                     const Vec3& dv2, const FrameRates& mid, const Vec3& v_mid, double T);

/// p + R_c v_mid T with R_c averaged over the start and a predicted end point.
GeodeticPosition position_update(const EarthModel& earth, const GeodeticPosition& p, const Vec3& v_mid, double T);

/// One update interval from two consecutive IMU increments.
NavState mechanize_step(const EarthModel& earth, const NavState& state, const ImuIncrement& first,
                        const ImuIncrement& second);

/// Owns a navigation state and advances it two increments at a time.
class Strapdown {
 public:
  Strapdown(EarthModel earth, NavState initial);

  const NavState& state() const { return state_; }
  NavState& mutable_state() { return state_; }
  const EarthModel& earth() const { return earth_; }

  const NavState& step(const ImuIncrement& first, const ImuIncrement& second);

 private:
  EarthModel earth_;
  NavState state_;
};

}  // namespace landnav
