#include "landnav/strapdown.hpp"

#include <cmath>
#include <string>

#include "landnav/error.hpp"

namespace landnav {

FrameRates FrameRates::at(const EarthModel& earth, const GeodeticPosition& p, const Vec3& v) {
  return {earth.earth_rate(p), earth.transport_rate(p, v), earth.gravity(p)};
}

Vec3 coning_rotation_vector(const Vec3& dth1, const Vec3& dth2) {
  return dth1 + dth2 + (2.0 / 3.0) * dth1.cross(dth2);
}

Vec3 sculling_velocity_increment(const Vec3& dth1, const Vec3& dth2, const Vec3& dv1, const Vec3& dv2) {
  const Vec3 dth = dth1 + dth2;
  const Vec3 dv = dv1 + dv2;
  return dv + 0.5 * dth.cross(dv) + dth.cross(dth.cross(dv)) / 6.0 + (2.0 / 3.0) * (dth1.cross(dv2) + dv1.cross(dth2));
}

Mat3 attitude_update(const Mat3& C_bn, const Vec3& dth1, const Vec3& dth2, const Vec3& omega_in, double T) {
  if (!(T > 0.0)) throw input_error("attitude_update: T must be positive");
  const Mat3 body = rotation_vector_to_dcm(coning_rotation_vector(dth1, dth2));
  const Mat3 nav = rotation_vector_to_dcm(-omega_in * T);
  return orthonormalize(nav * C_bn * body);
}

Vec3 velocity_update(const Mat3& C_bn, const Vec3& v, const Vec3& dth1, const Vec3& dth2, const Vec3& dv1,
                     const Vec3& dv2, const FrameRates& mid, const Vec3& v_mid, double T) {
  if (!(T > 0.0)) throw input_error("velocity_update: T must be positive");
  const Vec3 zeta = mid.nav_rate() * T;
  const Vec3 dv_sf =
      (Mat3::Identity() - 0.5 * skew(zeta)) * C_bn * sculling_velocity_increment(dth1, dth2, dv1, dv2);
  const Vec3 dv_cor =
      (mid.gravity - (2.0 * mid.earth_rate + mid.transport_rate).cross(v_mid)) * T;
  return v + dv_sf + dv_cor;
}

GeodeticPosition position_update(const EarthModel& earth, const GeodeticPosition& p, const Vec3& v_mid,
                                 double T) {
  const Vec3 rate0 = earth.curvature_matrix(p) * v_mid;
  GeodeticPosition pred{p.longitude + rate0.x() * T, p.latitude + rate0.y() * T, p.height + rate0.z() * T};
  const Vec3 rate1 = earth.curvature_matrix(pred) * v_mid;
  const Vec3 d = 0.5 * (rate0 + rate1) * T;
  return {wrap_angle(p.longitude + d.x()), p.latitude + d.y(), p.height + d.z()};
}

namespace {

void check_increment(const ImuIncrement& inc) {
  if (!(inc.dtheta.norm() < kMaxSubIntervalAngle)) {
    throw input_error("IMU increment exceeds the per-sample angle bound at t=" + std::to_string(inc.t));
  }
}

}  // namespace

NavState mechanize_step(const EarthModel& earth, const NavState& s, const ImuIncrement& a,
                        const ImuIncrement& b) {
  check_increment(a);
  check_increment(b);
  const double T = b.t - s.t;
  if (!(T > 0.0) || !(a.t > s.t) || !(b.t > a.t)) {
    throw input_error("mechanize_step: increments must follow the state time and increase");
  }

  // Predictor pass with start-of-interval rates, then a corrector at the midpoint.
  const FrameRates start = FrameRates::at(earth, s.p, s.v);
  const Vec3 v_pred = velocity_update(s.C_bn, s.v, a.dtheta, b.dtheta, a.dvel, b.dvel, start, s.v, T);
  const Vec3 v_half = 0.5 * (s.v + v_pred);
  const GeodeticPosition p_half = position_update(earth, s.p, v_half, 0.5 * T);
  const FrameRates mid = FrameRates::at(earth, p_half, v_half);

  NavState out;
  out.t = b.t;
  out.v = velocity_update(s.C_bn, s.v, a.dtheta, b.dtheta, a.dvel, b.dvel, mid, v_half, T);
  const Vec3 v_mid = 0.5 * (s.v + out.v);
  out.p = position_update(earth, s.p, v_mid, T);
  out.C_bn = attitude_update(s.C_bn, a.dtheta, b.dtheta, mid.nav_rate(), T);
  if (!(out.v.norm() < kMaxLandSpeed)) {
    throw numerical_error("mechanized speed exceeds the land-vehicle bound at t=" + std::to_string(out.t));
  }
  return out;
}

Strapdown::Strapdown(EarthModel earth, NavState initial) : earth_(earth), state_(std::move(initial)) {}

const NavState& Strapdown::step(const ImuIncrement& first, const ImuIncrement& second) {
  state_ = mechanize_step(earth_, state_, first, second);
  return state_;
}

}  // namespace landnav
