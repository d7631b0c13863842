#include "landnav/earth.hpp"

#include <cmath>

#include "landnav/error.hpp"

namespace landnav {

EarthModel EarthModel::spherical(double radius, double g) {
  EarthModel e;
  e.semi_major_axis = radius;
  e.flattening = 0.0;
  e.gravity_equator = g;
  e.gravity_pole = g;
  e.gravity_m = 0.0;
  return e;
}

void check_away_from_pole(const GeodeticPosition& p) {
  if (!(std::cos(p.latitude) > kPoleCosineThreshold)) {
    throw numerical_error("position too close to a pole (cos L <= 1e-6)");
  }
}

CurvatureRadii EarthModel::radii(double latitude) const {
  const double e2 = eccentricity_squared();
  const double s = std::sin(latitude);
  const double w2 = 1.0 - e2 * s * s;
  const double w = std::sqrt(w2);
  return {semi_major_axis * (1.0 - e2) / (w2 * w), semi_major_axis / w};
}

Mat3 EarthModel::curvature_matrix(const GeodeticPosition& p) const {
  check_away_from_pole(p);
  const auto r = radii(p.latitude);
  Mat3 m = Mat3::Zero();
  m(0, 2) = 1.0 / ((r.transverse + p.height) * std::cos(p.latitude));
  m(1, 0) = 1.0 / (r.meridian + p.height);
  m(2, 1) = 1.0;
  return m;
}

Vec3 EarthModel::earth_rate(const GeodeticPosition& p) const {
  return rotation_rate * Vec3(std::cos(p.latitude), std::sin(p.latitude), 0.0);
}

Vec3 EarthModel::transport_rate(const GeodeticPosition& p, const Vec3& v) const {
  check_away_from_pole(p);
  const auto r = radii(p.latitude);
  const double re = r.transverse + p.height;
  const double rn = r.meridian + p.height;
  return {v[kEast] / re, v[kEast] * std::tan(p.latitude) / re, -v[kNorth] / rn};
}

double EarthModel::gravity_magnitude(const GeodeticPosition& p) const {
  const double e2 = eccentricity_squared();
  const double s2 = std::sin(p.latitude) * std::sin(p.latitude);
  const double b = semi_major_axis * (1.0 - flattening);
  const double k = (b * gravity_pole) / (semi_major_axis * gravity_equator) - 1.0;
  const double g0 = gravity_equator * (1.0 + k * s2) / std::sqrt(1.0 - e2 * s2);
  const double h = p.height;
  const double a = semi_major_axis;
  const double free_air =
      1.0 - 2.0 * h / a * (1.0 + flattening + gravity_m - 2.0 * flattening * s2) + 3.0 * h * h / (a * a);
  return gravity_scale * g0 * free_air;
}

Vec3 EarthModel::gravity(const GeodeticPosition& p) const { return {0.0, -gravity_magnitude(p), 0.0}; }

GeodeticPosition EarthModel::displace(const GeodeticPosition& p, const Vec3& dn) const {
  check_away_from_pole(p);
  const auto r = radii(p.latitude);
  GeodeticPosition out = p;
  out.latitude += dn[kNorth] / (r.meridian + p.height);
  out.longitude = wrap_angle(p.longitude + dn[kEast] / ((r.transverse + p.height) * std::cos(p.latitude)));
  out.height += dn[kUp];
  return out;
}

Vec3 EarthModel::local_offset(const GeodeticPosition& from, const GeodeticPosition& to) const {
  const auto r = radii(from.latitude);
  return {(to.latitude - from.latitude) * (r.meridian + from.height), to.height - from.height,
          wrap_angle(to.longitude - from.longitude) * (r.transverse + from.height) * std::cos(from.latitude)};
}

}  // namespace landnav
