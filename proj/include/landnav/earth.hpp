#pragma once

#include "landnav/rotation.hpp"

namespace landnav {

/// Geodetic position ordered as longitude, latitude, height.
struct GeodeticPosition {
  double longitude = 0.0;  // rad, (-pi, pi]
  double latitude = 0.0;   // rad
  double height = 0.0;     // m
};

struct CurvatureRadii {
  double meridian;    // R_N
  double transverse;  // R_E
};

/// Reference ellipsoid, rotation rate and normal gravity. Everything is
/// expressed in the North-Up-East local-level frame, v^n = [vN vU vE].
struct EarthModel {
  double semi_major_axis = 6378137.0;
  double flattening = 1.0 / 298.257223563;
  double rotation_rate = 7.292115e-5;
  double gravity_equator = 9.7803253359;
  double gravity_pole = 9.8321849378;
  /// omega^2 a^2 b / GM, used by the free-air correction.
  double gravity_m = 0.00344978650684;
  /// 0 disables gravity (debug runs).
  double gravity_scale = 1.0;

  static EarthModel wgs84() { return {}; }
  /// Sphere of the given radius with latitude-independent gravity.
  static EarthModel spherical(double radius = 6371000.0, double g = 9.80665);

  double eccentricity_squared() const { return flattening * (2.0 - flattening); }

  CurvatureRadii radii(double latitude) const;

  /// Position rate matrix R_c, p_dot = R_c v^n. Throws near the poles.
  Mat3 curvature_matrix(const GeodeticPosition& p) const;

  /// omega_ie^n.
  Vec3 earth_rate(const GeodeticPosition& p) const;

  /// omega_en^n. Throws near the poles.
  Vec3 transport_rate(const GeodeticPosition& p, const Vec3& v) const;

  /// g^n (points down, i.e. negative Up component).
  Vec3 gravity(const GeodeticPosition& p) const;

  /// Magnitude of normal gravity at p.
  double gravity_magnitude(const GeodeticPosition& p) const;

  /// Converts a small N-U-E displacement in metres to a geodetic increment.
  GeodeticPosition displace(const GeodeticPosition& p, const Vec3& dn) const;

  /// N-U-E metres from `from` to `to`, linearised at `from`.
  Vec3 local_offset(const GeodeticPosition& from, const GeodeticPosition& to) const;
};

inline constexpr double kPoleCosineThreshold = 1e-6;

void check_away_from_pole(const GeodeticPosition& p);

}  // namespace landnav
