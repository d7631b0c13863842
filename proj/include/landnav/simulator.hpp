#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "landnav/earth.hpp"
#include "landnav/strapdown.hpp"

namespace landnav {

enum class SegmentKind { Straight, Arc, SpeedRamp, Pause };

/// Piece of a land-vehicle path. Turn rate, grade and bank follow a
/// raised-cosine profile inside the segment so that body rates stay
/// continuous across joins; `turn_rate` is the segment-mean heading rate
/// (positive turns right), `target_speed` the end speed of a ramp.
struct TrajectorySegment {
  SegmentKind kind = SegmentKind::Straight;
  double duration = 0.0;      // s
  double target_speed = 0.0;  // m/s, SpeedRamp only
  double turn_rate = 0.0;     // rad/s, Arc only
  double grade_change = 0.0;  // rad
  double bank_change = 0.0;   // rad
};

/// Vehicle attitude angles: heading from north towards east, grade (nose up)
/// and bank (right side down).
struct VehicleAngles {
  double heading = 0.0;
  double grade = 0.0;
  double bank = 0.0;
};

/// How the IMU sits on the vehicle: C_b^a from the y-z-x sequence and the
/// lever arm of the odometer reference point, in body axes.
struct VehicleMount {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  Vec3 lever_arm = Vec3::Zero();

  Mat3 C_ba() const { return misalignment_dcm(yaw, pitch, roll); }
};

/// Body pitch and roll sway on the suspension. Amplitudes fade in with speed
/// as s^2 / (s^2 + reference_speed^2), so the vehicle is still when stopped.
struct Suspension {
  double pitch_amplitude = 0.0;  // rad
  double pitch_frequency = 1.3;  // Hz
  double roll_amplitude = 0.0;   // rad
  double roll_frequency = 1.1;   // Hz
  double reference_speed = 5.0;  // m/s
};

/// Analytic speed/attitude history built from a segment list.
class VehicleProfile {
 public:
  struct Sample {
    double speed = 0.0;
    double speed_rate = 0.0;
    VehicleAngles angles;
    VehicleAngles rates;
  };

  VehicleProfile(std::vector<TrajectorySegment> segments, VehicleAngles initial, double t0,
                 Suspension suspension = {});

  Sample at(double t) const;
  double start_time() const { return t0_; }
  double end_time() const { return t0_ + duration_; }
  /// Sum of per-segment path lengths.
  double path_length() const { return path_length_; }
  const std::vector<TrajectorySegment>& segments() const { return segments_; }

 private:
  struct Piece {
    TrajectorySegment seg;
    double t_start;
    double speed0;
    VehicleAngles angles0;
  };
  std::vector<TrajectorySegment> segments_;
  std::vector<Piece> pieces_;
  Suspension suspension_;
  double t0_;
  double duration_ = 0.0;
  double path_length_ = 0.0;
};

struct TruthConfig {
  EarthModel earth = EarthModel::wgs84();
  GeodeticPosition start;
  VehicleAngles initial;
  VehicleMount mount;
  Suspension suspension;
  double t0 = 0.0;
  double step = 0.005;  // IMU sub-interval, s
};

/// Full kinematic state of the IMU at one instant.
struct Kinematics {
  Mat3 C_bn;
  Vec3 v;           // IMU velocity, n-frame
  Vec3 v_dot;
  Vec3 omega_ib_b;  // true body rate
  Vec3 f_b;         // true specific force
  Vec3 p_dot;       // geodetic rate
  double speed;     // forward speed of the odometer point
};

struct TruthSample {
  NavState nav;
  Vec3 omega_ib_b;
  Vec3 f_b;
  double speed = 0.0;
  double distance = 0.0;  // odometer-point path length since start
};

/// Ground-truth trajectory sampled at the IMU sub-interval plus the analytic
/// model behind it, so sensors can be integrated between samples.
class TruthTrajectory;
TruthTrajectory generate_truth(const std::vector<TrajectorySegment>& segments, const TruthConfig& config);

class TruthTrajectory {
 public:
  TruthTrajectory(VehicleProfile profile, TruthConfig config);

  const std::vector<TruthSample>& samples() const { return samples_; }
  const TruthConfig& config() const { return config_; }
  const VehicleProfile& profile() const { return profile_; }
  double step() const { return config_.step; }

  Kinematics kinematics(double t, const GeodeticPosition& p) const;
  /// Cubic Hermite interpolation between samples.
  GeodeticPosition position_at(double t) const;
  /// Sample nearest to t.
  const TruthSample& sample_at(double t) const;

 private:
  friend TruthTrajectory generate_truth(const std::vector<TrajectorySegment>&, const TruthConfig&);
  Vec3 nav_rate_of_vehicle(double t) const;  // omega_na^n

  VehicleProfile profile_;
  TruthConfig config_;
  std::vector<TruthSample> samples_;
  std::vector<Vec3> p_dot_;
};

/// Rejects empty lists, non-positive durations and ill-posed joins (pause at
/// speed, turning at standstill, negative ramp targets).
TruthTrajectory generate_truth(const std::vector<TrajectorySegment>& segments, const TruthConfig& config);

struct ImuErrorModel {
  Vec3 gyro_bias = Vec3::Zero();   // rad/s
  Vec3 accel_bias = Vec3::Zero();  // m/s^2
  double angle_random_walk = 0.0;     // rad/sqrt(s)
  double velocity_random_walk = 0.0;  // m/s/sqrt(s)
  std::uint64_t seed = 1;

  /// Navigation-grade ring-laser-gyro defaults.
  static ImuErrorModel navigation_grade(std::uint64_t seed = 1);
};

/// Exact integrals of the true rate and specific force over each sub-interval.
std::vector<ImuIncrement> ideal_imu_increments(const TruthTrajectory& truth);

/// Adds bias and white noise at sub-interval granularity.
std::vector<ImuIncrement> corrupt_imu(const std::vector<ImuIncrement>& ideal, const ImuErrorModel& model);

std::vector<ImuIncrement> synthesize_imu(const TruthTrajectory& truth, const ImuErrorModel& model);

struct OdometerReading {
  double t = 0.0;
  double pulses = 0.0;  // cumulative
};

struct SlipEvent {
  double t_start = 0.0;
  double t_end = 0.0;
  double ratio = 0.0;  // multiplicative speed error
};

struct OdometerModel {
  double scale_factor = 8.6;             // pulses/m, sign allowed
  double scale_drift_per_hour = -5e-4;   // fractional change per hour
  bool quantize = false;
  VehicleMount mount;
  std::vector<SlipEvent> slips;
  double output_interval = 0.01;         // s, a multiple of two IMU sub-intervals

  double factor_at(double t, double t0) const;
};

/// Evaluates y_odo = f e1^T C_b^a (C_n^b v + omega_eb^b x l^b) for a truth sample.
double odometer_rate(const TruthSample& s, const EarthModel& earth, const VehicleMount& mount, double factor);

/// Cumulative pulse stream, Simpson-integrated over truth sub-intervals.
std::vector<OdometerReading> synthesize_odometer(const TruthTrajectory& truth, const OdometerModel& model);

}  // namespace landnav
