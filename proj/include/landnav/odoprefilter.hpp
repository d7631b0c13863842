#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "landnav/simulator.hpp"

namespace landnav {

/// Along-track speed/acceleration estimate of the odometer pre-filter.
struct SpeedEstimate {
  double t = 0.0;
  double speed = 0.0;         // m/s (pulses scaled by the nominal factor)
  double acceleration = 0.0;  // m/s^2
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  /// Set when the last increment was negative and only propagation ran.
  bool increment_rejected = false;
  /// Lateral and vertical velocity of the odometer point in the vehicle
  /// frame, observed against the nonholonomic rows. Zero for a vehicle that
  /// keeps to the constraint.
  Eigen::Vector2d constraint_velocity = Eigen::Vector2d::Zero();
};

struct PrefilterConfig {
  double accel_psd = 10.0;              // (m/s^2)^2/Hz
  double measurement_sigma_pulses = 0.5;
  double output_interval = 1.0;         // s
  double initial_speed_sigma = 30.0;    // m/s, wide so a moving start converges quickly
  double initial_accel_sigma = 3.0;     // m/s^2
};

/// Constant-acceleration Kalman step: propagate [speed, accel] over dt, then
/// fuse the travelled distance `pulse_increment / f_nominal`. A negative
/// increment (rollover or reverse motion) is flagged and not fused.
SpeedEstimate prefilter_step(const SpeedEstimate& state, double pulse_increment, double dt, double f_nominal,
                             const PrefilterConfig& config = {});

/// Streaming wrapper fed with cumulative pulse counts at the raw rate and
/// emitting estimates on a fixed output grid.
class OdometerPrefilter {
 public:
  OdometerPrefilter(double f_nominal, PrefilterConfig config = {});

  /// Returns the estimate stamped at the latest output epoch in (previous t, t].
  /// Epochs between raw samples get the state propagated without the new
  /// increment, so the output grid is exact for any raw rate.
  std::optional<SpeedEstimate> push(const OdometerReading& reading);

  const SpeedEstimate& current() const { return state_; }
  /// Count of negative increments (rollover or reverse motion) that were skipped.
  int rejected_increments() const { return rejected_; }

 private:
  double f_nominal_;
  PrefilterConfig config_;
  SpeedEstimate state_;
  std::optional<OdometerReading> last_;
  double next_output_ = 0.0;
  int rejected_ = 0;
};

/// Runs the pre-filter over a whole stream, returning the decimated output.
std::vector<SpeedEstimate> prefilter_stream(const std::vector<OdometerReading>& readings, double f_nominal,
                                            const PrefilterConfig& config = {});

}  // namespace landnav
