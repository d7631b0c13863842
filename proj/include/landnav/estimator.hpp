#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "landnav/measurement.hpp"
#include "landnav/odoprefilter.hpp"
#include "landnav/strapdown.hpp"

namespace landnav {

using TransitionMatrix = Eigen::Matrix<double, es::kSize, es::kSize>;

/// EKF tuning. Sigmas are 1-sigma; PSDs are per second (value^2/s).
struct FilterConfig {
  double attitude_level_sigma = 0.01 * kDeg;
  double attitude_heading_sigma = 0.1 * kDeg;
  double velocity_sigma = 0.02;  // m/s
  double position_sigma = 0.1;   // m
  double gyro_bias_sigma = 0.02 * kDeg / 3600.0;
  double accel_bias_sigma = 100e-6 * 9.80665;
  double angle_sigma = 2.0 * kDeg;  // yaw and pitch
  double lever_sigma = 1.0;         // m
  double factor_sigma = 0.01;       // fraction of the nominal factor

  double gyro_noise_psd = std::pow(0.002 * kDeg / 60.0, 2);
  double accel_noise_psd = std::pow(5e-6 * 9.80665, 2);
  double gyro_bias_psd = std::pow(1e-4 * kDeg / 3600.0, 2) / 3600.0;
  double accel_bias_psd = std::pow(0.5e-6 * 9.80665, 2) / 3600.0;
  double angle_psd = std::pow(1e-4 * kDeg, 2) / 3600.0;
  double lever_psd = std::pow(1e-4, 2) / 3600.0;
  double factor_psd = std::pow(3e-4, 2) / 3600.0;  // fractional, follows slow scale-factor drift

  double odometer_sigma = 0.05;  // m/s
  double nhc_sigma = 0.05;       // m/s
  double zupt_sigma = 0.01;      // m/s
  double gate = 3.5;             // Mahalanobis distance; <= 0 disables gating

  double nominal_factor = 8.6;  // pulses/m used to turn pre-filter speeds back into pulses/s
  double covariance_interval = 0.1;
  double stationary_speed = 0.02;  // m/s, below which ZUPTs are applied
  bool use_zupt = true;
  bool estimate_biases = true;
  bool estimate_calibration = true;
  /// Keep the position coupling (earth rate, transport rate, gravity) in F.
  bool position_coupling = true;

  void validate() const;
};

/// Continuous-time error dynamics F for errors defined as estimate minus truth.
/// `f_b` is the specific force in the body frame.
Covariance error_dynamics(const EarthModel& earth, const NavState& nav, const Vec3& f_b,
                          bool position_coupling = true);

/// exp(F dt) by Taylor series, summed until the terms stop contributing.
TransitionMatrix transition_matrix(const Covariance& F, double dt);

/// Diagonal continuous process-noise density mapped into the error state.
Covariance process_noise_density(const FilterConfig& config);

Covariance initial_covariance(const FilterConfig& config);

struct PredictResult {
  Covariance P;
  bool repaired = false;  // symmetrization or eigenvalue floor was needed
};

/// P <- Phi P Phi' + Qd with trapezoidal Qd. Unestimated blocks stay zero.
PredictResult ekf_predict(const EarthModel& earth, const NavState& nav, const Vec3& f_b, const Covariance& P,
                          const FilterConfig& config, double dt);

struct UpdateResult {
  ErrorVector correction = ErrorVector::Zero();
  Covariance P;
  double mahalanobis = 0.0;
  bool accepted = false;
};

/// Joseph-form update. `innovation` is predicted minus measured; the returned
/// correction is the estimated error (subtract it from the estimate).
UpdateResult ekf_update(const Covariance& P, const Eigen::VectorXd& innovation, const Eigen::MatrixXd& H,
                        const Eigen::MatrixXd& R, double gate);

/// Analytic alignment from averaged rate and specific force (body frame) at a
/// stationary site. Fails near the poles where the triad degenerates.
Mat3 static_coarse_align(const Vec3& omega_ib, const Vec3& f_b, const GeodeticPosition& p,
                         const EarthModel& earth = EarthModel::wgs84());

struct StationaryThresholds {
  double gyro_std = 2e-4;   // rad/s, per-sample rate scatter
  double accel_std = 0.05;  // m/s^2
};

/// Window statistics of an IMU span.
struct ImuAverage {
  Vec3 omega_ib = Vec3::Zero();
  Vec3 f_b = Vec3::Zero();
  double gyro_std = 0.0;
  double accel_std = 0.0;
  double duration = 0.0;
};

ImuAverage average_imu(const std::vector<ImuIncrement>& imu, std::size_t begin, std::size_t end);

struct Biases {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

/// Filter output at one measurement epoch.
struct FilterEpoch {
  double t = 0.0;
  NavState nav;
  Biases biases;
  CalibrationSet calibration;
  ErrorVector sigma = ErrorVector::Zero();
  bool zupt = false;
};

struct FilterDiagnostics {
  int covariance_repairs = 0;
  int odometer_rejections = 0;
  int nhc_rejections = 0;
  int updates = 0;
};

/// Closed-loop error-state filter around a strapdown mechanization.
class NavigationFilter {
 public:
  NavigationFilter(EarthModel earth, FilterConfig config, NavState nav, Biases biases, CalibrationSet calibration,
                   Covariance P);

  /// Mechanizes one update interval with bias-compensated increments.
  void propagate(const ImuIncrement& first, const ImuIncrement& second);
  /// Odometer, nonholonomic and (when stationary) zero-velocity updates.
  void update(const SpeedEstimate& speed);
  /// Brings the covariance up to the current navigation time.
  void flush_covariance();

  const NavState& nav() const { return nav_; }
  const Biases& biases() const { return biases_; }
  const CalibrationSet& calibration() const { return calib_; }
  const Covariance& covariance() const { return P_; }
  const FilterConfig& config() const { return config_; }
  const FilterDiagnostics& diagnostics() const { return diag_; }
  const std::vector<FilterEpoch>& epochs() const { return epochs_; }
  const Vec3& omega_ib() const { return omega_ib_; }

 private:
  bool apply(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R);
  void feedback(const ErrorVector& dx);

  EarthModel earth_;
  FilterConfig config_;
  NavState nav_;
  Biases biases_;
  CalibrationSet calib_;
  Covariance P_;
  Vec3 omega_ib_ = Vec3::Zero();
  Vec3 pending_dv_ = Vec3::Zero();
  double pending_time_ = 0.0;
  FilterDiagnostics diag_;
  std::vector<FilterEpoch> epochs_;
};

/// Feeds IMU pairs starting at `first` and speed estimates on their epochs.
void run_filter(NavigationFilter& filter, const std::vector<ImuIncrement>& imu,
                const std::vector<SpeedEstimate>& speeds, std::size_t first = 0);

struct FilterRun {
  std::vector<FilterEpoch> epochs;
  NavState final_state;
  Biases biases;
  CalibrationSet calibration;
  Covariance covariance;
  FilterDiagnostics diagnostics;
};

FilterRun collect(const NavigationFilter& filter);

struct ProblemOneConfig {
  FilterConfig filter;
  CalibrationSet initial_calibration{0.0, 0.0, Vec3::Zero(), 8.6};
  double alignment_window = 300.0;  // s, upper bound on the static averaging span
  double min_alignment_window = 10.0;
  StationaryThresholds stationary;
  EarthModel earth = EarthModel::wgs84();
};

struct ProblemOneResult {
  FilterRun run;
  Mat3 coarse_attitude = Mat3::Identity();
  double alignment_end = 0.0;
};

/// Static coarse alignment over the leading stationary window, then the EKF
/// from the first sample at the known position with zero velocity.
ProblemOneResult run_problem_one(const std::vector<ImuIncrement>& imu, const std::vector<SpeedEstimate>& speeds,
                                 const GeodeticPosition& p0, const ProblemOneConfig& config);

/// Throws unless timestamps strictly increase.
void check_monotonic(const std::vector<ImuIncrement>& imu);
void check_monotonic(const std::vector<SpeedEstimate>& speeds);

}  // namespace landnav
