#pragma once

#include <cstddef>
#include <vector>

#include "landnav/estimator.hpp"

namespace landnav {

/// C_{b(t)}^{b(0)} advanced by one two-sample update.
Mat3 accumulate_body_attitude(const Mat3& C_bb0, const Vec3& dth1, const Vec3& dth2);

/// C_{n(t)}^{n(0)} advanced by the navigation-frame rotation omega_in^n T.
Mat3 accumulate_nav_attitude(const Mat3& C_nn0, const Vec3& omega_in, double T);

/// One step of the gravity-side integral: C_{n(t_k)}^{n(0)} (T I + T^2/2 omega_in x) g^n.
Vec3 gravity_integral_step(const Mat3& C_nn0, const Vec3& omega_in, const Vec3& g, double T);

/// One step of the force-side integral: C_{b(t_k)}^{b(0)} times the sculling-corrected increment.
Vec3 force_integral_step(const Mat3& C_bb0, const Vec3& dth1, const Vec3& dth2, const Vec3& dv1, const Vec3& dv2);

/// Running integrals of the in-motion alignment, all on one clock.
struct AlignmentAccumulator {
  double elapsed = 0.0;
  Mat3 C_bb0 = Mat3::Identity();  // C_{b(t)}^{b(0)}
  Mat3 C_nn0 = Mat3::Identity();  // C_{n(t)}^{n(0)}
  Vec3 alpha = Vec3::Zero();      // integral of C_{b(t)}^{b(0)} f^b
  Vec3 beta = Vec3::Zero();       // integral of C_{n(t)}^{n(0)} g^n
  Vec3 coriolis = Vec3::Zero();   // integral of C_{n(t)}^{n(0)} (omega_ie^n x v^n)

  /// `coriolis_accel` is omega_ie^n x v^n over the step; zero drops the term.
  void step(const ImuIncrement& first, const ImuIncrement& second, double T, const Vec3& omega_in, const Vec3& g,
            const Vec3& coriolis_accel = Vec3::Zero());
};

/// a_k in the b(0) frame and b_k in the n(0) frame, with a_k = C_n^b(0) b_k.
struct ObservationPair {
  double t = 0.0;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
};

ObservationPair alignment_observation(const AlignmentAccumulator& acc, const Vec3& y, const Vec3& y0,
                                      const Vec3& omega_ib, const Vec3& omega_ib0, const Vec3& lever_arm);

/// Body-frame odometer-point velocity (y_odo / f) [cos(th)cos(psi), sin(th), -cos(th)sin(psi)].
Vec3 body_velocity(double y_odo, const CalibrationSet& calibration);

struct AttitudeSolution {
  Mat3 C_bn0 = Mat3::Identity();
  double min_eigenvalue = 0.0;
  double eigen_gap = 0.0;   // second-smallest minus smallest eigenvalue
  double span_angle = 0.0;  // rad, spread of the b_k directions
  bool weak = false;        // eigenvalue gap small relative to the spectrum
};

/// C_b^n(0) minimizing sum |a_k - C_n^b(0) b_k|^2 through the minimum
/// eigenvector of the 4x4 quaternion matrix. Throws when the b_k directions
/// do not span more than `min_span_angle`.
AttitudeSolution solve_initial_attitude(const std::vector<ObservationPair>& pairs, double min_span_angle = 1e-4);

/// v^n = C_b^n (y - omega_ib x l).
Vec3 initial_velocity(const Mat3& C_bn, const Vec3& y, const Vec3& omega_ib, const Vec3& lever_arm);

/// One update step of the alignment window, kept for position restoration.
struct AlignmentRecord {
  double t = 0.0;
  Mat3 C_bb0 = Mat3::Identity();
  Mat3 C_nn0 = Mat3::Identity();
  Vec3 y = Vec3::Zero();         // body-frame odometer-point velocity
  Vec3 omega_ib = Vec3::Zero();
};

/// IMU position along the history: each step integrates the odometer-point
/// velocity in local-level metres, adds the change of the lever-arm offset
/// and converts through the curvature matrix at the running position.
std::vector<GeodeticPosition> dead_reckon(const EarthModel& earth, const GeodeticPosition& p0, const Mat3& C_bn0,
                                          const std::vector<AlignmentRecord>& history, const Vec3& lever_arm);

/// Position at the last history entry.
GeodeticPosition restore_position(const EarthModel& earth, const GeodeticPosition& p0, const Mat3& C_bn0,
                                  const std::vector<AlignmentRecord>& history, const Vec3& lever_arm);

struct AlignmentConfig {
  double window = 300.0;         // s
  double settle = 2.0;           // s skipped so the speed pre-filter has converged
  double nominal_factor = 8.6;   // pulses/m used by the pre-filter
  int refinement_passes = 2;     // extra passes with transport rate and Coriolis from the dead-reckoned path
  double min_span_angle = 1e-4;  // rad
  EarthModel earth = EarthModel::wgs84();
};

/// Attitude solution after each whole second of the window.
struct AlignmentEpoch {
  double t = 0.0;
  Mat3 C_bn0 = Mat3::Identity();
  Mat3 C_bn = Mat3::Identity();  // attitude at t implied by the solution
};

struct AlignmentResult {
  double t_start = 0.0;
  double t_end = 0.0;
  GeodeticPosition p_start;
  AttitudeSolution solution;
  NavState state;  // attitude, velocity and restored position at t_end
  std::vector<AlignmentEpoch> epochs;
  std::vector<AlignmentRecord> history;
  std::size_t next_index = 0;  // first IMU increment after the window
};

/// Free-running alignment starting at the first speed epoch after the settle
/// time, at the known position p0.
AlignmentResult align_in_motion(const std::vector<ImuIncrement>& imu, const std::vector<SpeedEstimate>& speeds,
                                const CalibrationSet& calibration, const GeodeticPosition& p0,
                                const AlignmentConfig& config);

struct ProblemTwoConfig {
  AlignmentConfig alignment;
  FilterConfig filter;  // attitude sigmas are widened for the handoff
  double handoff_level_sigma = 0.05 * kDeg;
  double handoff_heading_sigma = 1.5 * kDeg;
  double handoff_velocity_sigma = 0.1;
  double handoff_position_sigma = 30.0;
};

struct ProblemTwoResult {
  AlignmentResult alignment;
  FilterRun run;
};

ProblemTwoResult run_problem_two(const std::vector<ImuIncrement>& imu, const std::vector<SpeedEstimate>& speeds,
                                 const CalibrationSet& calibration, const GeodeticPosition& p0,
                                 const ProblemTwoConfig& config);

}  // namespace landnav
