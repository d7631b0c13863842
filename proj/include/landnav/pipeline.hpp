#pragma once

#include <optional>
#include <string>
#include <vector>

#include "landnav/report.hpp"
#include "landnav/scenario.hpp"

namespace landnav {

/// Reference drive: a 300 s stationary start followed by laps of speed ramps,
/// turns, grade and bank changes, with mild suspension motion.
Scenario default_scenario();

struct SimulatedData {
  TruthTrajectory truth;
  std::vector<ImuIncrement> imu;
  std::vector<OdometerReading> odometer;
};

/// Deterministic for a given scenario and seed. `factor_ratio` scales the
/// true odometer factor (used for the second cross-check dataset).
SimulatedData simulate(const Scenario& scenario, std::uint64_t seed, double factor_ratio = 1.0);

/// Truth states at multiples of the scenario's truth output interval.
std::vector<NavState> decimated_truth(const TruthTrajectory& truth, double interval);

std::vector<SpeedEstimate> prefilter_speeds(const Scenario& scenario, const std::vector<OdometerReading>& odometer);

/// Problem I: static coarse alignment then joint navigation and calibration.
ProblemOneResult calibrate(const Scenario& scenario, const std::vector<ImuIncrement>& imu,
                           const std::vector<SpeedEstimate>& speeds, const GeodeticPosition& p0);

/// Navigation with a fixed calibration set.
ProblemOneResult navigate(const Scenario& scenario, const std::vector<ImuIncrement>& imu,
                          const std::vector<SpeedEstimate>& speeds, const GeodeticPosition& p0,
                          const CalibrationSet& calibration);

/// Problem II: in-motion alignment starting at `t_start`, from the known
/// position `p_start` at that time, then filtering.
ProblemTwoResult align(const Scenario& scenario, const std::vector<ImuIncrement>& imu,
                       const std::vector<SpeedEstimate>& speeds, double t_start, const GeodeticPosition& p_start,
                       const CalibrationSet& calibration);

struct CrosscheckInput {
  std::vector<ImuIncrement> imu;
  std::vector<SpeedEstimate> speeds;
  std::vector<NavState> truth;
  CalibrationSet calibration;
};

/// percent[i][j]: final horizontal %D when calibration i navigates dataset j.
struct CrosscheckMatrix {
  double percent[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  bool degraded(double ratio = 2.0) const;
};

CrosscheckMatrix crosscheck(const Scenario& scenario, const CrosscheckInput& a, const CrosscheckInput& b);

std::string format_crosscheck(const CrosscheckMatrix& m);

/// Threshold verdicts for `--check`.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioOutcome {
  std::string summary;
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Simulates every seed, runs the processing selected by the scenario mode
/// and writes per-seed outputs below the scenario's output directory.
ScenarioOutcome run_scenario(const Scenario& scenario, bool save_sensor_data);

}  // namespace landnav
