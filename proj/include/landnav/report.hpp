#pragma once

#include <optional>
#include <string>
#include <vector>

#include "landnav/csvio.hpp"
#include "landnav/estimator.hpp"

namespace landnav {

struct DriftEpoch {
  double t = 0.0;
  double horizontal = 0.0;  // m
  double height = 0.0;      // m, signed estimate minus truth
  double distance = 0.0;    // m travelled since the first reported epoch
  std::optional<double> horizontal_percent;  // only once distance > 100 m
  std::optional<double> height_percent;
  Vec3 attitude_deg = Vec3::Zero();  // N-U-E small-angle error; index 1 is heading
};

struct DriftReport {
  std::vector<DriftEpoch> epochs;

  const DriftEpoch& final_epoch() const;
  /// Largest |%D| among epochs with distance >= min_distance; nullopt if none.
  std::optional<double> max_horizontal_percent(double min_distance) const;
  std::optional<double> max_height_percent(double min_distance) const;
};

inline constexpr double kMinPercentDistance = 100.0;

/// Compares estimates with truth at matching timestamps. Distance is the
/// cumulative chord length of the truth positions.
DriftReport drift_report(const std::vector<NavState>& truth, const std::vector<NavState>& estimate,
                         const EarthModel& earth = EarthModel::wgs84());

std::vector<NavState> filter_states(const std::vector<FilterEpoch>& epochs);

/// Long-format metrics: horizontal, height, distance, percent and attitude
/// errors, plus calibration histories when epochs are given.
std::vector<MetricSample> report_metrics(const DriftReport& report, const std::vector<FilterEpoch>& epochs,
                                         double nominal_factor);

/// Summary table: final errors and %D, and calibration values with 1-sigma.
std::string format_summary(const std::string& title, const DriftReport* report, const FilterRun* run,
                           double nominal_factor);

}  // namespace landnav
