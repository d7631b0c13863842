#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "landnav/estimator.hpp"
#include "landnav/odoprefilter.hpp"
#include "landnav/simulator.hpp"
#include "landnav/strapdown.hpp"

namespace landnav {

// Writers print each double with enough digits that reading the file back
// reproduces the in-memory value bit for bit.

void write_imu_csv(std::ostream& out, const std::vector<ImuIncrement>& imu);
std::vector<ImuIncrement> read_imu_csv(std::istream& in);

void write_odometer_csv(std::ostream& out, const std::vector<OdometerReading>& readings);
std::vector<OdometerReading> read_odometer_csv(std::istream& in);

/// t,lon_rad,lat_rad,h_m,vn,vu,ve,q0,q1,q2,q3 with q the scalar-first C_b^n quaternion.
void write_trajectory_csv(std::ostream& out, const std::vector<NavState>& states);
std::vector<NavState> read_trajectory_csv(std::istream& in);

struct CalibrationRow {
  double t = 0.0;
  CalibrationSet calibration;
};

/// f_ppm_dev is the factor deviation from `nominal_factor` in parts per million.
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationRow>& rows, double nominal_factor);
std::vector<CalibrationRow> read_calibration_csv(std::istream& in, double nominal_factor);

void write_speed_csv(std::ostream& out, const std::vector<SpeedEstimate>& speeds);

struct MetricSample {
  std::string metric;
  double t = 0.0;
  double value = 0.0;
};

/// Long format `metric,t,value` for plotting tools.
void write_metrics_csv(std::ostream& out, const std::vector<MetricSample>& samples);
std::vector<MetricSample> read_metrics_csv(std::istream& in);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

std::vector<NavState> truth_states(const TruthTrajectory& truth);
std::vector<CalibrationRow> calibration_history(const std::vector<FilterEpoch>& epochs);

}  // namespace landnav
