#include "landnav/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "landnav/error.hpp"

namespace landnav {

namespace {

std::string line(const char* fmt, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

std::string line(const char* fmt, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

}  // namespace

const DriftEpoch& DriftReport::final_epoch() const {
  if (epochs.empty()) throw input_error("drift report is empty");
  return epochs.back();
}

std::optional<double> DriftReport::max_horizontal_percent(double min_distance) const {
  std::optional<double> out;
  for (const DriftEpoch& e : epochs)
    if (e.horizontal_percent && e.distance >= min_distance) out = std::max(out.value_or(0.0), *e.horizontal_percent);
  return out;
}

std::optional<double> DriftReport::max_height_percent(double min_distance) const {
  std::optional<double> out;
  for (const DriftEpoch& e : epochs)
    if (e.height_percent && e.distance >= min_distance) out = std::max(out.value_or(0.0), std::abs(*e.height_percent));
  return out;
}

DriftReport drift_report(const std::vector<NavState>& truth, const std::vector<NavState>& estimate,
                         const EarthModel& earth) {
  if (truth.empty()) throw input_error("truth trajectory is empty");
  std::vector<double> travelled(truth.size(), 0.0);
  for (std::size_t i = 1; i < truth.size(); ++i)
    travelled[i] = travelled[i - 1] + earth.local_offset(truth[i - 1].p, truth[i].p).norm();

  DriftReport report;
  double d0 = 0.0;
  const double tol = 1e-6;
  for (const NavState& est : estimate) {
    const auto it = std::lower_bound(truth.begin(), truth.end(), est.t - tol,
                                     [](const NavState& s, double t) { return s.t < t; });
    if (it == truth.end() || std::abs(it->t - est.t) > tol)
      throw input_error("no truth sample at t = " + std::to_string(est.t));
    const std::size_t k = static_cast<std::size_t>(it - truth.begin());
    if (report.epochs.empty()) d0 = travelled[k];

    DriftEpoch e;
    e.t = est.t;
    const Vec3 d = earth.local_offset(it->p, est.p);
    e.horizontal = std::hypot(d.x(), d.z());
    e.height = d.y();
    e.distance = travelled[k] - d0;
    if (e.distance > kMinPercentDistance) {
      e.horizontal_percent = 100.0 * e.horizontal / e.distance;
      e.height_percent = 100.0 * e.height / e.distance;
    }
    e.attitude_deg = attitude_error(est.C_bn, it->C_bn) / kDeg;
    report.epochs.push_back(e);
  }
  return report;
}

std::vector<NavState> filter_states(const std::vector<FilterEpoch>& epochs) {
  std::vector<NavState> out;
  out.reserve(epochs.size());
  for (const FilterEpoch& e : epochs) out.push_back(e.nav);
  return out;
}

std::vector<MetricSample> report_metrics(const DriftReport& report, const std::vector<FilterEpoch>& epochs,
                                         double nominal_factor) {
  std::vector<MetricSample> out;
  for (const DriftEpoch& e : report.epochs) {
    out.push_back({"horizontal_error_m", e.t, e.horizontal});
    out.push_back({"height_error_m", e.t, e.height});
    out.push_back({"distance_m", e.t, e.distance});
    if (e.horizontal_percent) out.push_back({"horizontal_percent_d", e.t, *e.horizontal_percent});
    if (e.height_percent) out.push_back({"height_percent_d", e.t, *e.height_percent});
    out.push_back({"attitude_error_north_deg", e.t, e.attitude_deg.x()});
    out.push_back({"attitude_error_up_deg", e.t, e.attitude_deg.y()});
    out.push_back({"attitude_error_east_deg", e.t, e.attitude_deg.z()});
  }
  for (const FilterEpoch& e : epochs) {
    out.push_back({"yaw_deg", e.t, e.calibration.yaw / kDeg});
    out.push_back({"pitch_deg", e.t, e.calibration.pitch / kDeg});
    out.push_back({"lever_x_m", e.t, e.calibration.lever_arm.x()});
    out.push_back({"lever_y_m", e.t, e.calibration.lever_arm.y()});
    out.push_back({"lever_z_m", e.t, e.calibration.lever_arm.z()});
    out.push_back({"factor_ppm_dev", e.t, (e.calibration.factor / nominal_factor - 1.0) * 1e6});
  }
  return out;
}

std::string format_summary(const std::string& title, const DriftReport* report, const FilterRun* run,
                           double nominal_factor) {
  std::string out = "== " + title + " ==\n";
  if (report && !report->epochs.empty()) {
    const DriftEpoch& e = report->final_epoch();
    out += line("distance travelled      %12.1f m\n", e.distance);
    out += line("final horizontal error  %12.3f m\n", e.horizontal);
    out += line("final height error      %12.3f m\n", e.height);
    if (e.horizontal_percent) {
      out += line("final horizontal %%D     %12.4f\n", *e.horizontal_percent);
      out += line("final height %%D         %12.4f\n", *e.height_percent);
    } else {
      out += "final %D                undefined (distance <= 100 m)\n";
    }
    out += line("final heading error     %12.4f deg\n", e.attitude_deg.y());
    out += line("final level error       %12.4f deg\n", std::hypot(e.attitude_deg.x(), e.attitude_deg.z()));
  }
  if (run) {
    const CalibrationSet& c = run->calibration;
    const ErrorVector sigma = run->covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    out += line("yaw                     %12.5f +- %.5f deg\n", c.yaw / kDeg, sigma(es::kYaw) / kDeg);
    out += line("pitch                   %12.5f +- %.5f deg\n", c.pitch / kDeg, sigma(es::kPitch) / kDeg);
    out += line("lever x                 %12.4f +- %.4f m\n", c.lever_arm.x(), sigma(es::kLever));
    out += line("lever y                 %12.4f +- %.4f m\n", c.lever_arm.y(), sigma(es::kLever + 1));
    out += line("lever z                 %12.4f +- %.4f m\n", c.lever_arm.z(), sigma(es::kLever + 2));
    out += line("factor                  %12.6f +- %.6f pulses/m\n", c.factor, sigma(es::kFactor));
    out += line("factor deviation        %12.1f +- %.1f ppm\n", (c.factor / nominal_factor - 1.0) * 1e6,
                sigma(es::kFactor) / std::abs(nominal_factor) * 1e6);
    out += line("odometer rejections     %12.0f\n", run->diagnostics.odometer_rejections);
    out += line("covariance repairs      %12.0f\n", run->diagnostics.covariance_repairs);
  }
  return out;
}

}  // namespace landnav
