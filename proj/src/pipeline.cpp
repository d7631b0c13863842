#include "landnav/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "landnav/error.hpp"

namespace landnav {

namespace {

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string seed_dir(const Scenario& scenario, std::uint64_t seed) {
  return (std::filesystem::path(scenario.output) / ("seed_" + std::to_string(seed))).string();
}

template <class Writer, class Data>
void write_csv(const std::string& path, Writer writer, const Data& data) {
  std::ostringstream out;
  writer(out, data);
  write_text_file(path, out.str());
}

// Runs fn(i) for i in [0, n) on a small pool; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>({n, 4, std::thread::hardware_concurrency()}));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct SeedOutcome {
  std::string summary;
  // problem1
  double horizontal_percent = 0.0;
  double height_percent = 0.0;
  bool calibration_ok = false;
  std::string calibration_detail;
  // problem2
  bool alignment_ok = false;
  bool restoration_ok = false;
  std::string alignment_detail;
  // crosscheck
  bool degraded = false;
  std::string crosscheck_detail;
};

constexpr double kDriftStartDistance = 2000.0;

void write_run_outputs(const std::string& dir, const std::vector<NavState>& truth, const FilterRun& run,
                       double nominal_factor, const std::string& title, std::string* summary, DriftReport* report_out) {
  write_csv(dir + "/trajectory.csv", write_trajectory_csv, filter_states(run.epochs));
  std::ostringstream cal;
  write_calibration_csv(cal, calibration_history(run.epochs), nominal_factor);
  write_text_file(dir + "/calibration.csv", cal.str());
  const DriftReport report = drift_report(truth, filter_states(run.epochs));
  write_csv(dir + "/metrics.csv", write_metrics_csv, report_metrics(report, run.epochs, nominal_factor));
  *summary = format_summary(title, &report, &run, nominal_factor);
  write_text_file(dir + "/report.txt", *summary);
  if (report_out) *report_out = report;
}

SeedOutcome run_seed(const Scenario& scenario, std::uint64_t seed, bool save_sensor_data) {
  const std::string dir = seed_dir(scenario, seed);
  std::filesystem::create_directories(dir);
  const double f_nom = scenario.problem1.filter.nominal_factor;
  SeedOutcome out;

  const SimulatedData data = simulate(scenario, seed);
  const std::vector<NavState> truth = decimated_truth(data.truth, scenario.truth_output_interval);
  write_csv(dir + "/truth.csv", write_trajectory_csv, truth);
  if (save_sensor_data) {
    write_csv(dir + "/imu.csv", write_imu_csv, data.imu);
    write_csv(dir + "/odometer.csv", write_odometer_csv, data.odometer);
  }
  const std::vector<SpeedEstimate> speeds = prefilter_speeds(scenario, data.odometer);
  const GeodeticPosition p0 = scenario.truth.start;
  const std::string title = scenario.name + " seed " + std::to_string(seed);

  if (scenario.mode == ScenarioMode::Problem1) {
    const ProblemOneResult r = calibrate(scenario, data.imu, speeds, p0);
    DriftReport report;
    write_run_outputs(dir, truth, r.run, f_nom, title, &out.summary, &report);
    out.horizontal_percent = report.max_horizontal_percent(kDriftStartDistance).value_or(std::nan(""));
    out.height_percent = report.max_height_percent(kDriftStartDistance).value_or(std::nan(""));
    const CalibrationSet& c = r.run.calibration;
    const double f_true = scenario.odometer.scale_factor * (1.0 + scenario.odometer.scale_drift_per_hour *
                                                                      (r.run.final_state.t - scenario.truth.t0) / 3600.0);
    const double f_rel = std::abs(c.factor / f_true - 1.0);
    const double angle = std::max(std::abs(c.yaw - scenario.truth.mount.yaw), std::abs(c.pitch - scenario.truth.mount.pitch));
    const double lever = (c.lever_arm - scenario.truth.mount.lever_arm).cwiseAbs().maxCoeff();
    out.calibration_ok = f_rel < 5e-4 && angle < 0.05 * kDeg && lever < 0.05;
    out.calibration_detail = format("f %.2e rel, angles %.4f deg, lever %.4f m", f_rel, angle / kDeg, lever);
  } else if (scenario.mode == ScenarioMode::Problem2) {
    const double t_start = scenario.alignment_start;
    const GeodeticPosition p_start = data.truth.position_at(t_start);
    // The [calibration] section carries the known calibration in this mode.
    const ProblemTwoResult r = align(scenario, data.imu, speeds, t_start, p_start, scenario.problem1.initial_calibration);
    write_run_outputs(dir, truth, r.run, f_nom, title, &out.summary, nullptr);
    const TruthSample& te = data.truth.sample_at(r.alignment.t_end);
    const Vec3 att = attitude_error(r.alignment.state.C_bn, te.nav.C_bn) / kDeg;
    const double level = std::max(std::abs(att.x()), std::abs(att.z()));
    const double window = te.distance - data.truth.sample_at(r.alignment.t_start).distance;
    const double restored = data.truth.config().earth.local_offset(te.nav.p, r.alignment.state.p).norm();
    out.alignment_ok = std::abs(att.y()) < 1.0 && level < 0.02;
    out.restoration_ok = window > 0.0 && restored < 0.005 * window;
    out.alignment_detail = format("heading %.4f deg, level %.4f deg, restoration %.2f m of %.0f m", att.y(), level,
                                  restored, window);
    out.summary += "alignment: " + out.alignment_detail + "\n";
  } else {
    const SimulatedData data_b = simulate(scenario, seed, scenario.crosscheck_factor_ratio);
    const std::vector<SpeedEstimate> speeds_b = prefilter_speeds(scenario, data_b.odometer);
    const ProblemOneResult ra = calibrate(scenario, data.imu, speeds, p0);
    const ProblemOneResult rb = calibrate(scenario, data_b.imu, speeds_b, p0);
    const CrosscheckInput a{data.imu, speeds, truth, ra.run.calibration};
    const CrosscheckInput b{data_b.imu, speeds_b, decimated_truth(data_b.truth, scenario.truth_output_interval),
                            rb.run.calibration};
    const CrosscheckMatrix m = crosscheck(scenario, a, b);
    out.degraded = m.degraded();
    out.summary = "== " + title + " ==\n" + format_crosscheck(m);
    out.crosscheck_detail = format("diag %.4f %.4f off %.4f %.4f", m.percent[0][0], m.percent[1][1], m.percent[0][1],
                                   m.percent[1][0]);
    write_text_file(dir + "/report.txt", out.summary);
  }
  return out;
}

}  // namespace

Scenario default_scenario() {
  Scenario s;
  s.name = "reference_drive";
  using S = SegmentKind;
  auto& segs = s.segments;
  segs.push_back({S::Pause, 300.0});
  auto ramp = [&](double v, double d) { segs.push_back({S::SpeedRamp, d, v, 0.0, 0.0, 0.0}); };
  auto straight = [&](double d, double grade, double bank) { segs.push_back({S::Straight, d, 0.0, 0.0, grade * kDeg, bank * kDeg}); };
  auto arc = [&](double deg, double d, double bank) { segs.push_back({S::Arc, d, 0.0, deg * kDeg / d, 0.0, bank * kDeg}); };
  for (int lap = 0; lap < 3; ++lap) {
    ramp(12, 30);
    straight(60, 2, 0);
    arc(90, 30, 1);
    straight(90, -2, -1);
    ramp(16, 20);
    arc(-90, 40, 0);
    straight(120, 1, 0);
    arc(60, 25, -1);
    straight(60, -1, 1);
    ramp(0, 30);
    segs.push_back({S::Pause, 20.0});
    ramp(10, 25);
    arc(-60, 30, 0);
    straight(80, 0, 0);
    ramp(0, 25);
    segs.push_back({S::Pause, 10.0});
  }
  s.truth.start = {116.0 * kDeg, 28.0 * kDeg, 50.0};
  s.truth.initial = {30.0 * kDeg, 0.0, 0.0};
  s.truth.mount.yaw = 0.5 * kDeg;
  s.truth.mount.pitch = 0.3 * kDeg;
  s.truth.mount.lever_arm = Vec3(1.0, 0.5, 0.3);
  s.truth.suspension.pitch_amplitude = 0.3 * kDeg;
  s.truth.suspension.roll_amplitude = 0.3 * kDeg;
  s.problem2.filter = s.problem1.filter;
  s.alignment_start = 320.0;
  return s;
}

SimulatedData simulate(const Scenario& scenario, std::uint64_t seed, double factor_ratio) {
  if (scenario.segments.empty()) throw input_error("scenario has no trajectory segments");
  if (!(factor_ratio > 0.0)) throw input_error("factor ratio must be positive");
  TruthTrajectory truth = generate_truth(scenario.segments, scenario.truth);
  ImuErrorModel imu_model = scenario.imu;
  imu_model.seed = seed;
  std::vector<ImuIncrement> imu = synthesize_imu(truth, imu_model);
  OdometerModel odo = scenario.odometer;
  odo.mount = scenario.truth.mount;
  odo.scale_factor *= factor_ratio;
  std::vector<OdometerReading> readings = synthesize_odometer(truth, odo);
  return {std::move(truth), std::move(imu), std::move(readings)};
}

std::vector<NavState> decimated_truth(const TruthTrajectory& truth, double interval) {
  if (!(interval > 0.0)) throw input_error("truth output interval must be positive");
  std::vector<NavState> out;
  const double t0 = truth.samples().front().nav.t;
  for (const TruthSample& s : truth.samples()) {
    const double k = (s.nav.t - t0) / interval;
    if (std::abs(k - std::round(k)) < 1e-6) out.push_back(s.nav);
  }
  return out;
}

std::vector<SpeedEstimate> prefilter_speeds(const Scenario& scenario, const std::vector<OdometerReading>& odometer) {
  return prefilter_stream(odometer, scenario.problem1.filter.nominal_factor, scenario.prefilter);
}

ProblemOneResult calibrate(const Scenario& scenario, const std::vector<ImuIncrement>& imu,
                           const std::vector<SpeedEstimate>& speeds, const GeodeticPosition& p0) {
  ProblemOneConfig config = scenario.problem1;
  config.earth = scenario.truth.earth;
  return run_problem_one(imu, speeds, p0, config);
}

ProblemOneResult navigate(const Scenario& scenario, const std::vector<ImuIncrement>& imu,
                          const std::vector<SpeedEstimate>& speeds, const GeodeticPosition& p0,
                          const CalibrationSet& calibration) {
  ProblemOneConfig config = scenario.problem1;
  config.earth = scenario.truth.earth;
  config.filter.estimate_calibration = false;
  config.initial_calibration = calibration;
  return run_problem_one(imu, speeds, p0, config);
}

ProblemTwoResult align(const Scenario& scenario, const std::vector<ImuIncrement>& imu,
                       const std::vector<SpeedEstimate>& speeds, double t_start, const GeodeticPosition& p_start,
                       const CalibrationSet& calibration) {
  ProblemTwoConfig config = scenario.problem2;
  config.alignment.earth = scenario.truth.earth;
  config.alignment.nominal_factor = config.filter.nominal_factor;
  // The aligner begins `settle` seconds after its first IMU increment.
  const double first = t_start - config.alignment.settle;
  const auto imu_begin = std::find_if(imu.begin(), imu.end(), [&](const ImuIncrement& s) { return s.t > first + 1e-9; });
  if (imu_begin == imu.end()) throw input_error("no IMU data after the alignment start");
  const std::vector<ImuIncrement> imu_slice(imu_begin, imu.end());
  const double t_imu0 = imu_slice.front().t - (imu_slice.size() > 1 ? imu_slice[1].t - imu_slice[0].t : 0.0);
  std::vector<SpeedEstimate> speed_slice;
  for (const SpeedEstimate& s : speeds)
    if (s.t >= t_imu0 - 1e-9) speed_slice.push_back(s);
  ProblemTwoResult r = run_problem_two(imu_slice, speed_slice, calibration, p_start, config);
  if (std::abs(r.alignment.t_start - t_start) > 1e-6)
    throw input_error(format("alignment started at %.3f s instead of %.3f s; choose a start on a speed epoch",
                             r.alignment.t_start, t_start));
  return r;
}

bool CrosscheckMatrix::degraded(double ratio) const {
  const double diag = std::max(percent[0][0], percent[1][1]);
  return percent[0][1] >= ratio * diag && percent[1][0] >= ratio * diag;
}

CrosscheckMatrix crosscheck(const Scenario& scenario, const CrosscheckInput& a, const CrosscheckInput& b) {
  const CrosscheckInput* data[2] = {&a, &b};
  CrosscheckMatrix m;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const CrosscheckInput& d = *data[j];
      if (d.truth.empty()) throw input_error("cross-check dataset has no truth");
      const ProblemOneResult r = navigate(scenario, d.imu, d.speeds, d.truth.front().p, data[i]->calibration);
      const DriftReport report = drift_report(d.truth, filter_states(r.run.epochs), scenario.truth.earth);
      const DriftEpoch& e = report.final_epoch();
      if (!e.horizontal_percent) throw input_error("cross-check dataset is shorter than 100 m");
      m.percent[i][j] = *e.horizontal_percent;
    }
  }
  return m;
}

std::string format_crosscheck(const CrosscheckMatrix& m) {
  std::string out = "final horizontal %D  (row: calibration, column: dataset)\n";
  out += "            data A      data B\n";
  out += format("calib A  %10.4f  %10.4f\n", m.percent[0][0], m.percent[0][1]);
  out += format("calib B  %10.4f  %10.4f\n", m.percent[1][0], m.percent[1][1]);
  return out;
}

bool ScenarioOutcome::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

ScenarioOutcome run_scenario(const Scenario& scenario, bool save_sensor_data) {
  if (scenario.seeds.empty()) throw input_error("scenario has no seeds");
  std::filesystem::create_directories(scenario.output);
  write_text_file((std::filesystem::path(scenario.output) / "scenario.ini").string(), write_scenario(scenario));

  std::vector<SeedOutcome> seeds(scenario.seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { seeds[i] = run_seed(scenario, scenario.seeds[i], save_sensor_data); });

  ScenarioOutcome out;
  for (const SeedOutcome& s : seeds) out.summary += s.summary;
  const double n = static_cast<double>(seeds.size());
  auto count = [&](bool SeedOutcome::*flag) {
    return static_cast<double>(std::count_if(seeds.begin(), seeds.end(), [&](const SeedOutcome& s) { return s.*flag; }));
  };

  if (scenario.mode == ScenarioMode::Problem1) {
    std::vector<double> h, v;
    for (const SeedOutcome& s : seeds) {
      h.push_back(s.horizontal_percent);
      v.push_back(s.height_percent);
    }
    const double mh = median(h), mv = median(v);
    out.checks.push_back({"horizontal drift", mh < 0.3, format("median max %%D after 2 km = %.4f (< 0.3)", mh)});
    out.checks.push_back({"height drift", mv < 0.2, format("median max %%D after 2 km = %.4f (< 0.2)", mv)});
    const double ok = count(&SeedOutcome::calibration_ok);
    out.checks.push_back({"calibration", ok == n, format("%.0f of %.0f seeds within bounds", ok, n) + "; first: " +
                                                      seeds.front().calibration_detail});
  } else if (scenario.mode == ScenarioMode::Problem2) {
    const double a = count(&SeedOutcome::alignment_ok), r = count(&SeedOutcome::restoration_ok);
    out.checks.push_back({"in-motion alignment", a >= 0.9 * n, format("%.0f of %.0f seeds", a, n)});
    out.checks.push_back({"position restoration", r >= 0.9 * n, format("%.0f of %.0f seeds", r, n)});
  } else {
    const double d = count(&SeedOutcome::degraded);
    out.checks.push_back({"cross-check degradation", d == n, format("%.0f of %.0f seeds; first: ", d, n) +
                                                                  seeds.front().crosscheck_detail});
  }
  std::string verdicts;
  for (const CheckResult& c : out.checks) verdicts += std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
  out.summary += verdicts;
  write_text_file((std::filesystem::path(scenario.output) / "summary.txt").string(), out.summary);
  return out;
}

}  // namespace landnav
