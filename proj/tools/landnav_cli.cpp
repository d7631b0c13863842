// landnav: simulate, calibrate, align, navigate and cross-check from the command line.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "landnav/error.hpp"
#include "landnav/pipeline.hpp"

using namespace landnav;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCheck = 4;

struct DataFiles {
  std::string config;
  std::string imu;
  std::string odometer;
  std::string truth;
  std::string out = ".";
  std::vector<double> position;  // lon, lat (deg), height (m)
  bool check = false;
};

void add_data_options(CLI::App* cmd, DataFiles& files) {
  cmd->add_option("--config", files.config, "scenario file supplying filter and pre-filter settings");
  cmd->add_option("--imu", files.imu, "IMU CSV")->required();
  cmd->add_option("--odometer", files.odometer, "odometer CSV")->required();
  cmd->add_option("--truth", files.truth, "truth CSV for the drift report and the initial position");
  cmd->add_option("--position", files.position, "initial lon_deg lat_deg h_m when no truth is given")->expected(3);
  cmd->add_option("--out", files.out, "output directory");
  cmd->add_flag("--check", files.check, "exit 4 when drift exceeds 0.3 %D horizontal or 0.2 %D height after 2 km");
}

Scenario config_of(const DataFiles& files) {
  return files.config.empty() ? default_scenario() : load_scenario(files.config);
}

std::vector<NavState> load_truth(const DataFiles& files) {
  if (files.truth.empty()) return {};
  std::istringstream in(read_text_file(files.truth));
  return read_trajectory_csv(in);
}

GeodeticPosition position_at(const DataFiles& files, const std::vector<NavState>& truth, double t) {
  if (files.position.size() == 3) return {files.position[0] * kDeg, files.position[1] * kDeg, files.position[2]};
  for (const NavState& s : truth)
    if (std::abs(s.t - t) < 1e-6) return s.p;
  throw input_error("initial position unknown: give --position or a truth CSV containing t = " + std::to_string(t));
}

CalibrationSet last_calibration(const std::string& path, double nominal_factor) {
  std::istringstream in(read_text_file(path));
  const auto rows = read_calibration_csv(in, nominal_factor);
  if (rows.empty()) throw input_error("calibration CSV '" + path + "' has no rows");
  return rows.back().calibration;
}

std::vector<ImuIncrement> load_imu(const std::string& path) {
  std::istringstream in(read_text_file(path));
  return read_imu_csv(in);
}

std::vector<OdometerReading> load_odometer(const std::string& path) {
  std::istringstream in(read_text_file(path));
  return read_odometer_csv(in);
}

// Writes outputs for a filter run and returns the drift verdict for --check.
bool emit_run(const DataFiles& files, const std::vector<NavState>& truth, const FilterRun& run, double nominal_factor,
              const std::string& title) {
  std::filesystem::create_directories(files.out);
  const std::string dir = files.out + "/";
  std::ostringstream traj, cal;
  write_trajectory_csv(traj, filter_states(run.epochs));
  write_text_file(dir + "trajectory.csv", traj.str());
  write_calibration_csv(cal, calibration_history(run.epochs), nominal_factor);
  write_text_file(dir + "calibration.csv", cal.str());
  std::optional<DriftReport> report;
  if (!truth.empty()) {
    report = drift_report(truth, filter_states(run.epochs));
    std::ostringstream metrics;
    write_metrics_csv(metrics, report_metrics(*report, run.epochs, nominal_factor));
    write_text_file(dir + "metrics.csv", metrics.str());
  }
  const std::string summary = format_summary(title, report ? &*report : nullptr, &run, nominal_factor);
  write_text_file(dir + "report.txt", summary);
  std::cout << summary;
  if (!files.check) return true;
  if (!report) throw input_error("--check needs --truth");
  // Short drives never pass 2 km; they are judged over every epoch with %D.
  const double from = report->final_epoch().distance > 2000.0 ? 2000.0 : kMinPercentDistance;
  const double h = report->max_horizontal_percent(from).value_or(0.0);
  const double v = std::abs(report->max_height_percent(from).value_or(0.0));
  std::printf("%s horizontal drift %.4f %%D (< 0.3)\n%s height drift %.4f %%D (< 0.2)\n", h < 0.3 ? "PASS" : "FAIL", h,
              v < 0.2 ? "PASS" : "FAIL", v);
  return h < 0.3 && v < 0.2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Land-vehicle inertial/odometer navigation, calibration and alignment"};
  app.require_subcommand(1);

  std::string template_out;
  auto* cmd_template = app.add_subcommand("template", "write the reference scenario file");
  cmd_template->add_option("--out", template_out, "destination (stdout when omitted)");

  std::string sim_scenario, sim_out = ".";
  std::uint64_t sim_seed = 0;
  double sim_ratio = 1.0;
  auto* cmd_sim = app.add_subcommand("simulate", "write IMU, odometer and truth CSVs");
  cmd_sim->add_option("scenario", sim_scenario, "scenario file")->required();
  cmd_sim->add_option("--seed", sim_seed, "noise seed (first scenario seed when omitted)");
  cmd_sim->add_option("--factor-ratio", sim_ratio, "scale applied to the true odometer factor");
  cmd_sim->add_option("--out", sim_out, "output directory");

  std::string run_scenario_path;
  bool run_save = false, run_check = false;
  auto* cmd_run = app.add_subcommand("run", "simulate every seed and process it per the scenario mode");
  cmd_run->add_option("scenario", run_scenario_path, "scenario file")->required();
  cmd_run->add_flag("--save-data", run_save, "also write IMU and odometer CSVs");
  cmd_run->add_flag("--check", run_check, "exit 4 when an acceptance threshold is breached");

  DataFiles cal_files;
  auto* cmd_cal = app.add_subcommand("calibrate", "static alignment, then navigation with calibration");
  add_data_options(cmd_cal, cal_files);

  DataFiles nav_files;
  std::string nav_calibration;
  auto* cmd_nav = app.add_subcommand("navigate", "static alignment, then navigation with a fixed calibration");
  add_data_options(cmd_nav, nav_files);
  cmd_nav->add_option("--calibration", nav_calibration, "calibration CSV (last row is used)")->required();

  DataFiles align_files;
  std::string align_calibration;
  double align_start = 0.0;
  auto* cmd_align = app.add_subcommand("align", "in-motion alignment, then navigation");
  add_data_options(cmd_align, align_files);
  cmd_align->add_option("--calibration", align_calibration, "calibration CSV (last row is used)")->required();
  cmd_align->add_option("--t-start", align_start, "alignment start time, s")->required();

  std::string cc_config, cc_a, cc_b, cc_out = ".";
  bool cc_check = false;
  auto* cmd_cc = app.add_subcommand("crosscheck", "apply each calibration to both datasets");
  cmd_cc->add_option("--config", cc_config, "scenario file");
  cmd_cc->add_option("--a", cc_a, "dataset A directory: imu.csv, odometer.csv, truth.csv, calibration.csv")->required();
  cmd_cc->add_option("--b", cc_b, "dataset B directory")->required();
  cmd_cc->add_option("--out", cc_out, "output directory");
  cmd_cc->add_flag("--check", cc_check, "exit 4 unless off-diagonal %D is at least twice the diagonal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*cmd_template) {
      const std::string text = write_scenario(default_scenario());
      if (template_out.empty()) std::cout << text;
      else write_text_file(template_out, text);
      return 0;
    }
    if (*cmd_sim) {
      const Scenario scenario = load_scenario(sim_scenario);
      const std::uint64_t seed = cmd_sim->count("--seed") ? sim_seed : scenario.seeds.front();
      const SimulatedData data = simulate(scenario, seed, sim_ratio);
      std::filesystem::create_directories(sim_out);
      std::ostringstream imu, odo, truth;
      write_imu_csv(imu, data.imu);
      write_odometer_csv(odo, data.odometer);
      write_trajectory_csv(truth, decimated_truth(data.truth, scenario.truth_output_interval));
      write_text_file(sim_out + "/imu.csv", imu.str());
      write_text_file(sim_out + "/odometer.csv", odo.str());
      write_text_file(sim_out + "/truth.csv", truth.str());
      std::printf("simulated %.1f s, %.1f m travelled\n", data.truth.samples().back().nav.t,
                  data.truth.samples().back().distance);
      return 0;
    }
    if (*cmd_run) {
      const ScenarioOutcome outcome = run_scenario(load_scenario(run_scenario_path), run_save);
      std::cout << outcome.summary;
      return run_check && !outcome.all_pass() ? kExitCheck : 0;
    }
    if (*cmd_cal || *cmd_nav || *cmd_align) {
      const DataFiles& files = *cmd_cal ? cal_files : *cmd_nav ? nav_files : align_files;
      const Scenario scenario = config_of(files);
      const double f_nom = scenario.problem1.filter.nominal_factor;
      const auto imu = load_imu(files.imu);
      const auto speeds = prefilter_speeds(scenario, load_odometer(files.odometer));
      const auto truth = load_truth(files);
      if (imu.empty()) throw input_error("IMU CSV has no rows");
      const double t0 = imu.front().t - (imu.size() > 1 ? imu[1].t - imu[0].t : 0.0);
      bool ok = true;
      if (*cmd_cal) {
        const auto r = calibrate(scenario, imu, speeds, position_at(files, truth, t0));
        ok = emit_run(files, truth, r.run, f_nom, "calibrate");
      } else if (*cmd_nav) {
        const auto r = navigate(scenario, imu, speeds, position_at(files, truth, t0), last_calibration(nav_calibration, f_nom));
        ok = emit_run(files, truth, r.run, f_nom, "navigate");
      } else {
        const auto r = align(scenario, imu, speeds, align_start, position_at(files, truth, align_start),
                             last_calibration(align_calibration, f_nom));
        std::printf("alignment %.1f-%.1f s, attitude eigen gap %.3g%s\n", r.alignment.t_start, r.alignment.t_end,
                    r.alignment.solution.eigen_gap, r.alignment.solution.weak ? " (weak geometry)" : "");
        ok = emit_run(files, truth, r.run, f_nom, "align");
      }
      return ok ? 0 : kExitCheck;
    }
    if (*cmd_cc) {
      const Scenario scenario = cc_config.empty() ? default_scenario() : load_scenario(cc_config);
      const double f_nom = scenario.problem1.filter.nominal_factor;
      auto load = [&](const std::string& dir) {
        DataFiles f;
        f.truth = dir + "/truth.csv";
        return CrosscheckInput{load_imu(dir + "/imu.csv"), prefilter_speeds(scenario, load_odometer(dir + "/odometer.csv")),
                               load_truth(f), last_calibration(dir + "/calibration.csv", f_nom)};
      };
      const CrosscheckMatrix m = crosscheck(scenario, load(cc_a), load(cc_b));
      const std::string text = format_crosscheck(m);
      std::filesystem::create_directories(cc_out);
      write_text_file(cc_out + "/crosscheck.txt", text);
      std::cout << text;
      if (cc_check) {
        std::printf("%s cross-check degradation\n", m.degraded() ? "PASS" : "FAIL");
        if (!m.degraded()) return kExitCheck;
      }
      return 0;
    }
  } catch (const NavError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::Input ? kExitInput : kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
