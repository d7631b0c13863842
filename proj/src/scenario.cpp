#include "landnav/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "landnav/error.hpp"

namespace landnav {

namespace {

constexpr double kDegPerHour = kDeg / 3600.0;
constexpr double kMicroG = 9.80665e-6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest of %.15g/%.17g that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  if (std::strtod(buf, nullptr) != x) std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double to_double(const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw input_error("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

Vec3 to_vec3(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw input_error("expected three comma-separated values: '" + s + "'");
  return {to_double(parts[0]), to_double(parts[1]), to_double(parts[2])};
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()); }

bool to_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw input_error("expected true or false: '" + t + "'");
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Field {
  const char* key;
  std::function<std::string(const Scenario&)> get;
  std::function<void(Scenario&, const std::string&)> set;
};

// Scalar field stored as `scale * file value`.
Field scalar(const char* key, std::function<double&(Scenario&)> ref, double scale = 1.0) {
  return {key,
          [ref, scale](const Scenario& s) { return fmt(ref(const_cast<Scenario&>(s)) / scale); },
          [ref, scale](Scenario& s, const std::string& v) { ref(s) = to_double(v) * scale; }};
}

Field vector3(const char* key, std::function<Vec3&(Scenario&)> ref, double scale = 1.0) {
  return {key,
          [ref, scale](const Scenario& s) { return fmt(Vec3(ref(const_cast<Scenario&>(s)) / scale)); },
          [ref, scale](Scenario& s, const std::string& v) { ref(s) = to_vec3(v) * scale; }};
}

Field flag(const char* key, std::function<bool&(Scenario&)> ref) {
  return {key, [ref](const Scenario& s) { return fmt(ref(const_cast<Scenario&>(s))); },
          [ref](Scenario& s, const std::string& v) { ref(s) = to_bool(v); }};
}

using Section = std::pair<const char*, std::vector<Field>>;

std::vector<Section> schema() {
  std::vector<Section> out;
  out.push_back({"scenario",
                 {{"name", [](const Scenario& s) { return s.name; }, [](Scenario& s, const std::string& v) { s.name = trim(v); }},
                  {"mode", [](const Scenario& s) { return std::string(to_string(s.mode)); },
                   [](Scenario& s, const std::string& v) {
                     const std::string m = trim(v);
                     if (m == "problem1") s.mode = ScenarioMode::Problem1;
                     else if (m == "problem2") s.mode = ScenarioMode::Problem2;
                     else if (m == "crosscheck") s.mode = ScenarioMode::Crosscheck;
                     else throw input_error("unknown mode '" + m + "'");
                   }},
                  {"seeds",
                   [](const Scenario& s) {
                     std::string o;
                     for (std::size_t i = 0; i < s.seeds.size(); ++i) o += (i ? ", " : "") + std::to_string(s.seeds[i]);
                     return o;
                   },
                   [](Scenario& s, const std::string& v) {
                     s.seeds.clear();
                     for (const std::string& part : split(v, ',')) {
                       const auto dots = part.find("..");
                       auto to_u64 = [](const std::string& t) {
                         const double d = to_double(t);
                         if (d < 0 || d != std::floor(d)) throw input_error("seed must be a non-negative integer");
                         return static_cast<std::uint64_t>(d);
                       };
                       if (dots == std::string::npos) {
                         s.seeds.push_back(to_u64(part));
                       } else {
                         const auto lo = to_u64(part.substr(0, dots)), hi = to_u64(part.substr(dots + 2));
                         if (hi < lo || hi - lo > 100000) throw input_error("bad seed range '" + part + "'");
                         for (auto k = lo; k <= hi; ++k) s.seeds.push_back(k);
                       }
                     }
                     if (s.seeds.empty()) throw input_error("seeds list is empty");
                   }},
                  {"output", [](const Scenario& s) { return s.output; }, [](Scenario& s, const std::string& v) { s.output = trim(v); }},
                  scalar("alignment_start", [](Scenario& s) -> double& { return s.alignment_start; }),
                  scalar("crosscheck_factor_ratio", [](Scenario& s) -> double& { return s.crosscheck_factor_ratio; }),
                  scalar("truth_output_interval", [](Scenario& s) -> double& { return s.truth_output_interval; })}});

  out.push_back({"start",
                 {scalar("longitude_deg", [](Scenario& s) -> double& { return s.truth.start.longitude; }, kDeg),
                  scalar("latitude_deg", [](Scenario& s) -> double& { return s.truth.start.latitude; }, kDeg),
                  scalar("height_m", [](Scenario& s) -> double& { return s.truth.start.height; }),
                  scalar("heading_deg", [](Scenario& s) -> double& { return s.truth.initial.heading; }, kDeg),
                  scalar("grade_deg", [](Scenario& s) -> double& { return s.truth.initial.grade; }, kDeg),
                  scalar("bank_deg", [](Scenario& s) -> double& { return s.truth.initial.bank; }, kDeg),
                  scalar("t0", [](Scenario& s) -> double& { return s.truth.t0; })}});

  out.push_back({"mount",
                 {scalar("yaw_deg", [](Scenario& s) -> double& { return s.truth.mount.yaw; }, kDeg),
                  scalar("pitch_deg", [](Scenario& s) -> double& { return s.truth.mount.pitch; }, kDeg),
                  scalar("roll_deg", [](Scenario& s) -> double& { return s.truth.mount.roll; }, kDeg),
                  vector3("lever_arm_m", [](Scenario& s) -> Vec3& { return s.truth.mount.lever_arm; })}});

  out.push_back({"suspension",
                 {scalar("pitch_amplitude_deg", [](Scenario& s) -> double& { return s.truth.suspension.pitch_amplitude; }, kDeg),
                  scalar("pitch_frequency_hz", [](Scenario& s) -> double& { return s.truth.suspension.pitch_frequency; }),
                  scalar("roll_amplitude_deg", [](Scenario& s) -> double& { return s.truth.suspension.roll_amplitude; }, kDeg),
                  scalar("roll_frequency_hz", [](Scenario& s) -> double& { return s.truth.suspension.roll_frequency; }),
                  scalar("reference_speed", [](Scenario& s) -> double& { return s.truth.suspension.reference_speed; })}});

  out.push_back({"imu",
                 {scalar("step", [](Scenario& s) -> double& { return s.truth.step; }),
                  vector3("gyro_bias_deg_per_h", [](Scenario& s) -> Vec3& { return s.imu.gyro_bias; }, kDegPerHour),
                  vector3("accel_bias_ug", [](Scenario& s) -> Vec3& { return s.imu.accel_bias; }, kMicroG),
                  scalar("angle_random_walk_deg_per_rt_h", [](Scenario& s) -> double& { return s.imu.angle_random_walk; }, kDeg / 60.0),
                  scalar("velocity_random_walk_ug_per_rt_hz", [](Scenario& s) -> double& { return s.imu.velocity_random_walk; }, kMicroG)}});

  out.push_back({"odometer",
                 {scalar("scale_factor", [](Scenario& s) -> double& { return s.odometer.scale_factor; }),
                  scalar("scale_drift_per_hour", [](Scenario& s) -> double& { return s.odometer.scale_drift_per_hour; }),
                  flag("quantize", [](Scenario& s) -> bool& { return s.odometer.quantize; }),
                  scalar("output_interval", [](Scenario& s) -> double& { return s.odometer.output_interval; })}});

  out.push_back({"prefilter",
                 {scalar("accel_psd", [](Scenario& s) -> double& { return s.prefilter.accel_psd; }),
                  scalar("measurement_sigma_pulses", [](Scenario& s) -> double& { return s.prefilter.measurement_sigma_pulses; }),
                  scalar("output_interval", [](Scenario& s) -> double& { return s.prefilter.output_interval; }),
                  scalar("initial_speed_sigma", [](Scenario& s) -> double& { return s.prefilter.initial_speed_sigma; }),
                  scalar("initial_accel_sigma", [](Scenario& s) -> double& { return s.prefilter.initial_accel_sigma; })}});

  auto f = [](Scenario& s) -> FilterConfig& { return s.problem1.filter; };
  std::vector<Field> filter;
#define LANDNAV_FILTER_SCALAR(name) \
  filter.push_back(scalar(#name, [f](Scenario& s) -> double& { return f(s).name; }))
#define LANDNAV_FILTER_FLAG(name) \
  filter.push_back(flag(#name, [f](Scenario& s) -> bool& { return f(s).name; }))
  LANDNAV_FILTER_SCALAR(attitude_level_sigma);
  LANDNAV_FILTER_SCALAR(attitude_heading_sigma);
  LANDNAV_FILTER_SCALAR(velocity_sigma);
  LANDNAV_FILTER_SCALAR(position_sigma);
  LANDNAV_FILTER_SCALAR(gyro_bias_sigma);
  LANDNAV_FILTER_SCALAR(accel_bias_sigma);
  LANDNAV_FILTER_SCALAR(angle_sigma);
  LANDNAV_FILTER_SCALAR(lever_sigma);
  LANDNAV_FILTER_SCALAR(factor_sigma);
  LANDNAV_FILTER_SCALAR(gyro_noise_psd);
  LANDNAV_FILTER_SCALAR(accel_noise_psd);
  LANDNAV_FILTER_SCALAR(gyro_bias_psd);
  LANDNAV_FILTER_SCALAR(accel_bias_psd);
  LANDNAV_FILTER_SCALAR(angle_psd);
  LANDNAV_FILTER_SCALAR(lever_psd);
  LANDNAV_FILTER_SCALAR(factor_psd);
  LANDNAV_FILTER_SCALAR(odometer_sigma);
  LANDNAV_FILTER_SCALAR(nhc_sigma);
  LANDNAV_FILTER_SCALAR(zupt_sigma);
  LANDNAV_FILTER_SCALAR(gate);
  LANDNAV_FILTER_SCALAR(nominal_factor);
  LANDNAV_FILTER_SCALAR(covariance_interval);
  LANDNAV_FILTER_SCALAR(stationary_speed);
  LANDNAV_FILTER_FLAG(use_zupt);
  LANDNAV_FILTER_FLAG(estimate_biases);
  LANDNAV_FILTER_FLAG(estimate_calibration);
  LANDNAV_FILTER_FLAG(position_coupling);
#undef LANDNAV_FILTER_SCALAR
#undef LANDNAV_FILTER_FLAG
  out.push_back({"filter", filter});

  out.push_back({"calibration",
                 {scalar("yaw_deg", [](Scenario& s) -> double& { return s.problem1.initial_calibration.yaw; }, kDeg),
                  scalar("pitch_deg", [](Scenario& s) -> double& { return s.problem1.initial_calibration.pitch; }, kDeg),
                  vector3("lever_arm_m", [](Scenario& s) -> Vec3& { return s.problem1.initial_calibration.lever_arm; }),
                  scalar("factor", [](Scenario& s) -> double& { return s.problem1.initial_calibration.factor; })}});

  out.push_back({"static_alignment",
                 {scalar("window", [](Scenario& s) -> double& { return s.problem1.alignment_window; }),
                  scalar("min_window", [](Scenario& s) -> double& { return s.problem1.min_alignment_window; }),
                  scalar("gyro_std", [](Scenario& s) -> double& { return s.problem1.stationary.gyro_std; }),
                  scalar("accel_std", [](Scenario& s) -> double& { return s.problem1.stationary.accel_std; })}});

  out.push_back({"motion_alignment",
                 {scalar("window", [](Scenario& s) -> double& { return s.problem2.alignment.window; }),
                  scalar("settle", [](Scenario& s) -> double& { return s.problem2.alignment.settle; }),
                  scalar("refinement_passes",
                         [](Scenario& s) -> double& {
                           static thread_local double proxy;
                           proxy = s.problem2.alignment.refinement_passes;
                           return proxy;
                         }),
                  scalar("min_span_angle", [](Scenario& s) -> double& { return s.problem2.alignment.min_span_angle; }),
                  scalar("handoff_level_sigma", [](Scenario& s) -> double& { return s.problem2.handoff_level_sigma; }),
                  scalar("handoff_heading_sigma", [](Scenario& s) -> double& { return s.problem2.handoff_heading_sigma; }),
                  scalar("handoff_velocity_sigma", [](Scenario& s) -> double& { return s.problem2.handoff_velocity_sigma; }),
                  scalar("handoff_position_sigma", [](Scenario& s) -> double& { return s.problem2.handoff_position_sigma; })}});
  // Integer field: replace the proxy setter so the value lands in the struct.
  auto& passes = out.back().second[2];
  passes.set = [](Scenario& s, const std::string& v) {
    const double d = to_double(v);
    if (d < 0 || d > 20 || d != std::floor(d)) throw input_error("refinement_passes must be an integer in [0, 20]");
    s.problem2.alignment.refinement_passes = static_cast<int>(d);
  };
  passes.get = [](const Scenario& s) { return std::to_string(s.problem2.alignment.refinement_passes); };
  return out;
}

const char* segment_name(SegmentKind k) {
  switch (k) {
    case SegmentKind::Straight: return "straight";
    case SegmentKind::Arc: return "arc";
    case SegmentKind::SpeedRamp: return "ramp";
    case SegmentKind::Pause: return "pause";
  }
  return "straight";
}

TrajectorySegment parse_segment(const std::string& text) {
  const auto w = words(text);
  if (w.size() < 2) throw input_error("segment needs a kind and a duration");
  TrajectorySegment seg;
  if (w[0] == "straight") seg.kind = SegmentKind::Straight;
  else if (w[0] == "arc") seg.kind = SegmentKind::Arc;
  else if (w[0] == "ramp") seg.kind = SegmentKind::SpeedRamp;
  else if (w[0] == "pause") seg.kind = SegmentKind::Pause;
  else throw input_error("unknown segment kind '" + w[0] + "'");
  seg.duration = to_double(w[1]);
  for (std::size_t i = 2; i < w.size(); ++i) {
    const auto eq = w[i].find('=');
    if (eq == std::string::npos) throw input_error("segment option must be key=value: '" + w[i] + "'");
    const std::string key = w[i].substr(0, eq);
    const double value = to_double(w[i].substr(eq + 1));
    if (key == "speed") seg.target_speed = value;
    else if (key == "turn_deg") seg.turn_rate = value * kDeg / seg.duration;
    else if (key == "grade_deg") seg.grade_change = value * kDeg;
    else if (key == "bank_deg") seg.bank_change = value * kDeg;
    else throw input_error("unknown segment option '" + key + "'");
  }
  if (!(seg.duration > 0.0)) throw input_error("segment duration must be positive");
  return seg;
}

std::string write_segment(const TrajectorySegment& seg) {
  std::string out = std::string(segment_name(seg.kind)) + " " + fmt(seg.duration);
  if (seg.kind == SegmentKind::SpeedRamp) out += " speed=" + fmt(seg.target_speed);
  if (seg.kind == SegmentKind::Arc) out += " turn_deg=" + fmt(seg.turn_rate * seg.duration / kDeg);
  if (seg.grade_change != 0.0) out += " grade_deg=" + fmt(seg.grade_change / kDeg);
  if (seg.bank_change != 0.0) out += " bank_deg=" + fmt(seg.bank_change / kDeg);
  return out;
}

}  // namespace

const char* to_string(ScenarioMode mode) {
  switch (mode) {
    case ScenarioMode::Problem1: return "problem1";
    case ScenarioMode::Problem2: return "problem2";
    case ScenarioMode::Crosscheck: return "crosscheck";
  }
  return "problem1";
}

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  s.segments.clear();
  const auto sections = schema();
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw input_error("malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        const bool known = section == "trajectory" ||
                           std::any_of(sections.begin(), sections.end(), [&](const auto& e) { return e.first == section; });
        if (!known) throw input_error("unknown section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw input_error("expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (section == "trajectory") {
        if (key == "segment") {
          s.segments.push_back(parse_segment(value));
        } else if (key == "repeat") {
          // repeat = <count of preceding segments> <extra copies>
          const auto w = words(value);
          if (w.size() != 2) throw input_error("repeat expects: <segments> <copies>");
          const double n = to_double(w[0]), copies = to_double(w[1]);
          if (n < 1 || n > static_cast<double>(s.segments.size()) || copies < 0 || copies > 1000 ||
              n != std::floor(n) || copies != std::floor(copies))
            throw input_error("bad repeat counts");
          const std::vector<TrajectorySegment> block(s.segments.end() - static_cast<long>(n), s.segments.end());
          for (int c = 0; c < static_cast<int>(copies); ++c) s.segments.insert(s.segments.end(), block.begin(), block.end());
        } else {
          throw input_error("unknown key '" + key + "' in [trajectory]");
        }
        continue;
      }
      if (section == "odometer" && key == "slip") {
        const auto w = words(value);
        if (w.size() != 3) throw input_error("slip expects: <t_start> <t_end> <ratio>");
        s.odometer.slips.push_back({to_double(w[0]), to_double(w[1]), to_double(w[2])});
        continue;
      }
      if (section == "imu" && key == "seed") throw input_error("IMU seeds come from [scenario] seeds");
      bool found = false;
      for (const auto& [name, fields] : sections) {
        if (section != name) continue;
        for (const Field& field : fields) {
          if (key == field.key) {
            field.set(s, value);
            found = true;
          }
        }
      }
      if (!found) throw input_error("unknown key '" + key + "' in [" + section + "]");
    } catch (const NavError& e) {
      throw input_error("scenario line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (s.segments.empty()) throw input_error("scenario has no trajectory segments");
  s.problem2.filter = s.problem1.filter;
  s.problem2.alignment.nominal_factor = s.problem1.filter.nominal_factor;
  s.problem1.filter.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open scenario file '" + path + "'");
  return parse_scenario(in);
}

std::string write_scenario(const Scenario& scenario) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, fields] : schema()) {
    out << (first ? "" : "\n") << '[' << name << "]\n";
    first = false;
    for (const Field& field : fields) out << field.key << " = " << field.get(scenario) << '\n';
    if (std::string(name) == "odometer") {
      for (const SlipEvent& slip : scenario.odometer.slips)
        out << "slip = " << fmt(slip.t_start) << ' ' << fmt(slip.t_end) << ' ' << fmt(slip.ratio) << '\n';
    }
  }
  out << "\n[trajectory]\n";
  for (const TrajectorySegment& seg : scenario.segments) out << "segment = " << write_segment(seg) << '\n';
  return out.str();
}

}  // namespace landnav
