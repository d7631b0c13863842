#include "landnav/csvio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "landnav/error.hpp"

namespace landnav {

namespace {

// Shortest of %.15g/%.17g that reads back to the same double.
void put(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  if (std::strtod(buf, nullptr) != x) std::snprintf(buf, sizeof buf, "%.17g", x);
  out << buf;
}

void row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    put(out, v);
    first = false;
  }
  out << '\n';
}

// Reads a table with an exact header and `columns` numeric fields per row.
std::vector<std::vector<double>> read_table(std::istream& in, const std::string& header, std::size_t columns) {
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty CSV, expected header '" + header + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw input_error("CSV header '" + line + "' does not match '" + header + "'");
  std::vector<std::vector<double>> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    values.reserve(columns);
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      double v = 0.0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || !std::isfinite(v))
        throw input_error("CSV line " + std::to_string(lineno) + ": bad number");
      values.push_back(v);
      p = next;
      if (p == end) break;
      if (*p != ',') throw input_error("CSV line " + std::to_string(lineno) + ": expected ','");
      ++p;
    }
    if (values.size() != columns)
      throw input_error("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(columns) + " fields");
    if (!out.empty() && !(values[0] > out.back()[0]))
      throw input_error("CSV line " + std::to_string(lineno) + ": time not strictly increasing");
    out.push_back(std::move(values));
  }
  return out;
}

const char* kImuHeader = "t,dthx,dthy,dthz,dvx,dvy,dvz";
const char* kOdoHeader = "t,pulses_cumulative";
const char* kTrajHeader = "t,lon_rad,lat_rad,h_m,vn,vu,ve,q0,q1,q2,q3";
const char* kCalHeader = "t,psi_rad,theta_rad,lx,ly,lz,f_ppm_dev";
const char* kMetricHeader = "metric,t,value";

}  // namespace

void write_imu_csv(std::ostream& out, const std::vector<ImuIncrement>& imu) {
  out << kImuHeader << '\n';
  for (const ImuIncrement& s : imu)
    row(out, {s.t, s.dtheta.x(), s.dtheta.y(), s.dtheta.z(), s.dvel.x(), s.dvel.y(), s.dvel.z()});
}

std::vector<ImuIncrement> read_imu_csv(std::istream& in) {
  std::vector<ImuIncrement> out;
  for (const auto& v : read_table(in, kImuHeader, 7)) out.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  return out;
}

void write_odometer_csv(std::ostream& out, const std::vector<OdometerReading>& readings) {
  out << kOdoHeader << '\n';
  for (const OdometerReading& r : readings) row(out, {r.t, r.pulses});
}

std::vector<OdometerReading> read_odometer_csv(std::istream& in) {
  std::vector<OdometerReading> out;
  for (const auto& v : read_table(in, kOdoHeader, 2)) out.push_back({v[0], v[1]});
  return out;
}

void write_trajectory_csv(std::ostream& out, const std::vector<NavState>& states) {
  out << kTrajHeader << '\n';
  for (const NavState& s : states) {
    const Eigen::Quaterniond q = dcm_to_quaternion(s.C_bn);
    row(out, {s.t, s.p.longitude, s.p.latitude, s.p.height, s.v.x(), s.v.y(), s.v.z(), q.w(), q.x(), q.y(), q.z()});
  }
}

std::vector<NavState> read_trajectory_csv(std::istream& in) {
  std::vector<NavState> out;
  for (const auto& v : read_table(in, kTrajHeader, 11)) {
    NavState s;
    s.t = v[0];
    s.p = {v[1], v[2], v[3]};
    s.v = Vec3(v[4], v[5], v[6]);
    const Eigen::Quaterniond q(v[7], v[8], v[9], v[10]);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw input_error("trajectory quaternion is not unit length");
    s.C_bn = quaternion_to_dcm(q.normalized());
    out.push_back(s);
  }
  return out;
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationRow>& rows, double nominal_factor) {
  if (nominal_factor == 0.0) throw input_error("nominal odometer factor must be non-zero");
  out << kCalHeader << '\n';
  for (const CalibrationRow& r : rows) {
    const CalibrationSet& c = r.calibration;
    row(out, {r.t, c.yaw, c.pitch, c.lever_arm.x(), c.lever_arm.y(), c.lever_arm.z(),
              (c.factor / nominal_factor - 1.0) * 1e6});
  }
}

std::vector<CalibrationRow> read_calibration_csv(std::istream& in, double nominal_factor) {
  std::vector<CalibrationRow> out;
  for (const auto& v : read_table(in, kCalHeader, 7)) {
    CalibrationRow r;
    r.t = v[0];
    r.calibration.yaw = v[1];
    r.calibration.pitch = v[2];
    r.calibration.lever_arm = Vec3(v[3], v[4], v[5]);
    r.calibration.factor = nominal_factor * (1.0 + v[6] * 1e-6);
    out.push_back(r);
  }
  return out;
}

void write_speed_csv(std::ostream& out, const std::vector<SpeedEstimate>& speeds) {
  out << "t,speed,acceleration\n";
  for (const SpeedEstimate& s : speeds) row(out, {s.t, s.speed, s.acceleration});
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricSample>& samples) {
  out << kMetricHeader << '\n';
  for (const MetricSample& m : samples) {
    if (m.metric.find_first_of(",\n\"") != std::string::npos) throw input_error("metric name contains a separator");
    out << m.metric << ',';
    put(out, m.t);
    out << ',';
    put(out, m.value);
    out << '\n';
  }
}

std::vector<MetricSample> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricHeader) throw input_error("metrics CSV header mismatch");
  std::vector<MetricSample> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw input_error("metrics CSV line " + std::to_string(lineno) + ": expected 3 fields");
    MetricSample m;
    m.metric = line.substr(0, c1);
    try {
      m.t = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      m.value = std::stod(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw input_error("metrics CSV line " + std::to_string(lineno) + ": bad number");
    }
    out.push_back(m);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw input_error("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<NavState> truth_states(const TruthTrajectory& truth) {
  std::vector<NavState> out;
  out.reserve(truth.samples().size());
  for (const TruthSample& s : truth.samples()) out.push_back(s.nav);
  return out;
}

std::vector<CalibrationRow> calibration_history(const std::vector<FilterEpoch>& epochs) {
  std::vector<CalibrationRow> out;
  out.reserve(epochs.size());
  for (const FilterEpoch& e : epochs) out.push_back({e.t, e.calibration});
  return out;
}

}  // namespace landnav
