#include "landnav/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "landnav/error.hpp"

namespace landnav {

namespace {

// Smooth unit step over [0, D]: value, first and second derivative.
struct Shape {
  double s, ds, dds;
};

Shape raised_cosine(double tau, double d) {
  const double w = 2.0 * kPi / d;
  return {tau / d - std::sin(w * tau) / (2.0 * kPi), (1.0 - std::cos(w * tau)) / d, w * std::sin(w * tau) / d};
}

Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0, std::cos(a);
  return m;
}

Mat3 rot_x(double a) {
  Mat3 m;
  m << 1.0, 0.0, 0.0, 0.0, std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a);
  return m;
}

// Level heading frame (forward, right, down) expressed in N-U-E.
Mat3 heading_frame(double heading) {
  const double c = std::cos(heading), s = std::sin(heading);
  Mat3 m;
  m.col(0) = Vec3(c, 0.0, s);
  m.col(1) = Vec3(-s, 0.0, c);
  m.col(2) = Vec3(0.0, -1.0, 0.0);
  return m;
}

Mat3 vehicle_to_nav(const VehicleAngles& a) { return heading_frame(a.heading) * rot_y(a.grade) * rot_x(a.bank); }

Vec3 vehicle_rate_in_vehicle(const VehicleAngles& a, const VehicleAngles& r) {
  const Mat3 rx_t = rot_x(a.bank).transpose();
  return rx_t * rot_y(a.grade).transpose() * Vec3(0.0, 0.0, r.heading) + rx_t * Vec3(0.0, r.grade, 0.0) +
         Vec3(r.bank, 0.0, 0.0);
}

}  // namespace

VehicleProfile::VehicleProfile(std::vector<TrajectorySegment> segments, VehicleAngles initial, double t0,
                               Suspension suspension)
    : segments_(std::move(segments)), suspension_(suspension), t0_(t0) {
  if (segments_.empty()) throw input_error("trajectory has no segments");
  double t = t0;
  double speed = 0.0;
  VehicleAngles ang = initial;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    const std::string where = "segment " + std::to_string(i + 1) + ": ";
    if (!(seg.duration > 0.0)) throw input_error(where + "duration must be positive");
    switch (seg.kind) {
      case SegmentKind::Pause:
        if (speed != 0.0) throw input_error(where + "pause requires the vehicle to be stopped");
        break;
      case SegmentKind::Arc:
        if (!(speed > 0.0)) throw input_error(where + "cannot turn at standstill");
        break;
      case SegmentKind::SpeedRamp:
        if (!(seg.target_speed >= 0.0) || seg.target_speed > kMaxLandSpeed) {
          throw input_error(where + "ramp target speed out of range");
        }
        break;
      case SegmentKind::Straight:
        break;
    }
    if (speed == 0.0 && (seg.grade_change != 0.0 || seg.bank_change != 0.0) && seg.kind != SegmentKind::SpeedRamp) {
      throw input_error(where + "grade/bank changes need motion");
    }
    pieces_.push_back({seg, t, speed, ang});
    const double d = seg.duration;
    double end_speed = speed;
    if (seg.kind == SegmentKind::SpeedRamp) end_speed = seg.target_speed;
    path_length_ += 0.5 * (speed + end_speed) * d;
    if (seg.kind == SegmentKind::Arc) ang.heading += seg.turn_rate * d;
    ang.grade += seg.grade_change;
    ang.bank += seg.bank_change;
    speed = end_speed;
    t += d;
  }
  duration_ = t - t0;
}

VehicleProfile::Sample VehicleProfile::at(double t) const {
  t = std::clamp(t, t0_, t0_ + duration_);
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double v, const Piece& p) { return v < p.t_start; });
  const Piece& pc = *std::prev(it);
  const double d = pc.seg.duration;
  const double tau = std::min(t - pc.t_start, d);
  const Shape sh = raised_cosine(tau, d);

  Sample out;
  out.speed = pc.speed0;
  if (pc.seg.kind == SegmentKind::SpeedRamp) {
    const double ds = pc.seg.target_speed - pc.speed0;
    out.speed += ds * sh.s;
    out.speed_rate = ds * sh.ds;
  }
  out.angles = pc.angles0;
  if (pc.seg.kind == SegmentKind::Arc) {
    const double dh = pc.seg.turn_rate * d;
    out.angles.heading += dh * sh.s;
    out.rates.heading = dh * sh.ds;
  }
  out.angles.grade += pc.seg.grade_change * sh.s;
  out.rates.grade = pc.seg.grade_change * sh.ds;
  out.angles.bank += pc.seg.bank_change * sh.s;
  out.rates.bank = pc.seg.bank_change * sh.ds;

  const Suspension& sus = suspension_;
  if (sus.pitch_amplitude != 0.0 || sus.roll_amplitude != 0.0) {
    const double v2 = out.speed * out.speed;
    const double r2 = sus.reference_speed * sus.reference_speed;
    const double fade = v2 / (v2 + r2);
    const double fade_rate = 2.0 * out.speed * r2 / ((v2 + r2) * (v2 + r2)) * out.speed_rate;
    const double wp = 2.0 * kPi * sus.pitch_frequency;
    const double wr = 2.0 * kPi * sus.roll_frequency;
    const double tt = t - t0_;
    out.angles.grade += sus.pitch_amplitude * fade * std::sin(wp * tt);
    out.rates.grade += sus.pitch_amplitude * (fade_rate * std::sin(wp * tt) + fade * wp * std::cos(wp * tt));
    out.angles.bank += sus.roll_amplitude * fade * std::sin(wr * tt);
    out.rates.bank += sus.roll_amplitude * (fade_rate * std::sin(wr * tt) + fade * wr * std::cos(wr * tt));
  }
  return out;
}

TruthTrajectory::TruthTrajectory(VehicleProfile profile, TruthConfig config)
    : profile_(std::move(profile)), config_(std::move(config)) {}

Vec3 TruthTrajectory::nav_rate_of_vehicle(double t) const {
  const auto s = profile_.at(t);
  return vehicle_to_nav(s.angles) * vehicle_rate_in_vehicle(s.angles, s.rates);
}

Kinematics TruthTrajectory::kinematics(double t, const GeodeticPosition& p) const {
  const EarthModel& earth = config_.earth;
  const auto s = profile_.at(t);
  const Mat3 C_an = vehicle_to_nav(s.angles);
  const Vec3 w_na = C_an * vehicle_rate_in_vehicle(s.angles, s.rates);

  // Fourth-order central difference of the vehicle rate; the profile is C^1 in rates.
  const double h = 1e-3;
  const Vec3 w_na_dot = (nav_rate_of_vehicle(t - 2 * h) - 8.0 * nav_rate_of_vehicle(t - h) +
                         8.0 * nav_rate_of_vehicle(t + h) - nav_rate_of_vehicle(t + 2 * h)) /
                        (12.0 * h);

  const Vec3 fwd = C_an.col(0);
  const Vec3 v_o = s.speed * fwd;
  const Vec3 v_o_dot = s.speed_rate * fwd + s.speed * w_na.cross(fwd);

  Kinematics k;
  k.C_bn = C_an * config_.mount.C_ba();
  const Vec3 l_n = k.C_bn * config_.mount.lever_arm;
  const Vec3 w_ie = earth.earth_rate(p);
  Vec3 v = v_o;
  Vec3 w_en = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    w_en = earth.transport_rate(p, v);
    v = v_o - (w_na + w_en).cross(l_n);
  }
  const Vec3 w_en_dot = earth.transport_rate(p, v_o_dot);  // linear in velocity
  k.v = v;
  k.v_dot = v_o_dot - (w_na_dot + w_en_dot).cross(l_n) - (w_na + w_en).cross(w_na.cross(l_n));
  k.omega_ib_b = k.C_bn.transpose() * (w_na + w_ie + w_en);
  k.f_b = k.C_bn.transpose() * (k.v_dot + (2.0 * w_ie + w_en).cross(v) - earth.gravity(p));
  k.p_dot = earth.curvature_matrix(p) * v;
  k.speed = s.speed;
  return k;
}

GeodeticPosition TruthTrajectory::position_at(double t) const {
  const double h = config_.step;
  const double x = (t - config_.t0) / h;
  const std::size_t n = samples_.size();
  std::size_t i = x <= 0.0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(x), n - 2);
  const double u = std::clamp(x - static_cast<double>(i), 0.0, 1.0);
  const auto& p0 = samples_[i].nav.p;
  const auto& p1 = samples_[i + 1].nav.p;
  const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
  const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
  const Vec3 a(p0.longitude, p0.latitude, p0.height);
  Vec3 b(p1.longitude, p1.latitude, p1.height);
  b.x() = a.x() + wrap_angle(b.x() - a.x());
  const Vec3 r = h00 * a + h10 * h * p_dot_[i] + h01 * b + h11 * h * p_dot_[i + 1];
  return {wrap_angle(r.x()), r.y(), r.z()};
}

const TruthSample& TruthTrajectory::sample_at(double t) const {
  const double x = std::round((t - config_.t0) / config_.step);
  const auto i = static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(samples_.size() - 1)));
  return samples_[i];
}

TruthTrajectory generate_truth(const std::vector<TrajectorySegment>& segments, const TruthConfig& config) {
  if (!(config.step > 0.0)) throw input_error("truth step must be positive");
  VehicleProfile profile(segments, config.initial, config.t0, config.suspension);
  TruthTrajectory truth(std::move(profile), config);

  const double h = config.step;
  const auto n = static_cast<std::size_t>(std::llround((truth.profile_.end_time() - config.t0) / h));
  truth.samples_.reserve(n + 1);
  truth.p_dot_.reserve(n + 1);

  auto add = [&](double t, const GeodeticPosition& p, double distance) {
    const Kinematics k = truth.kinematics(t, p);
    TruthSample s;
    s.nav.C_bn = k.C_bn;
    s.nav.v = k.v;
    s.nav.p = p;
    s.nav.t = t;
    s.omega_ib_b = k.omega_ib_b;
    s.f_b = k.f_b;
    s.speed = k.speed;
    s.distance = distance;
    truth.samples_.push_back(s);
    truth.p_dot_.push_back(k.p_dot);
  };

  auto offset = [](const GeodeticPosition& p, const Vec3& d) {
    return GeodeticPosition{p.longitude + d.x(), p.latitude + d.y(), p.height + d.z()};
  };

  GeodeticPosition p = config.start;
  double distance = 0.0;
  add(config.t0, p, distance);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = config.t0 + static_cast<double>(i) * h;
    // Classic RK4 on the geodetic position and the travelled distance.
    const Vec3 k1 = truth.p_dot_.back();
    const Vec3 k2 = truth.kinematics(t + 0.5 * h, offset(p, 0.5 * h * k1)).p_dot;
    const Vec3 k3 = truth.kinematics(t + 0.5 * h, offset(p, 0.5 * h * k2)).p_dot;
    const Vec3 k4 = truth.kinematics(t + h, offset(p, h * k3)).p_dot;
    p = offset(p, h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    p.longitude = wrap_angle(p.longitude);
    const double s0 = truth.samples_.back().speed;
    const double sm = truth.profile_.at(t + 0.5 * h).speed;
    const double s1 = truth.profile_.at(t + h).speed;
    distance += h / 6.0 * (s0 + 4.0 * sm + s1);
    add(config.t0 + static_cast<double>(i + 1) * h, p, distance);
  }
  return truth;
}

ImuErrorModel ImuErrorModel::navigation_grade(std::uint64_t seed) {
  constexpr double deg_per_hour = kDeg / 3600.0;
  constexpr double micro_g = 9.80665e-6;
  ImuErrorModel m;
  m.gyro_bias = Vec3(0.01, -0.01, 0.01) * deg_per_hour;
  m.accel_bias = Vec3(50.0, -50.0, 50.0) * micro_g;
  m.angle_random_walk = 0.002 * kDeg / 60.0;
  m.velocity_random_walk = 5.0 * micro_g;
  m.seed = seed;
  return m;
}

std::vector<ImuIncrement> ideal_imu_increments(const TruthTrajectory& truth) {
  // Five-point Gauss-Legendre on [0, 1].
  static constexpr std::array<double, 5> nodes = {0.04691007703066800, 0.23076534494715845, 0.5,
                                                  0.76923465505284155, 0.95308992296933200};
  static constexpr std::array<double, 5> weights = {0.11846344252809454, 0.23931433524968324,
                                                    0.28444444444444444, 0.23931433524968324,
                                                    0.11846344252809454};
  const auto& samples = truth.samples();
  const double h = truth.step();
  std::vector<ImuIncrement> out;
  out.reserve(samples.size() - 1);
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double t0 = samples[i].nav.t;
    ImuIncrement inc;
    inc.t = samples[i + 1].nav.t;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double t = t0 + nodes[j] * h;
      const Kinematics k = truth.kinematics(t, truth.position_at(t));
      inc.dtheta += weights[j] * h * k.omega_ib_b;
      inc.dvel += weights[j] * h * k.f_b;
    }
    out.push_back(inc);
  }
  return out;
}

std::vector<ImuIncrement> corrupt_imu(const std::vector<ImuIncrement>& ideal, const ImuErrorModel& model) {
  std::mt19937_64 rng(model.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ImuIncrement> out;
  out.reserve(ideal.size());
  if (ideal.size() < 2) throw input_error("corrupt_imu needs at least two increments");
  double t_prev = ideal[0].t - (ideal[1].t - ideal[0].t);
  for (const auto& in : ideal) {
    const double dt = in.t - t_prev;
    t_prev = in.t;
    ImuIncrement inc = in;
    const double sa = model.angle_random_walk * std::sqrt(dt);
    const double sv = model.velocity_random_walk * std::sqrt(dt);
    for (int a = 0; a < 3; ++a) inc.dtheta[a] += model.gyro_bias[a] * dt + sa * normal(rng);
    for (int a = 0; a < 3; ++a) inc.dvel[a] += model.accel_bias[a] * dt + sv * normal(rng);
    out.push_back(inc);
  }
  return out;
}

std::vector<ImuIncrement> synthesize_imu(const TruthTrajectory& truth, const ImuErrorModel& model) {
  return corrupt_imu(ideal_imu_increments(truth), model);
}

double OdometerModel::factor_at(double t, double t0) const {
  return scale_factor * (1.0 + scale_drift_per_hour * (t - t0) / 3600.0);
}

double odometer_rate(const TruthSample& s, const EarthModel& earth, const VehicleMount& mount, double factor) {
  const Mat3 C_nb = s.nav.C_bn.transpose();
  const Vec3 w_eb = s.omega_ib_b - C_nb * earth.earth_rate(s.nav.p);
  const Vec3 body_velocity = C_nb * s.nav.v + w_eb.cross(mount.lever_arm);
  const Eigen::RowVector3d forward_row = misalignment_dcm(mount.yaw, mount.pitch, mount.roll).row(0);
  return factor * forward_row.dot(body_velocity);
}

std::vector<OdometerReading> synthesize_odometer(const TruthTrajectory& truth, const OdometerModel& model) {
  const auto& samples = truth.samples();
  const double h = truth.step();
  const double pair = 2.0 * h;
  const long stride = std::lround(model.output_interval / pair);
  if (stride < 1 || std::abs(stride * pair - model.output_interval) > 1e-9) {
    throw input_error("odometer output interval must be a multiple of two IMU sub-intervals");
  }
  const double t0 = truth.config().t0;
  auto rate = [&](const TruthSample& s) {
    double r = odometer_rate(s, truth.config().earth, model.mount, model.factor_at(s.nav.t, t0));
    for (const auto& slip : model.slips) {
      if (s.nav.t >= slip.t_start && s.nav.t < slip.t_end) r *= 1.0 + slip.ratio;
    }
    return r;
  };

  std::vector<OdometerReading> out;
  double cumulative = 0.0;
  out.push_back({samples.front().nav.t, 0.0});
  long count = 0;
  double r0 = rate(samples[0]);
  for (std::size_t i = 0; i + 2 < samples.size(); i += 2) {
    const double r1 = rate(samples[i + 1]);
    const double r2 = rate(samples[i + 2]);
    // Counter resolution of 1e-9 pulse keeps streams bit-stable across
    // mathematically identical calibration parameterisations.
    cumulative += std::nearbyint(h / 3.0 * (r0 + 4.0 * r1 + r2) * 1e9) * 1e-9;
    r0 = r2;
    if (++count % stride == 0) {
      out.push_back({samples[i + 2].nav.t, model.quantize ? std::floor(cumulative) : cumulative});
    }
  }
  return out;
}

}  // namespace landnav
