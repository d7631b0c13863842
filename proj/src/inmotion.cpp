#include "landnav/inmotion.hpp"

#include <algorithm>
#include <cmath>

#include "landnav/error.hpp"

namespace landnav {

namespace {

using Mat4 = Eigen::Matrix4d;

// Left and right multiplication matrices of a pure quaternion [0, v].
Mat4 left_product(const Vec3& v) {
  Mat4 m;
  m << 0.0, -v.x(), -v.y(), -v.z(),
       v.x(), 0.0, -v.z(), v.y(),
       v.y(), v.z(), 0.0, -v.x(),
       v.z(), -v.y(), v.x(), 0.0;
  return m;
}

Mat4 right_product(const Vec3& v) {
  Mat4 m;
  m << 0.0, -v.x(), -v.y(), -v.z(),
       v.x(), 0.0, v.z(), -v.y(),
       v.y(), -v.z(), 0.0, v.x(),
       v.z(), v.y(), -v.x(), 0.0;
  return m;
}

// Linear interpolation of the pre-filter speed, clamped at the ends.
double speed_at(const std::vector<SpeedEstimate>& speeds, double t) {
  if (t <= speeds.front().t) return speeds.front().speed;
  if (t >= speeds.back().t) return speeds.back().speed;
  const auto it = std::lower_bound(speeds.begin(), speeds.end(), t,
                                   [](const SpeedEstimate& s, double value) { return s.t < value; });
  const SpeedEstimate& hi = *it;
  const SpeedEstimate& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return lo.speed + w * (hi.speed - lo.speed);
}

// Body rate around the boundary just before increment `after`.
Vec3 rate_around(const std::vector<ImuIncrement>& imu, std::size_t after) {
  if (after == 0) return imu[0].dtheta / (imu[1].t - imu[0].t);
  if (after >= imu.size()) return imu.back().dtheta / (imu.back().t - imu[imu.size() - 2].t);
  const double t_prev = after >= 2 ? imu[after - 2].t : imu[0].t - (imu[1].t - imu[0].t);
  return (imu[after - 1].dtheta + imu[after].dtheta) / (imu[after].t - t_prev);
}

}  // namespace

Mat3 accumulate_body_attitude(const Mat3& C_bb0, const Vec3& dth1, const Vec3& dth2) {
  return orthonormalize(C_bb0 * rotation_vector_to_dcm(coning_rotation_vector(dth1, dth2)));
}

Mat3 accumulate_nav_attitude(const Mat3& C_nn0, const Vec3& omega_in, double T) {
  if (T < 0.0) throw input_error("accumulate_nav_attitude: negative step");
  return orthonormalize(C_nn0 * rotation_vector_to_dcm(omega_in * T));
}

Vec3 gravity_integral_step(const Mat3& C_nn0, const Vec3& omega_in, const Vec3& g, double T) {
  return C_nn0 * (T * g + 0.5 * T * T * omega_in.cross(g));
}

Vec3 force_integral_step(const Mat3& C_bb0, const Vec3& dth1, const Vec3& dth2, const Vec3& dv1, const Vec3& dv2) {
  return C_bb0 * sculling_velocity_increment(dth1, dth2, dv1, dv2);
}

void AlignmentAccumulator::step(const ImuIncrement& first, const ImuIncrement& second, double T, const Vec3& omega_in,
                                const Vec3& g, const Vec3& coriolis_accel) {
  if (!(T > 0.0)) throw input_error("alignment step must be positive");
  alpha += force_integral_step(C_bb0, first.dtheta, second.dtheta, first.dvel, second.dvel);
  beta += gravity_integral_step(C_nn0, omega_in, g, T);
  coriolis += C_nn0 * coriolis_accel * T;
  C_bb0 = accumulate_body_attitude(C_bb0, first.dtheta, second.dtheta);
  C_nn0 = accumulate_nav_attitude(C_nn0, omega_in, T);
  elapsed += T;
}

ObservationPair alignment_observation(const AlignmentAccumulator& acc, const Vec3& y, const Vec3& y0,
                                      const Vec3& omega_ib, const Vec3& omega_ib0, const Vec3& lever_arm) {
  ObservationPair pair;
  pair.t = acc.elapsed;
  pair.a = acc.C_bb0 * (y - omega_ib.cross(lever_arm)) - (y0 - omega_ib0.cross(lever_arm)) - acc.alpha;
  pair.b = acc.beta - acc.coriolis;
  return pair;
}

Vec3 body_velocity(double y_odo, const CalibrationSet& calibration) {
  if (calibration.factor == 0.0) throw input_error("odometer factor must be nonzero");
  const double ct = std::cos(calibration.pitch);
  return (y_odo / calibration.factor) *
         Vec3(ct * std::cos(calibration.yaw), std::sin(calibration.pitch), -ct * std::sin(calibration.yaw));
}

AttitudeSolution solve_initial_attitude(const std::vector<ObservationPair>& pairs, double min_span_angle) {
  if (pairs.size() < 2) throw numerical_error("attitude solve needs at least two observation pairs");

  Eigen::MatrixXd directions(static_cast<Eigen::Index>(pairs.size()), 3);
  Eigen::Index rows = 0;
  Mat4 M = Mat4::Zero();
  for (const ObservationPair& pair : pairs) {
    const Mat4 D = left_product(pair.a) - right_product(pair.b);
    M += D.transpose() * D;
    const double norm = pair.b.norm();
    if (norm > 0.0) directions.row(rows++) = pair.b.transpose() / norm;
  }
  if (rows < 2) throw numerical_error("attitude solve: gravity-side vectors vanish");

  AttitudeSolution out;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(directions.topRows(rows));
  const Eigen::VectorXd s = svd.singularValues();
  out.span_angle = 2.0 * std::atan2(s[1], s[0]);
  if (out.span_angle <= min_span_angle)
    throw numerical_error("attitude solve: observation directions are collinear (span " +
                          std::to_string(out.span_angle) + " rad, singular values " + std::to_string(s[0]) + ", " +
                          std::to_string(s[1]) + ")");

  const Eigen::SelfAdjointEigenSolver<Mat4> eig(M);
  if (eig.info() != Eigen::Success) throw numerical_error("attitude solve: eigen-decomposition failed");
  const Eigen::Vector4d q = eig.eigenvectors().col(0);
  out.min_eigenvalue = eig.eigenvalues()[0];
  out.eigen_gap = eig.eigenvalues()[1] - eig.eigenvalues()[0];
  out.weak = out.eigen_gap <= 1e-12 * std::max(eig.eigenvalues()[3], 1e-300);
  const Mat3 C_nb0 = quaternion_to_dcm(Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
  out.C_bn0 = C_nb0.transpose();
  return out;
}

Vec3 initial_velocity(const Mat3& C_bn, const Vec3& y, const Vec3& omega_ib, const Vec3& lever_arm) {
  return C_bn * (y - omega_ib.cross(lever_arm));
}

std::vector<GeodeticPosition> dead_reckon(const EarthModel& earth, const GeodeticPosition& p0, const Mat3& C_bn0,
                                          const std::vector<AlignmentRecord>& history, const Vec3& lever_arm) {
  if (history.empty()) throw input_error("position restoration needs a history");
  double spacing = 0.0;
  for (std::size_t k = 1; k < history.size(); ++k) {
    const double dt = history[k].t - history[k - 1].t;
    if (!(dt > 0.0)) throw input_error("alignment history timestamps must increase");
    if (k == 1) spacing = dt;
    if (dt > 1.5 * spacing) throw input_error("alignment history has missing entries");
  }

  auto attitude = [&C_bn0](const AlignmentRecord& r) { return Mat3(r.C_nn0.transpose() * C_bn0 * r.C_bb0); };
  std::vector<GeodeticPosition> out;
  out.reserve(history.size());
  // Each step moves the IMU by the odometer-point displacement plus the change
  // of the lever-arm offset, so a still vehicle stays exactly at p0.
  GeodeticPosition p = p0;
  Mat3 C_prev = attitude(history.front());
  Vec3 v_prev = C_prev * history.front().y;
  out.push_back(p);
  for (std::size_t k = 1; k < history.size(); ++k) {
    const Mat3 C_bn = attitude(history[k]);
    const Vec3 v = C_bn * history[k].y;
    const Vec3 step = 0.5 * (v_prev + v) * (history[k].t - history[k - 1].t) + (C_prev - C_bn) * lever_arm;
    p = earth.displace(p, step);
    v_prev = v;
    C_prev = C_bn;
    out.push_back(p);
  }
  return out;
}

GeodeticPosition restore_position(const EarthModel& earth, const GeodeticPosition& p0, const Mat3& C_bn0,
                                  const std::vector<AlignmentRecord>& history, const Vec3& lever_arm) {
  return dead_reckon(earth, p0, C_bn0, history, lever_arm).back();
}

AlignmentResult align_in_motion(const std::vector<ImuIncrement>& imu, const std::vector<SpeedEstimate>& speeds,
                                const CalibrationSet& calibration, const GeodeticPosition& p0,
                                const AlignmentConfig& config) {
  if (imu.size() < 4) throw input_error("IMU stream too short");
  if (speeds.size() < 2) throw input_error("odometer speed stream too short");
  if (!(config.window > 0.0)) throw input_error("alignment window must be positive");
  check_monotonic(imu);
  check_monotonic(speeds);
  const EarthModel& earth = config.earth;
  const Vec3& lever = calibration.lever_arm;

  const double h = imu[1].t - imu[0].t;
  const double tol = 0.25 * h;
  const double t_imu0 = imu[0].t - h;

  // Start on a speed epoch that falls on an increment boundary.
  std::size_t i0 = imu.size();
  double t_s = 0.0;
  for (const SpeedEstimate& s : speeds) {
    if (s.t < t_imu0 + config.settle - tol) continue;
    if (std::abs(s.t - t_imu0) <= tol) {
      i0 = 0;
    } else {
      const auto it = std::lower_bound(imu.begin(), imu.end(), s.t - tol,
                                       [](const ImuIncrement& m, double value) { return m.t < value; });
      if (it == imu.end() || std::abs(it->t - s.t) > tol) continue;
      i0 = static_cast<std::size_t>(it - imu.begin()) + 1;
    }
    t_s = s.t;
    break;
  }
  if (i0 >= imu.size()) throw input_error("no speed epoch on an IMU boundary to start the alignment");

  const double T_pair = 2.0 * h;
  const std::size_t n = static_cast<std::size_t>(std::llround(config.window / T_pair));
  if (i0 + 2 * n > imu.size()) throw input_error("alignment window extends past the IMU data");

  auto y_at = [&](double t) { return body_velocity(speed_at(speeds, t) * config.nominal_factor, calibration); };
  const Vec3 y0 = y_at(t_s);
  const Vec3 w0 = rate_around(imu, i0);

  AlignmentResult out;
  out.t_start = t_s;
  out.p_start = p0;

  std::vector<GeodeticPosition> track_p;
  std::vector<Vec3> track_v;
  const int passes = 1 + std::max(0, config.refinement_passes);
  for (int pass = 0; pass < passes; ++pass) {
    const bool last = pass + 1 == passes;
    const bool refined = !track_p.empty();
    AlignmentAccumulator acc;
    std::vector<AlignmentRecord> history;
    history.reserve(n + 1);
    history.push_back({t_s, Mat3::Identity(), Mat3::Identity(), y0, w0});
    std::vector<ObservationPair> pairs;
    if (last) out.epochs.clear();

    std::size_t m = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = i0 + 2 * k;
      const double T = imu[i + 1].t - history.back().t;
      GeodeticPosition p = p0;
      Vec3 v = Vec3::Zero();
      if (refined) {
        p = track_p[k];
        v = 0.5 * (track_v[k] + track_v[k + 1]);
      }
      const Vec3 w_ie = earth.earth_rate(p);
      const Vec3 omega_in = refined ? Vec3(w_ie + earth.transport_rate(p, v)) : w_ie;
      acc.step(imu[i], imu[i + 1], T, omega_in, earth.gravity(p), refined ? Vec3(w_ie.cross(v)) : Vec3::Zero());

      const double t = imu[i + 1].t;
      history.push_back({t, acc.C_bb0, acc.C_nn0, y_at(t), rate_around(imu, i + 2)});

      while (m < speeds.size() && speeds[m].t < t - tol) ++m;
      if (m < speeds.size() && std::abs(speeds[m].t - t) <= tol) {
        pairs.push_back(alignment_observation(acc, history.back().y, y0, history.back().omega_ib, w0, lever));
        if (last && pairs.size() >= 2) {
          try {
            const AttitudeSolution sol = solve_initial_attitude(pairs, config.min_span_angle);
            out.epochs.push_back({t, sol.C_bn0, Mat3(acc.C_nn0.transpose() * sol.C_bn0 * acc.C_bb0)});
          } catch (const NavError&) {
            // Directions have not spread yet.
          }
        }
      }
    }

    out.solution = solve_initial_attitude(pairs, config.min_span_angle);
    track_p = dead_reckon(earth, p0, out.solution.C_bn0, history, lever);
    track_v.resize(history.size());
    for (std::size_t k = 0; k < history.size(); ++k) {
      const Mat3 C_bn = history[k].C_nn0.transpose() * out.solution.C_bn0 * history[k].C_bb0;
      track_v[k] = initial_velocity(C_bn, history[k].y, history[k].omega_ib, lever);
    }
    if (last) out.history = std::move(history);
  }

  const AlignmentRecord& end = out.history.back();
  out.t_end = end.t;
  out.state.t = end.t;
  out.state.C_bn = orthonormalize(end.C_nn0.transpose() * out.solution.C_bn0 * end.C_bb0);
  out.state.v = track_v.back();
  out.state.p = track_p.back();
  out.next_index = i0 + 2 * n;
  return out;
}

ProblemTwoResult run_problem_two(const std::vector<ImuIncrement>& imu, const std::vector<SpeedEstimate>& speeds,
                                 const CalibrationSet& calibration, const GeodeticPosition& p0,
                                 const ProblemTwoConfig& config) {
  ProblemTwoResult out;
  out.alignment = align_in_motion(imu, speeds, calibration, p0, config.alignment);

  FilterConfig filter = config.filter;
  filter.attitude_level_sigma = config.handoff_level_sigma;
  filter.attitude_heading_sigma = config.handoff_heading_sigma;
  filter.velocity_sigma = config.handoff_velocity_sigma;
  filter.position_sigma = config.handoff_position_sigma;
  NavigationFilter nav_filter(config.alignment.earth, filter, out.alignment.state, Biases{}, calibration,
                              initial_covariance(filter));
  run_filter(nav_filter, imu, speeds, out.alignment.next_index);
  out.run = collect(nav_filter);
  return out;
}

}  // namespace landnav
