#include "landnav/estimator.hpp"

#include <cmath>

#include "landnav/error.hpp"

namespace landnav {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) throw input_error(std::string("filter config: ") + name + " must be positive");
}

// Zeroes rows and columns of blocks that are held fixed.
void mask_fixed_blocks(Covariance& P, const FilterConfig& config) {
  auto clear = [&P](int start, int size) {
    P.middleRows(start, size).setZero();
    P.middleCols(start, size).setZero();
  };
  if (!config.estimate_biases) {
    clear(es::kGyroBias, 3);
    clear(es::kAccelBias, 3);
  }
  if (!config.estimate_calibration) clear(es::kYaw, 6);
}

// Symmetrizes and floors negative eigenvalues; returns true when a floor was needed.
bool repair_covariance(Covariance& P) {
  P = 0.5 * (P + P.transpose()).eval();
  const double scale = std::max(P.diagonal().maxCoeff(), 0.0);
  const Eigen::LDLT<Covariance> ldlt(P);
  if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -1e-12 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Covariance> eig(P);
  if (eig.info() != Eigen::Success) throw numerical_error("covariance eigen-decomposition failed");
  const ErrorVector floored = eig.eigenvalues().cwiseMax(0.0);
  P = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
  P = 0.5 * (P + P.transpose()).eval();
  return true;
}

}  // namespace

void FilterConfig::validate() const {
  require_positive(attitude_level_sigma, "attitude_level_sigma");
  require_positive(attitude_heading_sigma, "attitude_heading_sigma");
  require_positive(velocity_sigma, "velocity_sigma");
  require_positive(position_sigma, "position_sigma");
  require_positive(gyro_bias_sigma, "gyro_bias_sigma");
  require_positive(accel_bias_sigma, "accel_bias_sigma");
  require_positive(angle_sigma, "angle_sigma");
  require_positive(lever_sigma, "lever_sigma");
  require_positive(factor_sigma, "factor_sigma");
  require_positive(gyro_noise_psd, "gyro_noise_psd");
  require_positive(accel_noise_psd, "accel_noise_psd");
  require_positive(gyro_bias_psd, "gyro_bias_psd");
  require_positive(accel_bias_psd, "accel_bias_psd");
  require_positive(angle_psd, "angle_psd");
  require_positive(lever_psd, "lever_psd");
  require_positive(factor_psd, "factor_psd");
  require_positive(odometer_sigma, "odometer_sigma");
  require_positive(nhc_sigma, "nhc_sigma");
  require_positive(zupt_sigma, "zupt_sigma");
  require_positive(covariance_interval, "covariance_interval");
  if (nominal_factor == 0.0 || !std::isfinite(nominal_factor)) throw input_error("filter config: nominal_factor must be nonzero");
  if (!std::isfinite(gate)) throw input_error("filter config: gate must be finite");
}

Covariance error_dynamics(const EarthModel& earth, const NavState& nav, const Vec3& f_b, bool position_coupling) {
  const GeodeticPosition& p = nav.p;
  const Vec3& v = nav.v;
  const CurvatureRadii r = earth.radii(p.latitude);
  const double rn = r.meridian + p.height;
  const double re = r.transverse + p.height;
  const double sl = std::sin(p.latitude);
  const double cl = std::cos(p.latitude);
  const double tl = sl / cl;
  const double omega = earth.rotation_rate;

  const Vec3 w_ie = earth.earth_rate(p);
  const Vec3 w_en = earth.transport_rate(p, v);
  const Vec3 w_in = w_ie + w_en;
  const Vec3 f_n = nav.C_bn * f_b;

  // Transport rate sensitivity to velocity.
  Mat3 den_dv = Mat3::Zero();
  den_dv(0, kEast) = 1.0 / re;
  den_dv(1, kEast) = tl / re;
  den_dv(2, kNorth) = -1.0 / rn;

  // Earth and transport rate sensitivity to position (N, U, E metres).
  Mat3 die_dp = Mat3::Zero();
  die_dp(0, kNorth) = -omega * sl / rn;
  die_dp(1, kNorth) = omega * cl / rn;
  Mat3 den_dp = Mat3::Zero();
  den_dp(1, kNorth) = v[kEast] / (re * cl * cl) / rn;
  den_dp(0, kUp) = -v[kEast] / (re * re);
  den_dp(1, kUp) = -v[kEast] * tl / (re * re);
  den_dp(2, kUp) = v[kNorth] / (rn * rn);

  Covariance F = Covariance::Zero();
  F.block<3, 3>(es::kAtt, es::kAtt) = -skew(w_in);
  F.block<3, 3>(es::kAtt, es::kVel) = den_dv;
  F.block<3, 3>(es::kAtt, es::kGyroBias) = nav.C_bn;

  F.block<3, 3>(es::kVel, es::kAtt) = skew(f_n);
  F.block<3, 3>(es::kVel, es::kVel) = -skew(2.0 * w_ie + w_en) + skew(v) * den_dv;
  F.block<3, 3>(es::kVel, es::kAccelBias) = -nav.C_bn;

  F.block<3, 3>(es::kPos, es::kVel) = Mat3::Identity();

  if (position_coupling) {
    F.block<3, 3>(es::kAtt, es::kPos) = die_dp + den_dp;
    Mat3 dv_dp = skew(v) * (2.0 * die_dp + den_dp);
    const double radius = std::sqrt(r.meridian * r.transverse) + p.height;
    dv_dp(kUp, kUp) += 2.0 * earth.gravity_magnitude(p) / radius;
    F.block<3, 3>(es::kVel, es::kPos) = dv_dp;
  }
  return F;
}

TransitionMatrix transition_matrix(const Covariance& F, double dt) {
  if (dt < 0.0 || !std::isfinite(dt)) throw input_error("transition matrix: dt must be non-negative");
  const Covariance A = F * dt;
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Covariance scaled = A / std::ldexp(1.0, squarings);

  TransitionMatrix phi = TransitionMatrix::Identity();
  Covariance term = TransitionMatrix::Identity();
  for (int k = 1; k < 40; ++k) {
    term = (term * scaled / k).eval();
    phi += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-18 * phi.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) phi = (phi * phi).eval();
  return phi;
}

Covariance process_noise_density(const FilterConfig& config) {
  ErrorVector q = ErrorVector::Zero();
  q.segment<3>(es::kAtt).setConstant(config.gyro_noise_psd);
  q.segment<3>(es::kVel).setConstant(config.accel_noise_psd);
  if (config.estimate_biases) {
    q.segment<3>(es::kGyroBias).setConstant(config.gyro_bias_psd);
    q.segment<3>(es::kAccelBias).setConstant(config.accel_bias_psd);
  }
  if (config.estimate_calibration) {
    q[es::kYaw] = config.angle_psd;
    q[es::kPitch] = config.angle_psd;
    q.segment<3>(es::kLever).setConstant(config.lever_psd);
    q[es::kFactor] = config.factor_psd * config.nominal_factor * config.nominal_factor;
  }
  return q.asDiagonal();
}

Covariance initial_covariance(const FilterConfig& config) {
  ErrorVector s;
  s.segment<3>(es::kAtt) << config.attitude_level_sigma, config.attitude_heading_sigma, config.attitude_level_sigma;
  s.segment<3>(es::kVel).setConstant(config.velocity_sigma);
  s.segment<3>(es::kPos).setConstant(config.position_sigma);
  s.segment<3>(es::kGyroBias).setConstant(config.gyro_bias_sigma);
  s.segment<3>(es::kAccelBias).setConstant(config.accel_bias_sigma);
  s[es::kYaw] = config.angle_sigma;
  s[es::kPitch] = config.angle_sigma;
  s.segment<3>(es::kLever).setConstant(config.lever_sigma);
  s[es::kFactor] = config.factor_sigma * std::abs(config.nominal_factor);
  Covariance P = s.cwiseAbs2().asDiagonal();
  mask_fixed_blocks(P, config);
  return P;
}

PredictResult ekf_predict(const EarthModel& earth, const NavState& nav, const Vec3& f_b, const Covariance& P,
                          const FilterConfig& config, double dt) {
  if (dt < 0.0 || !std::isfinite(dt)) throw input_error("ekf_predict: dt must be non-negative");
  PredictResult out;
  if (dt == 0.0) {
    out.P = P;
    return out;
  }
  const Covariance F = error_dynamics(earth, nav, f_b, config.position_coupling);
  const TransitionMatrix phi = transition_matrix(F, dt);
  const Covariance Qc = process_noise_density(config);
  const Covariance Qd = 0.5 * (phi * Qc * phi.transpose() + Qc) * dt;
  out.P = phi * P * phi.transpose() + Qd;
  mask_fixed_blocks(out.P, config);
  out.repaired = repair_covariance(out.P);
  return out;
}

UpdateResult ekf_update(const Covariance& P, const Eigen::VectorXd& innovation, const Eigen::MatrixXd& H,
                        const Eigen::MatrixXd& R, double gate) {
  const Eigen::Index m = innovation.size();
  if (H.rows() != m || H.cols() != es::kSize || R.rows() != m || R.cols() != m)
    throw input_error("ekf_update: dimension mismatch");
  if (!innovation.allFinite() || !H.allFinite()) throw numerical_error("ekf_update: non-finite innovation or H");

  UpdateResult out;
  out.P = P;
  const Eigen::MatrixXd PHt = P * H.transpose();
  const Eigen::MatrixXd S = H * PHt + R;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw numerical_error("ekf_update: innovation covariance not positive definite");
  out.mahalanobis = std::sqrt(innovation.dot(llt.solve(innovation)));
  if (gate > 0.0 && out.mahalanobis >= gate) return out;

  const Eigen::MatrixXd K = llt.solve(PHt.transpose()).transpose();
  out.correction = K * innovation;
  const Covariance IKH = Covariance::Identity() - K * H;
  out.P = IKH * P * IKH.transpose() + K * R * K.transpose();
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  out.accepted = true;
  return out;
}

Mat3 static_coarse_align(const Vec3& omega_ib, const Vec3& f_b, const GeodeticPosition& p,
                         const EarthModel& earth) {
  if (std::abs(p.latitude) >= 89.0 * kDeg) throw numerical_error("static alignment is degenerate above 89 deg latitude");
  if (f_b.norm() < 1.0) throw input_error("static alignment: specific force too small for a stationary IMU");

  auto triad = [](const Vec3& up, const Vec3& rate) {
    Mat3 T;
    T.col(0) = up.normalized();
    T.col(1) = up.cross(rate).normalized();
    T.col(2) = T.col(0).cross(T.col(1));
    return T;
  };
  const Vec3 f_n(0.0, earth.gravity_magnitude(p), 0.0);
  const Vec3 w_n = earth.earth_rate(p);
  if (f_b.cross(omega_ib).norm() < 1e-3 * f_b.norm() * w_n.norm() * std::cos(89.0 * kDeg))
    throw numerical_error("static alignment: rate and specific force are parallel");
  return orthonormalize(triad(f_n, w_n) * triad(f_b, omega_ib).transpose());
}

ImuAverage average_imu(const std::vector<ImuIncrement>& imu, std::size_t begin, std::size_t end) {
  if (end > imu.size() || end < begin + 2) throw input_error("average_imu: need at least two increments");
  ImuAverage out;
  const double h0 = imu[begin + 1].t - imu[begin].t;
  out.duration = imu[end - 1].t - (imu[begin].t - h0);
  Vec3 sum_th = Vec3::Zero(), sum_v = Vec3::Zero();
  for (std::size_t i = begin; i < end; ++i) {
    sum_th += imu[i].dtheta;
    sum_v += imu[i].dvel;
  }
  out.omega_ib = sum_th / out.duration;
  out.f_b = sum_v / out.duration;

  double var_w = 0.0, var_f = 0.0;
  double prev = imu[begin].t - h0;
  for (std::size_t i = begin; i < end; ++i) {
    const double h = imu[i].t - prev;
    prev = imu[i].t;
    var_w += (imu[i].dtheta / h - out.omega_ib).squaredNorm();
    var_f += (imu[i].dvel / h - out.f_b).squaredNorm();
  }
  const double n = static_cast<double>(end - begin);
  out.gyro_std = std::sqrt(var_w / n);
  out.accel_std = std::sqrt(var_f / n);
  return out;
}

NavigationFilter::NavigationFilter(EarthModel earth, FilterConfig config, NavState nav, Biases biases,
                                   CalibrationSet calibration, Covariance P)
    : earth_(earth), config_(config), nav_(nav), biases_(biases), calib_(calibration), P_(P) {
  config_.validate();
  if (!P_.allFinite()) throw input_error("initial covariance is not finite");
  mask_fixed_blocks(P_, config_);
  repair_covariance(P_);
}

void NavigationFilter::propagate(const ImuIncrement& first, const ImuIncrement& second) {
  const double h1 = first.t - nav_.t;
  const double h2 = second.t - first.t;
  if (!(h1 > 0.0) || !(h2 > 0.0)) throw input_error("IMU timestamps must increase");
  ImuIncrement a = first, b = second;
  a.dtheta -= biases_.gyro * h1;
  b.dtheta -= biases_.gyro * h2;
  a.dvel -= biases_.accel * h1;
  b.dvel -= biases_.accel * h2;
  nav_ = mechanize_step(earth_, nav_, a, b);
  omega_ib_ = (first.dtheta + second.dtheta) / (h1 + h2);
  pending_dv_ += a.dvel + b.dvel;
  pending_time_ += h1 + h2;
  if (pending_time_ >= config_.covariance_interval - 1e-9) flush_covariance();
}

void NavigationFilter::flush_covariance() {
  if (pending_time_ <= 0.0) return;
  const PredictResult r = ekf_predict(earth_, nav_, pending_dv_ / pending_time_, P_, config_, pending_time_);
  P_ = r.P;
  if (r.repaired) ++diag_.covariance_repairs;
  pending_dv_.setZero();
  pending_time_ = 0.0;
}

bool NavigationFilter::apply(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R) {
  const UpdateResult r = ekf_update(P_, innovation, H, R, config_.gate);
  if (!r.accepted) return false;
  P_ = r.P;
  feedback(r.correction);
  ++diag_.updates;
  return true;
}

void NavigationFilter::feedback(const ErrorVector& dx) {
  nav_.C_bn = orthonormalize(rotation_vector_to_dcm(dx.segment<3>(es::kAtt)) * nav_.C_bn);
  nav_.v -= dx.segment<3>(es::kVel);
  nav_.p = earth_.displace(nav_.p, -dx.segment<3>(es::kPos));
  if (config_.estimate_biases) {
    biases_.gyro -= dx.segment<3>(es::kGyroBias);
    biases_.accel -= dx.segment<3>(es::kAccelBias);
  }
  if (config_.estimate_calibration) {
    calib_.yaw = wrap_angle(calib_.yaw - dx[es::kYaw]);
    calib_.pitch = wrap_angle(calib_.pitch - dx[es::kPitch]);
    calib_.lever_arm -= dx.segment<3>(es::kLever);
    calib_.factor -= dx[es::kFactor];
  }
}

void NavigationFilter::update(const SpeedEstimate& speed) {
  flush_covariance();
  FilterEpoch epoch;
  epoch.zupt = config_.use_zupt && std::abs(speed.speed) < config_.stationary_speed;

  if (epoch.zupt) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(3, es::kSize);
    H.block<3, 3>(0, es::kVel).setIdentity();
    const Eigen::MatrixXd R = Eigen::Matrix3d::Identity() * (config_.zupt_sigma * config_.zupt_sigma);
    apply(nav_.v, H, R);
  }

  {
    const Vec3 y = measurement_predict(earth_, nav_, calib_, omega_ib_, biases_.gyro);
    const MeasurementJacobian Hfull = measurement_jacobian(earth_, nav_, calib_, omega_ib_, biases_.gyro);
    const double sigma = config_.odometer_sigma * config_.nominal_factor;
    Eigen::VectorXd z(1);
    z[0] = y[0] - speed.speed * config_.nominal_factor;
    const Eigen::MatrixXd H = Hfull.topRows<1>();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, sigma * sigma);
    if (!apply(z, H, R)) ++diag_.odometer_rejections;
  }
  {
    const Vec3 y = measurement_predict(earth_, nav_, calib_, omega_ib_, biases_.gyro);
    const MeasurementJacobian Hfull = measurement_jacobian(earth_, nav_, calib_, omega_ib_, biases_.gyro);
    const Eigen::VectorXd z = y.tail<2>() - speed.constraint_velocity;
    const Eigen::MatrixXd H = Hfull.bottomRows<2>();
    const Eigen::MatrixXd R = Eigen::Matrix2d::Identity() * (config_.nhc_sigma * config_.nhc_sigma);
    if (!apply(z, H, R)) ++diag_.nhc_rejections;
  }

  epoch.t = nav_.t;
  epoch.nav = nav_;
  epoch.biases = biases_;
  epoch.calibration = calib_;
  epoch.sigma = P_.diagonal().cwiseMax(0.0).cwiseSqrt();
  epochs_.push_back(epoch);
}

void check_monotonic(const std::vector<ImuIncrement>& imu) {
  for (std::size_t i = 1; i < imu.size(); ++i)
    if (!(imu[i].t > imu[i - 1].t)) throw input_error("IMU timestamps are not strictly increasing");
}

void check_monotonic(const std::vector<SpeedEstimate>& speeds) {
  for (std::size_t i = 1; i < speeds.size(); ++i)
    if (!(speeds[i].t > speeds[i - 1].t)) throw input_error("odometer speed timestamps are not strictly increasing");
}

void run_filter(NavigationFilter& filter, const std::vector<ImuIncrement>& imu,
                const std::vector<SpeedEstimate>& speeds, std::size_t first) {
  if (first + 1 >= imu.size()) return;
  const double tol = 0.25 * (imu[first + 1].t - imu[first].t);
  std::size_t k = 0;
  while (k < speeds.size() && speeds[k].t < filter.nav().t - tol) ++k;
  auto consume = [&]() {
    while (k < speeds.size() && speeds[k].t <= filter.nav().t + tol) {
      filter.update(speeds[k]);
      ++k;
    }
  };
  consume();
  for (std::size_t i = first; i + 1 < imu.size(); i += 2) {
    filter.propagate(imu[i], imu[i + 1]);
    consume();
  }
  filter.flush_covariance();
}

FilterRun collect(const NavigationFilter& filter) {
  return {filter.epochs(), filter.nav(), filter.biases(), filter.calibration(), filter.covariance(),
          filter.diagnostics()};
}

ProblemOneResult run_problem_one(const std::vector<ImuIncrement>& imu, const std::vector<SpeedEstimate>& speeds,
                                 const GeodeticPosition& p0, const ProblemOneConfig& config) {
  if (imu.size() < 4) throw input_error("IMU stream too short");
  if (speeds.empty()) throw input_error("odometer speed stream is empty");
  check_monotonic(imu);
  check_monotonic(speeds);

  const double t0 = imu[0].t - (imu[1].t - imu[0].t);
  double window_end = t0 + config.alignment_window;
  for (const SpeedEstimate& s : speeds) {
    if (std::abs(s.speed) >= config.filter.stationary_speed) {
      window_end = std::min(window_end, s.t - 1.0);
      break;
    }
  }
  if (window_end - t0 < config.min_alignment_window) throw input_error("data does not begin with a stationary window");

  std::size_t end = 0;
  while (end < imu.size() && imu[end].t <= window_end + 1e-9) ++end;
  end -= end % 2;
  const ImuAverage avg = average_imu(imu, 0, end);
  if (avg.gyro_std > config.stationary.gyro_std || avg.accel_std > config.stationary.accel_std)
    throw input_error("motion detected in the alignment window");

  ProblemOneResult out;
  out.coarse_attitude = static_coarse_align(avg.omega_ib, avg.f_b, p0, config.earth);
  out.alignment_end = t0 + avg.duration;

  NavState nav;
  nav.C_bn = out.coarse_attitude;
  nav.p = p0;
  nav.t = t0;
  NavigationFilter filter(config.earth, config.filter, nav, Biases{}, config.initial_calibration,
                          initial_covariance(config.filter));
  run_filter(filter, imu, speeds, 0);
  out.run = collect(filter);
  return out;
}

}  // namespace landnav
