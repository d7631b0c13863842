#include "landnav/odoprefilter.hpp"

#include <cmath>

#include "landnav/error.hpp"

namespace landnav {

namespace {

void predict(Eigen::Vector2d& x, Eigen::Matrix2d& P, double dt, double q) {
  Eigen::Matrix2d F;
  F << 1.0, dt, 0.0, 1.0;
  Eigen::Matrix2d Q;
  Q << q * dt * dt * dt / 3.0, q * dt * dt / 2.0, q * dt * dt / 2.0, q * dt;
  x = F * x;
  P = F * P * F.transpose() + Q;
}

}  // namespace

SpeedEstimate prefilter_step(const SpeedEstimate& state, double pulse_increment, double dt, double f_nominal,
                             const PrefilterConfig& config) {
  if (!(dt > 0.0)) throw input_error("prefilter_step: dt must be positive");
  if (!(f_nominal > 0.0)) throw input_error("prefilter_step: nominal factor must be positive");

  Eigen::Vector2d x(state.speed, state.acceleration);
  Eigen::Matrix2d P = state.covariance;
  predict(x, P, dt, config.accel_psd);

  SpeedEstimate out;
  out.t = state.t + dt;
  if (pulse_increment < 0.0) {
    out.speed = x[0];
    out.acceleration = x[1];
    out.covariance = P;
    out.increment_rejected = true;
    return out;
  }

  // Distance over the interval from the end-of-interval state: s dt - a dt^2/2.
  const Eigen::RowVector2d H(dt, -0.5 * dt * dt);
  const double sigma = config.measurement_sigma_pulses / f_nominal;
  const double r = sigma * sigma;
  const double innov = pulse_increment / f_nominal - H * x;
  const double s = H * P * H.transpose() + r;
  const Eigen::Vector2d K = P * H.transpose() / s;
  x += K * innov;
  const Eigen::Matrix2d I_KH = Eigen::Matrix2d::Identity() - K * H;
  P = I_KH * P * I_KH.transpose() + r * K * K.transpose();
  P = 0.5 * (P + P.transpose()).eval();

  out.speed = x[0];
  out.acceleration = x[1];
  out.covariance = P;
  return out;
}

OdometerPrefilter::OdometerPrefilter(double f_nominal, PrefilterConfig config)
    : f_nominal_(f_nominal), config_(config) {
  if (!(f_nominal > 0.0)) throw input_error("pre-filter nominal factor must be positive");
  if (!(config.output_interval > 0.0)) throw input_error("pre-filter output interval must be positive");
  state_.covariance = Eigen::Vector2d(config.initial_speed_sigma * config.initial_speed_sigma,
                                      config.initial_accel_sigma * config.initial_accel_sigma)
                          .asDiagonal();
}

std::optional<SpeedEstimate> OdometerPrefilter::push(const OdometerReading& reading) {
  constexpr double kEps = 1e-9;
  if (!last_) {
    last_ = reading;
    state_.t = reading.t;
    next_output_ = std::ceil(reading.t / config_.output_interval - kEps) * config_.output_interval;
    if (std::abs(next_output_ - reading.t) > kEps) return std::nullopt;
    next_output_ += config_.output_interval;
    SpeedEstimate e = state_;
    e.t = next_output_ - config_.output_interval;
    return e;
  }
  const double dt = reading.t - last_->t;
  if (!(dt > 0.0)) throw input_error("odometer timestamps must increase");

  // Epochs strictly inside the raw interval get the state propagated from
  // the previous reading; an epoch on the reading itself gets the update.
  std::optional<SpeedEstimate> out;
  while (next_output_ < reading.t - kEps) {
    SpeedEstimate e = state_;
    Eigen::Vector2d x(e.speed, e.acceleration);
    predict(x, e.covariance, next_output_ - state_.t, config_.accel_psd);
    e.speed = x[0];
    e.acceleration = x[1];
    e.t = next_output_;
    out = e;
    next_output_ += config_.output_interval;
  }

  state_ = prefilter_step(state_, reading.pulses - last_->pulses, dt, f_nominal_, config_);
  state_.t = reading.t;
  if (state_.increment_rejected) ++rejected_;
  last_ = reading;

  if (std::abs(next_output_ - reading.t) <= kEps) {
    SpeedEstimate e = state_;
    e.t = next_output_;
    out = e;
    next_output_ += config_.output_interval;
  }
  return out;
}

std::vector<SpeedEstimate> prefilter_stream(const std::vector<OdometerReading>& readings, double f_nominal,
                                            const PrefilterConfig& config) {
  OdometerPrefilter filter(f_nominal, config);
  std::vector<SpeedEstimate> out;
  for (const auto& r : readings) {
    if (auto e = filter.push(r)) out.push_back(*e);
  }
  return out;
}

}  // namespace landnav
