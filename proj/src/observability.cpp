#include "landnav/observability.hpp"

#include <cmath>

#include "landnav/error.hpp"

namespace landnav {

ObservabilityResult observability_analysis(const TruthTrajectory& truth, const CalibrationSet& calibration,
                                           const ObservabilityConfig& config) {
  const auto& samples = truth.samples();
  if (samples.size() < 2) throw input_error("observability: trajectory too short");
  if (!(config.interval > 0.0) || !(config.substep > 0.0)) throw input_error("observability: steps must be positive");
  const double t_first = samples.front().nav.t;
  const double t_last = samples.back().nav.t;
  const double t0 = std::max(config.t_start, t_first);
  const double t1 = config.t_end > config.t_start ? std::min(config.t_end, t_last) : t_last;
  if (t1 <= t0) throw input_error("observability: empty time span");

  EarthModel earth = truth.config().earth;
  if (config.neglect_frame_rates) {
    earth.rotation_rate = 0.0;
    earth.semi_major_axis = 1e15;
    earth.flattening = 0.0;
  }
  const ErrorVector prior = initial_covariance(config.filter).diagonal().cwiseSqrt();
  const Eigen::Vector3d whiten(1.0 / (config.filter.odometer_sigma * std::abs(calibration.factor)),
                               1.0 / config.filter.nhc_sigma, 1.0 / config.filter.nhc_sigma);

  const int epochs = static_cast<int>(std::floor((t1 - t0) / config.interval + 1e-9)) + 1;
  Eigen::MatrixXd O(3 * epochs, es::kSize);
  TransitionMatrix phi = TransitionMatrix::Identity();
  double t = t0;
  for (int k = 0; k < epochs; ++k) {
    const double tk = t0 + k * config.interval;
    while (t < tk - 1e-9) {
      const double h = std::min(config.substep, tk - t);
      const TruthSample& mid = truth.sample_at(t + 0.5 * h);
      const Covariance F = error_dynamics(earth, mid.nav, mid.f_b, false);
      phi = (transition_matrix(F, h) * phi).eval();
      t += h;
    }
    const TruthSample& s = truth.sample_at(tk);
    Vec3 omega_ib = s.omega_ib_b;
    if (config.neglect_frame_rates) {
      const EarthModel& real = truth.config().earth;
      omega_ib -= s.nav.C_bn.transpose() * (real.earth_rate(s.nav.p) + real.transport_rate(s.nav.p, s.nav.v));
    }
    const MeasurementJacobian H = measurement_jacobian(earth, s.nav, calibration, omega_ib, Vec3::Zero());
    O.middleRows<3>(3 * k) = whiten.asDiagonal() * H * phi * prior.asDiagonal();
  }

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(O, Eigen::ComputeThinV);
  ObservabilityResult out;
  out.singular_values = svd.singularValues();
  out.right_vectors = svd.matrixV();
  out.epochs = epochs;
  const double floor = config.threshold > 0.0 ? config.threshold
                                              : config.relative_threshold * out.singular_values[0];
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
    if (out.singular_values[i] > floor) ++out.rank;
  return out;
}

}  // namespace landnav
