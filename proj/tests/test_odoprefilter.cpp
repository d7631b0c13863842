#include <doctest.h>

#include <cmath>

#include "landnav/error.hpp"
#include "landnav/odoprefilter.hpp"
#include "landnav/simulator.hpp"

using namespace landnav;

namespace {

std::vector<OdometerReading> constant_rate(double rate, double duration, double dt) {
  std::vector<OdometerReading> out;
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k <= n; ++k) out.push_back({k * dt, rate * k * dt});
  return out;
}

bool spd(const Eigen::Matrix2d& P) {
  return (P - P.transpose()).cwiseAbs().maxCoeff() == 0.0 && P(0, 0) > 0.0 && P.determinant() > 0.0;
}

}  // namespace

TEST_SUITE("odoprefilter") {

TEST_CASE("constant pulse rate converges to rate over nominal factor") {
  const auto out = prefilter_stream(constant_rate(86.0, 60.0, 0.01), 8.6);
  REQUIRE(!out.empty());
  CHECK(out.back().speed == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(std::abs(out.back().acceleration) < 1e-6);
}

TEST_CASE("zero pulses keep the speed at zero") {
  const auto out = prefilter_stream(constant_rate(0.0, 30.0, 0.01), 8.6);
  for (const SpeedEstimate& e : out) CHECK(std::abs(e.speed) < 1e-12);
}

TEST_CASE("speed ramp 0 to 20 m/s over 30 s is tracked") {
  TruthConfig cfg;
  const TruthTrajectory truth =
      generate_truth({{SegmentKind::Pause, 5.0}, {SegmentKind::SpeedRamp, 30.0, 20.0}, {SegmentKind::Straight, 10.0}}, cfg);
  OdometerModel model;
  model.scale_drift_per_hour = 0.0;
  const auto out = prefilter_stream(synthesize_odometer(truth, model), model.scale_factor);
  auto rms_at_shift = [&](double shift) {
    double se = 0.0;
    int n = 0;
    for (const SpeedEstimate& e : out) {
      if (e.t < 5.0 || e.t > 35.0) continue;
      const double err = e.speed - truth.profile().at(e.t - shift).speed;
      se += err * err;
      ++n;
    }
    return std::sqrt(se / n);
  };
  const double rms = rms_at_shift(0.0);
  double best_shift = 0.0, best = rms;
  for (double s = -2.0; s <= 2.0; s += 0.01) {
    if (rms_at_shift(s) < best) {
      best = rms_at_shift(s);
      best_shift = s;
    }
  }
  MESSAGE("ramp rms " << rms << " lag " << best_shift);
  CHECK(rms < 0.05);
  CHECK(std::abs(best_shift) < 1.0);
}

TEST_CASE("unbiased at constant speed with quantized pulses") {
  TruthConfig cfg;
  const TruthTrajectory truth =
      generate_truth({{SegmentKind::SpeedRamp, 10.0, 13.7}, {SegmentKind::Straight, 190.0}}, cfg);
  OdometerModel model;
  model.scale_drift_per_hour = 0.0;
  model.quantize = true;
  // Averaged over every raw step: the 1 Hz samples alias the periodic
  // quantization pattern and a 60 s window holds a partial period.
  const auto readings = synthesize_odometer(truth, model);
  for (double start : {40.0, 100.0, 140.0}) {
    OdometerPrefilter f(model.scale_factor);
    double sum = 0.0;
    int n = 0;
    for (const OdometerReading& r : readings) {
      f.push(r);
      if (r.t < start || r.t >= start + 60.0) continue;
      sum += f.current().speed - 13.7;
      ++n;
    }
    CHECK(std::abs(sum / n) < 1e-3);
  }
}

TEST_CASE("covariance stays symmetric positive definite over a million steps") {
  SpeedEstimate s;
  double pulses = 0.0;
  bool ok = true;
  for (int k = 0; k < 1000000; ++k) {
    const double inc = std::floor(pulses + 0.86 + 0.3 * std::sin(k * 1e-3)) - std::floor(pulses);
    pulses += 0.86 + 0.3 * std::sin(k * 1e-3);
    s = prefilter_step(s, inc, 0.01, 8.6);
    ok = ok && spd(s.covariance);
  }
  CHECK(ok);
}

TEST_CASE("output cadence is exactly 1 Hz for any raw rate") {
  for (double dt : {0.01, 0.02, 0.005, 0.03}) {
    const auto out = prefilter_stream(constant_rate(50.0, 20.0, dt), 8.6);
    REQUIRE(out.size() >= 19);
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i].t - out[i - 1].t == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("negative increments are flagged and skipped") {
  OdometerPrefilter f(8.6);
  f.push({0.0, 100.0});
  f.push({0.01, 101.0});
  f.push({0.02, 50.0});
  CHECK(f.rejected_increments() == 1);
  CHECK(f.current().increment_rejected);
  CHECK_THROWS_AS(prefilter_step(SpeedEstimate{}, 1.0, 0.0, 8.6), NavError);
  CHECK_THROWS_AS(prefilter_step(SpeedEstimate{}, 1.0, 0.01, 0.0), NavError);
}

}  // TEST_SUITE
