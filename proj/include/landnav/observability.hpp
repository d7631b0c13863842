#pragma once

#include <Eigen/Dense>

#include "landnav/estimator.hpp"
#include "landnav/simulator.hpp"

namespace landnav {

struct ObservabilityConfig {
  double t_start = 0.0;
  double t_end = 0.0;        // <= t_start means the end of the trajectory
  double interval = 1.0;     // s between stacked measurement epochs
  double substep = 0.1;      // s, transition-matrix integration step
  /// Absolute floor on the singular values of the prior-scaled,
  /// noise-whitened matrix. A value of 1 asks whether the data carry more
  /// information than the prior; <= 0 selects the relative floor instead.
  double threshold = 0.0;
  /// Floor relative to the largest singular value.
  double relative_threshold = 1e-9;
  /// Evaluate F and H on a flat, non-rotating Earth. Earth and transport rates
  /// make almost every direction weakly observable over a long run; without
  /// them the rank reflects the vehicle motion alone.
  bool neglect_frame_rates = true;
  FilterConfig filter;       // prior sigmas and measurement noise used for scaling
};

struct ObservabilityResult {
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd right_vectors;  // columns pair with singular_values, in scaled coordinates
  int rank = 0;
  int epochs = 0;
};

/// Stacks H_k Phi(t_k, t_0) along the true trajectory. Position coupling is
/// left out of F, so the position columns are exactly null.
ObservabilityResult observability_analysis(const TruthTrajectory& truth, const CalibrationSet& calibration,
                                           const ObservabilityConfig& config);

}  // namespace landnav
