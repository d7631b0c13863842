#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "landnav/inmotion.hpp"
#include "landnav/odoprefilter.hpp"
#include "landnav/simulator.hpp"

namespace landnav {

enum class ScenarioMode { Problem1, Problem2, Crosscheck };

/// Everything needed to re-run a simulation and its processing.
struct Scenario {
  std::string name = "scenario";
  ScenarioMode mode = ScenarioMode::Problem1;
  std::vector<std::uint64_t> seeds{1};
  std::string output = "out";

  std::vector<TrajectorySegment> segments;
  TruthConfig truth;
  ImuErrorModel imu = ImuErrorModel::navigation_grade();
  OdometerModel odometer;
  PrefilterConfig prefilter;

  ProblemOneConfig problem1;
  ProblemTwoConfig problem2;
  double alignment_start = 0.0;      // s, start of the in-motion alignment
  double crosscheck_factor_ratio = 0.994;  // dataset B factor over dataset A factor
  double truth_output_interval = 0.1;      // s, decimation of the truth CSV
};

const char* to_string(ScenarioMode mode);

/// Parses `key = value` lines grouped by `[section]` headers. Unknown keys
/// and malformed values throw with the offending line number.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);

/// Canonical text form. Angles are written in degrees, so reading it back
/// reproduces s up to the last bit of the unit conversions.
std::string write_scenario(const Scenario& scenario);

}  // namespace landnav
