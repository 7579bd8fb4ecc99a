#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "orca/detection.hpp"
#include "orca/experiment.hpp"
#include "orca/optimizer.hpp"

namespace orca {

inline constexpr const char* artifact_version = "0.1.0";

struct SequenceConfig {
  double mu_in = 0.084;
  double signal_fwhm = 350e-12;       // s
  double e_in_nj = 0.57;
  double e_out_nj = 3.6;
  double storage_time = 660e-12;      // s
  double control_bandwidth = 1e9;     // Hz
  double chirp_rate = 0.0;            // rad/s^2
  double repetition_rate_signal = 1e7;
  double repetition_rate_control = 8e7;
  bool hardware_timing = false;
};

struct CalibrationConfig {
  bool enabled = false;  // false keeps solver.coupling_d2
  double target_read_in = 0.6913;
  double e_in_nj = 0.57;
  double e_out_nj = 3.6;
  double storage_time = 660e-12;
};

struct AcquisitionConfig {
  double acquisition_time = 120.0;  // s
  double read_in_center = 0.0;      // s
  double read_out_center = -1.0;    // s; negative selects sequence.storage_time
  double window_width = 500e-12;    // s
};

struct OptimizerConfig {
  std::string mode = "control";  // control | ratio
  Objective objective = Objective::eta_mem;
  Basis basis = Basis::piecewise;
  int knots = 8;
  int budget = 300;
  int max_restarts = 2;
  double tolerance = 1e-4;
  double energy_budget_nj = -1.0;  // negative selects sequence.e_in_nj
  double energy_min_nj = 0.05;     // energy_only bounds
  double energy_max_nj = 3.0;
  double r_min = 1.0;
  double r_max = 20.0;
};

struct SweepConfig {
  std::string axis;  // storage_time | energy | mu_in
  std::vector<double> values;
  double ratio_R = 6.4;
};

struct RunConfig {
  LadderScheme scheme;  // pathways come from the three vectors below
  std::vector<double> pathway_offsets;  // rad/s
  std::vector<double> pathway_weights;
  std::vector<double> pathway_phases;   // rad, optional
  double control_waist = 425e-6;  // m
  VaporEnsemble ensemble;
  SolverConfig solver;
  CalibrationConfig calibration;
  SequenceConfig sequence;
  NoiseModel noise;
  DetectionChain detection;
  AcquisitionConfig acquisition;
  OptimizerConfig optimizer;
  SweepConfig sweep;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int jobs = 1;

  void validate() const;

  HyperfinePathwaySet pathways() const;
  LadderScheme ladder() const;
  ModelSetup model() const;
  PulseSequence pulse_sequence() const;
  AnalysisWindows windows() const;
  double rabi_area_per_joule() const;

  /// Every key with its effective value, in parseable form.
  std::string canonical() const;
  /// FNV-1a 64 of canonical() with output_dir and jobs at their defaults, hex.
  std::string hash() const;
};

/// Strict parser for the config subset used here: [section] headers,
/// key = value lines with numbers, booleans, "strings" and [number arrays],
/// and # comments. Unknown sections or keys raise ConfigError naming them.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace orca
