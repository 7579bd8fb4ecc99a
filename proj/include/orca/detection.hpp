#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orca/metrics.hpp"
#include "orca/pulse.hpp"

namespace orca {

struct DetectionChain {
  double eta_det = 0.80;
  double eta_det_sigma = 0.08;
  double eta_trans = 0.56;
  double eta_trans_sigma = 0.04;
  double timing_jitter_sigma = 0.0;  // s
  double bin_width = 1e-12;          // s

  void validate() const;
  double efficiency() const { return eta_det * eta_trans; }
};

/// Start-stop histogram. Bin i covers [start + i w, start + (i + 1) w) with
/// start and w held in integer-valued picoseconds.
struct Histogram {
  std::int64_t start_ps = 0;
  std::int64_t bin_width_ps = 1;
  std::vector<std::uint64_t> counts;
  double acquisition_time = 0.0;  // s
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  std::size_t bins() const { return counts.size(); }
  double bin_width() const { return static_cast<double>(bin_width_ps) * 1e-12; }
  double bin_start(std::size_t i) const {
    return static_cast<double>(start_ps + static_cast<std::int64_t>(i) * bin_width_ps) * 1e-12;
  }
  double bin_center(std::size_t i) const { return bin_start(i) + 0.5 * bin_width(); }
  double span_begin() const { return bin_start(0); }
  double span_end() const { return bin_start(counts.size()); }
  std::uint64_t total() const;

  bool same_binning(const Histogram& other) const;

  void write_csv(std::ostream& os, const std::string& provenance = {}) const;
  static Histogram read_csv(std::istream& is);
};

/// Stream `index` of a master seed (SplitMix64 finalizer of seed and index).
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index);

struct SynthesisOptions {
  double signal_rate = 1e7;       // trials per second
  double noise_window = 500e-12;  // window the noise figure refers to
  double span_begin = 0.0;        // s; begin == end selects the envelope grid
  double span_end = 0.0;
};

/// Poisson realization of the expected counts
///   trials * eta_det * eta_trans * (integral_bin |E|^2 dt + noise * w / window).
Histogram synthesize_histogram(const SignalEnvelope& envelope, const DetectionChain& chain,
                               double noise_per_window, double acquisition_time,
                               std::uint64_t seed, const SynthesisOptions& opt = {});

/// Expected counts per bin before the Poisson draw.
std::vector<double> expected_counts(const SignalEnvelope& envelope, const DetectionChain& chain,
                                    double noise_per_window, std::uint64_t trials,
                                    std::int64_t start_ps, std::size_t bins,
                                    const SynthesisOptions& opt = {});

struct GaussianFit {
  double amplitude = 0.0;
  double center = 0.0;  // s
  double sigma = 0.0;   // s
  double baseline = 0.0;
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double chi2_dof = 0.0;
  int iterations = 0;

  double fwhm() const { return fwhm_per_sigma * sigma; }
  double center_error() const { return std::sqrt(covariance(1, 1)); }
};

struct PointFitOptions {
  bool fix_center = false;
  bool fix_baseline = false;
  double center = 0.0;
  double baseline = 0.0;
  int max_iterations = 200;
  double step_tolerance = 1e-6;
};

/// Weighted least squares of A exp(-(x - x0)^2 / (2 s^2)) + b. Weights are
/// inverse variances; fixed parameters keep their option values and get zero
/// covariance. Initialization by moments unless `guess` is supplied.
GaussianFit fit_gaussian_points(const std::vector<double>& x, const std::vector<double>& y,
                                const std::vector<double>& weight,
                                const PointFitOptions& opt = {},
                                const GaussianFit* guess = nullptr);

/// Fit over bins whose centre lies in [t0, t1), Poisson weights.
GaussianFit fit_gaussian(const Histogram& h, double t0, double t1);

/// Sum of bins whose left edge lies in [center - width/2, center + width/2).
std::uint64_t window_integrate(const Histogram& h, double center, double width = 500e-12);

struct AnalysisWindows {
  double read_in_center = 0.0;    // s
  double read_out_center = 660e-12;
  double width = 500e-12;
};

struct ExtractedEfficiencies {
  Measured mu_in;
  Measured noise;  // photons per window at the memory output
  Measured eta_read_in;
  Measured eta_read_out;
  Measured eta_mem;
  bool inconsistent = false;
  std::string note;
};

/// input_h is the control-off reference, memory_h has signal and controls,
/// noise_h has controls only.
ExtractedEfficiencies extract_efficiencies(const Histogram& input_h, const Histogram& memory_h,
                                           const Histogram& noise_h, const DetectionChain& chain,
                                           const AnalysisWindows& windows);

}  // namespace orca
