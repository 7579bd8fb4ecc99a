#pragma once

// Closed-loop generator for the histogram analysis chain, with the
// expected estimator values from erf window fractions.

#include <cmath>

#include "orca/detection.hpp"

namespace orca::testing {

struct Generator {
  double mu_in = 0.084;
  double eta_read_in = 0.6913;
  double eta_mem = 0.209;
  double noise = 9e-7;  // photons per window at the memory output
  double fwhm = 350e-12;
  double read_out_time = 660e-12;
  double acquisition_time = 120.0;
  DetectionChain chain;
};

struct Triple {
  Histogram input, memory, noise;
};

inline SynthesisOptions span_options() {
  SynthesisOptions o;
  o.span_begin = -1500e-12;
  o.span_end = 2000e-12;
  return o;
}

inline Triple synthesize_triple(const Generator& g, std::uint64_t seed) {
  const auto opt = span_options();
  const auto input = SignalEnvelope::gaussian(g.mu_in, g.fwhm, 0.0);
  const auto leak = SignalEnvelope::gaussian(g.mu_in * (1.0 - g.eta_read_in), g.fwhm, 0.0);
  const auto out = SignalEnvelope::gaussian(g.mu_in * g.eta_mem, g.fwhm, g.read_out_time);
  const auto none = SignalEnvelope::gaussian(0.0, g.fwhm, 0.0);
  Triple t;
  t.input = synthesize_histogram(input, g.chain, 0.0, g.acquisition_time, split_seed(seed, 1), opt);
  t.memory = synthesize_histogram(leak, g.chain, 0.0, g.acquisition_time, split_seed(seed, 2), opt);
  const auto retrieved =
      synthesize_histogram(out, g.chain, g.noise, g.acquisition_time, split_seed(seed, 3), opt);
  for (std::size_t i = 0; i < t.memory.counts.size(); ++i) t.memory.counts[i] += retrieved.counts[i];
  t.noise = synthesize_histogram(none, g.chain, g.noise, g.acquisition_time, split_seed(seed, 4), opt);
  return t;
}

struct Expected {
  double mu_in, eta_read_in, eta_mem, eta_read_out;
};

inline double window_fraction(double lo, double hi, double center, double fwhm) {
  const double s = fwhm / 2.3548200450309493 * std::sqrt(2.0);
  return 0.5 * (std::erf((hi - center) / s) - std::erf((lo - center) / s));
}

inline Expected expected_estimates(const Generator& g, const AnalysisWindows& w) {
  const double h = 0.5 * w.width;
  const double a_in = w.read_in_center - h, b_in = w.read_in_center + h;
  const double a_out = w.read_out_center - h, b_out = w.read_out_center + h;
  const double ref = g.mu_in * window_fraction(a_in, b_in, 0.0, g.fwhm);
  const double kept = g.mu_in * (1.0 - g.eta_read_in) * window_fraction(a_in, b_in, 0.0, g.fwhm) +
                      g.mu_in * g.eta_mem * window_fraction(a_in, b_in, g.read_out_time, g.fwhm);
  const double out = g.mu_in * (1.0 - g.eta_read_in) * window_fraction(a_out, b_out, 0.0, g.fwhm) +
                     g.mu_in * g.eta_mem * window_fraction(a_out, b_out, g.read_out_time, g.fwhm);
  return {ref, 1.0 - kept / ref, out / ref, out / (ref - kept)};
}

}  // namespace orca::testing
