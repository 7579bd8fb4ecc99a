#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "orca/experiment.hpp"

namespace orca {

enum class Objective { eta_mem, eta_read_in };
enum class Basis { energy_only, gaussian, piecewise, chirped_gaussian };

Objective parse_objective(const std::string& name);
Basis parse_basis(const std::string& name);
std::string to_string(Objective o);
std::string to_string(Basis b);

struct ParameterBound {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

/// Maps a parameter vector onto the read-in control pulse.
///   energy_only       (energy_nj)
///   gaussian          (center_s, fwhm_s, energy_nj)
///   chirped_gaussian  (center_s, fwhm_s, energy_nj, chirp_rad_s2)
///   piecewise         (a_0 .. a_{n-1}) amplitudes on evenly spaced knots
/// Piecewise shapes always carry the full energy budget.
struct ControlParameterization {
  Basis basis = Basis::energy_only;
  std::vector<ParameterBound> bounds;
  double total_energy_budget_nj = 0.0;
  std::vector<double> knot_times;  // piecewise only, s

  static ControlParameterization energy_only(double lo_nj, double hi_nj);
  static ControlParameterization gaussian(const ControlPulse& reference, double budget_nj,
                                          bool chirped = false);
  /// Knots span the reference centre +- 2 FWHM.
  static ControlParameterization piecewise(const ControlPulse& reference, int n_knots,
                                           double budget_nj);

  std::size_t size() const { return bounds.size(); }
  void validate() const;
  bool feasible(const std::vector<double>& p) const;

  /// Parameters reproducing `reference` as closely as the basis allows.
  std::vector<double> initial(const ControlPulse& reference) const;
  ControlPulse build(const std::vector<double>& p, const ControlPulse& reference) const;
};

struct TraceEntry {
  std::vector<double> params;
  double objective = 0.0;  // NaN when the evaluation failed
  std::string error;
};

struct OptimizeOptions {
  int budget = 300;
  int max_restarts = 2;
  double initial_step = 0.1;    // in normalized coordinates
  double tolerance = 1e-4;      // relative objective spread over the simplex
  std::uint64_t seed = 0;
  int jobs = 1;
  std::vector<double> start;    // physical units; empty uses the midpoint
  std::map<std::vector<double>, double> cache;  // resumed evaluations
};

struct OptimizeResult {
  std::vector<double> best_params;
  double best_value = 0.0;
  double initial_value = 0.0;
  std::vector<TraceEntry> trace;
  bool converged = false;
  int evaluations = 0;
  int cache_hits = 0;
};

/// Box-constrained derivative-free maximization (Nelder-Mead with seeded
/// restarts) in coordinates normalized to the bounds. Non-finite or throwing
/// evaluations count as failures.
OptimizeResult maximize(const std::function<double(const std::vector<double>&)>& f,
                        const std::vector<ParameterBound>& bounds, OptimizeOptions options);

OptimizeResult optimize_control(Objective objective, const ControlParameterization& param,
                                const ModelSetup& setup, const PulseSequence& base,
                                OptimizeOptions options);

/// Objective of one control shape; the read-out control and signal stay fixed.
double evaluate_control(Objective objective, const ModelSetup& setup, const PulseSequence& base,
                        const ControlPulse& control_in);

struct RatioResult {
  double best_R = 0.0;
  double best_value = 0.0;
  std::vector<TraceEntry> trace;  // params = {R}
};

/// Golden-section search on log R over [r_min, r_max]; endpoints are always
/// evaluated and the best evaluated point is returned.
RatioResult optimize_ratio(const std::function<double(double)>& objective, double r_min,
                           double r_max, int budget);

/// eta_mem(R) at the base sequence's total control energy.
RatioResult optimize_ratio(const ModelSetup& setup, const PulseSequence& base, double r_min,
                           double r_max, int budget);

void write_trace_csv(std::ostream& os, const std::vector<std::string>& names,
                     const std::vector<TraceEntry>& trace, const std::string& provenance = {});
std::map<std::vector<double>, double> read_trace_csv(std::istream& is, std::size_t n_params);

}  // namespace orca
