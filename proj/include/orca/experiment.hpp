#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "orca/detection.hpp"
#include "orca/solver.hpp"

namespace orca {

inline constexpr double nanojoule = 1e-9;

struct ModelSetup {
  LadderScheme scheme;
  VaporEnsemble ensemble;
  SolverConfig solver;
};

struct PulseSequence {
  SignalEnvelope signal;
  ControlPulse control_in;
  ControlPulse control_out;
  double storage_time = 660e-12;          // s
  double repetition_rate_signal = 1e7;    // Hz
  double repetition_rate_control = 8e7;   // Hz
  bool hardware_timing = false;

  /// Signal centred at t = 0, read-in control on it, read-out control at T.
  /// Energies in nJ.
  static PulseSequence standard(double mu_in, double e_in_nj, double e_out_nj,
                                double storage_time, double signal_fwhm = 350e-12,
                                double control_bandwidth = 1e9, double chirp_rate = 0.0,
                                double rabi_area_per_joule = default_rabi_area_per_joule());

  /// E_out / E_in; infinite when the read-in control is off.
  double ratio_R() const;
  double total_energy_nj() const {
    return (control_in.energy() + control_out.energy()) / nanojoule;
  }

  PulseSequence with_storage_time(double storage_time) const;
  PulseSequence with_energies(double e_in_nj, double e_out_nj) const;
  PulseSequence with_mu_in(double mu_in) const;

  void validate() const;
};

MemoryRunResult run_sequence(const ModelSetup& setup, const PulseSequence& seq);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; results keep index order.
template <class F>
auto parallel_map(std::size_t n, int jobs, F fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

struct StoragePoint {
  double storage_time = 0.0;
  double eta_read_in = 0.0;
  double eta_read_out = 0.0;
  double eta_mem = 0.0;
  std::string error;  // empty on success
};

struct LifetimeFit {
  double amplitude = 0.0;
  double offset = 0.0;    // s
  double lifetime = 0.0;  // eta_read_out(T) = A exp(-(T - offset)^2 / tau^2)
  double lifetime_sigma = 0.0;
};

struct StorageSweep {
  std::vector<StoragePoint> points;
  std::optional<LifetimeFit> fit;
  std::string fit_error;
};

StorageSweep storage_time_sweep(const ModelSetup& setup, const PulseSequence& base,
                                const std::vector<double>& times, int jobs = 1);

/// Gaussian 1/e lifetime fitted to the samples at and after the maximum
/// (free offset, zero baseline); needs >= 3 such points.
LifetimeFit fit_lifetime(const std::vector<double>& times, const std::vector<double>& eta);

struct EnergyPoint {
  double total_energy_nj = 0.0;
  double e_in_nj = 0.0;
  double e_out_nj = 0.0;
  double eta_read_in = 0.0;
  double eta_read_out = 0.0;
  double eta_mem = 0.0;
  std::string error;
};

std::vector<EnergyPoint> energy_sweep(const ModelSetup& setup, const PulseSequence& base,
                                      const std::vector<double>& total_energies_nj,
                                      double ratio_R, int jobs = 1);

struct NoiseModel {
  double n0 = 5e-7;                       // photons per window
  double n1 = (9e-7 - 5e-7) / 4.17;       // photons per window per nJ
  double window = 500e-12;                // s

  void validate() const;
  double per_window(double control_total_energy_nj) const;
};

struct NoiseCounts {
  double per_window = 0.0;
  double total = 0.0;  // over n_trials windows
};

NoiseCounts noise_counts(const NoiseModel& model, double control_total_energy_nj,
                         std::uint64_t n_trials);

struct PhotonNumberRow {
  double mu_in = 0.0;
  double input = 0.0;
  double memory = 0.0;
  double noise = 0.0;
};

/// Expected input, retrieved and noise photons per window for each mu_in at
/// a fixed efficiency and noise level.
std::vector<PhotonNumberRow> photon_number_series(double eta_mem, double noise_per_window,
                                                  const std::vector<double>& mu_values);

}  // namespace orca
