#include "orca/experiment.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "orca/error.hpp"

namespace orca {

namespace {

constexpr double hardware_period = 12.5e-9;

}  // namespace

PulseSequence PulseSequence::standard(double mu_in, double e_in_nj, double e_out_nj,
                                      double storage_time, double signal_fwhm,
                                      double control_bandwidth, double chirp_rate,
                                      double rabi_area_per_joule) {
  PulseSequence s;
  s.signal = SignalEnvelope::gaussian(mu_in, signal_fwhm, 0.0);
  s.control_in = ControlPulse::gaussian(e_in_nj * nanojoule, 0.0, control_bandwidth, chirp_rate,
                                        rabi_area_per_joule);
  s.control_out = ControlPulse::gaussian(e_out_nj * nanojoule, storage_time, control_bandwidth,
                                         chirp_rate, rabi_area_per_joule);
  s.storage_time = storage_time;
  return s;
}

double PulseSequence::ratio_R() const {
  if (control_in.energy() == 0.0)
    return control_out.energy() == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                       : std::numeric_limits<double>::infinity();
  return control_out.energy() / control_in.energy();
}

PulseSequence PulseSequence::with_storage_time(double t) const {
  PulseSequence s = *this;
  s.storage_time = t;
  s.control_out = control_out.with_center(control_in.center_time() + t);
  return s;
}

PulseSequence PulseSequence::with_energies(double e_in_nj, double e_out_nj) const {
  PulseSequence s = *this;
  s.control_in = control_in.with_energy(e_in_nj * nanojoule);
  s.control_out = control_out.with_energy(e_out_nj * nanojoule);
  return s;
}

PulseSequence PulseSequence::with_mu_in(double mu_in) const {
  PulseSequence s = *this;
  if (signal.is_tabulated()) {
    const double mu = signal.photon_number();
    if (mu == 0.0) throw DomainError("cannot rescale an empty tabulated signal");
    s.signal = signal.scaled(std::sqrt(mu_in / mu));
  } else {
    s.signal = SignalEnvelope::gaussian(mu_in, signal.fwhm(), signal.center_time());
  }
  return s;
}

void PulseSequence::validate() const {
  if (!(storage_time >= 0.0)) throw ConfigError("sequence.storage_time must be >= 0");
  if (!(repetition_rate_signal > 0.0) || !(repetition_rate_control > 0.0))
    throw ConfigError("repetition rates must be positive");
  const double sep = control_out.center_time() - control_in.center_time();
  if (std::abs(sep - storage_time) > 1e-15 + 1e-9 * storage_time)
    throw ConfigError("control separation does not equal sequence.storage_time");
  if (hardware_timing) {
    const double k = storage_time / hardware_period;
    if (std::abs(k - std::round(k)) > 1e-6) {
      std::ostringstream os;
      os << "hardware timing needs storage_time to be a multiple of " << hardware_period
         << " s, got " << storage_time;
      throw ConfigError(os.str());
    }
  }
}

MemoryRunResult run_sequence(const ModelSetup& setup, const PulseSequence& seq) {
  seq.validate();
  MemoryRunResult r = run_memory(setup.scheme, setup.ensemble, seq.signal, seq.control_in,
                                 seq.control_out, seq.storage_time, setup.solver);
  return r;
}

namespace {

std::string tagged(const char* axis, double value, const std::exception& e) {
  std::ostringstream os;
  os << axis << "=" << value << ": " << e.what();
  return os.str();
}

}  // namespace

LifetimeFit fit_lifetime(const std::vector<double>& times, const std::vector<double>& eta) {
  if (times.size() != eta.size()) throw FitError("lifetime fit inputs differ in length");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
  // Decay branch: from the efficiency maximum onwards.
  std::size_t peak = 0;
  for (std::size_t k = 1; k < order.size(); ++k)
    if (eta[order[k]] > eta[order[peak]]) peak = k;
  std::vector<double> t, y;
  for (std::size_t k = peak; k < order.size(); ++k) {
    t.push_back(times[order[k]]);
    y.push_back(eta[order[k]]);
  }
  if (t.size() < 3) throw FitError("lifetime fit needs >= 3 points at or after the maximum");
  PointFitOptions opt;
  opt.fix_baseline = true;
  const std::vector<double> w(t.size(), 1.0);
  const GaussianFit g = fit_gaussian_points(t, y, w, opt);
  LifetimeFit f;
  f.amplitude = g.amplitude;
  f.offset = g.center;
  f.lifetime = std::sqrt(2.0) * g.sigma;
  // Unit weights: scale the covariance by the residual variance.
  f.lifetime_sigma = std::sqrt(2.0 * g.covariance(2, 2) * g.chi2_dof);
  return f;
}

StorageSweep storage_time_sweep(const ModelSetup& setup, const PulseSequence& base,
                                const std::vector<double>& times, int jobs) {
  if (times.empty()) throw ConfigError("storage-time sweep needs at least one time");
  for (double t : times)
    if (!(t >= 0.0)) throw ConfigError("storage times must be >= 0");
  StorageSweep sweep;
  sweep.points = parallel_map(times.size(), jobs, [&](std::size_t i) {
    StoragePoint p;
    p.storage_time = times[i];
    try {
      const auto r = run_sequence(setup, base.with_storage_time(times[i]));
      p.eta_read_in = r.eta_read_in;
      p.eta_read_out = r.eta_read_out;
      p.eta_mem = r.eta_mem;
    } catch (const std::exception& e) {
      p.error = tagged("T", times[i], e);
    }
    return p;
  });

  std::vector<double> t, eta;
  for (const auto& p : sweep.points)
    if (p.error.empty()) {
      t.push_back(p.storage_time);
      eta.push_back(p.eta_read_out);
    }
  try {
    sweep.fit = fit_lifetime(t, eta);
  } catch (const Error& e) {
    sweep.fit_error = e.what();
  }
  return sweep;
}

std::vector<EnergyPoint> energy_sweep(const ModelSetup& setup, const PulseSequence& base,
                                      const std::vector<double>& totals, double ratio_R,
                                      int jobs) {
  if (!(ratio_R > 0.0) || !std::isfinite(ratio_R)) throw ConfigError("ratio R must be positive");
  for (double e : totals)
    if (!(e > 0.0)) throw ConfigError("sweep energies must be positive");
  return parallel_map(totals.size(), jobs, [&](std::size_t i) {
    EnergyPoint p;
    p.total_energy_nj = totals[i];
    p.e_in_nj = totals[i] / (1.0 + ratio_R);
    p.e_out_nj = totals[i] - p.e_in_nj;
    try {
      const auto r = run_sequence(setup, base.with_energies(p.e_in_nj, p.e_out_nj));
      p.eta_read_in = r.eta_read_in;
      p.eta_read_out = r.eta_read_out;
      p.eta_mem = r.eta_mem;
    } catch (const std::exception& e) {
      p.error = tagged("E", totals[i], e);
    }
    return p;
  });
}

void NoiseModel::validate() const {
  if (!(n0 >= 0.0) || !(n1 >= 0.0)) throw ConfigError("noise.n0 and noise.n1 must be >= 0");
  if (!(window > 0.0)) throw ConfigError("noise.window must be positive");
}

double NoiseModel::per_window(double e_nj) const {
  if (!(e_nj >= 0.0)) throw DomainError("control energy must be >= 0");
  return n0 + n1 * e_nj;
}

NoiseCounts noise_counts(const NoiseModel& model, double e_nj, std::uint64_t n_trials) {
  model.validate();
  if (n_trials < 1) throw DomainError("noise_counts needs n_trials >= 1");
  NoiseCounts c;
  c.per_window = model.per_window(e_nj);
  c.total = c.per_window * static_cast<double>(n_trials);
  return c;
}

std::vector<PhotonNumberRow> photon_number_series(double eta_mem, double noise,
                                                  const std::vector<double>& mu_values) {
  if (!(eta_mem >= 0.0 && eta_mem <= 1.0)) throw DomainError("eta_mem must lie in [0, 1]");
  std::vector<PhotonNumberRow> rows;
  rows.reserve(mu_values.size());
  for (double mu : mu_values) {
    if (!(mu >= 0.0)) throw DomainError("mu_in must be >= 0");
    rows.push_back({mu, mu, eta_mem * mu, noise});
  }
  return rows;
}

}  // namespace orca
