#include "orca/pulse.hpp"

#include <algorithm>
#include <cmath>

#include "orca/error.hpp"

namespace orca {

std::size_t TimeGrid::first_at_or_after(double t) const {
  if (n == 0) return 0;
  const double x = std::ceil((t - t0) / dt - 0.5);
  if (x <= 0.0) return 0;
  const auto i = static_cast<std::size_t>(x);
  return std::min(i, n);
}

double transform_limited_fwhm(double bandwidth) {
  if (!(bandwidth > 0.0)) throw DomainError("pulse bandwidth must be positive");
  return 2.0 * std::log(2.0) / std::numbers::pi / bandwidth;
}

double default_rabi_area_per_joule() {
  static const double value = rabi_area_per_joule(425e-6);
  return value;
}

ControlPulse ControlPulse::gaussian(double energy, double center_time, double bandwidth,
                                   double chirp_rate, double rabi_area_per_joule) {
  if (!(energy >= 0.0) || !std::isfinite(energy))
    throw DomainError("control energy must be finite and >= 0");
  if (!(rabi_area_per_joule > 0.0)) throw DomainError("rabi area per joule must be positive");
  ControlPulse p;
  p.shape_ = PulseShape::gaussian;
  p.energy_ = energy;
  p.center_ = center_time;
  p.bandwidth_ = bandwidth;
  p.chirp_ = chirp_rate;
  p.kappa_ = rabi_area_per_joule;
  const double sigma = transform_limited_fwhm(bandwidth) / fwhm_per_sigma;
  const double peak_intensity = p.kappa_ * energy / (sigma * std::sqrt(constants::two_pi));
  p.peak_amplitude_ = std::sqrt(peak_intensity);
  return p;
}

namespace {

// Exact integral of |linear interpolant|^2 over a piecewise-linear table.
double table_area(const std::vector<double>& t, const std::vector<cplx>& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    sum += h * (std::norm(a[i]) + std::norm(a[i + 1]) + std::real(a[i] * std::conj(a[i + 1]))) /
           3.0;
  }
  return sum;
}

}  // namespace

ControlPulse ControlPulse::from_table(std::vector<double> times, std::vector<cplx> amplitude,
                                      double energy, double rabi_area_per_joule) {
  if (times.size() != amplitude.size() || times.size() < 2)
    throw ConfigError("control table needs >= 2 matching (time, amplitude) rows");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i + 1] > times[i])) throw ConfigError("control table times must increase");
  if (!(energy >= 0.0)) throw DomainError("control energy must be >= 0");
  ControlPulse p;
  p.shape_ = PulseShape::user_table;
  p.energy_ = energy;
  p.kappa_ = rabi_area_per_joule;
  const double area = table_area(times, amplitude);
  double center = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    center += times[i] * std::norm(amplitude[i]);
    mass += std::norm(amplitude[i]);
  }
  p.center_ = mass > 0.0 ? center / mass : 0.5 * (times.front() + times.back());
  const double scale = (area > 0.0 && energy > 0.0)
                           ? std::sqrt(rabi_area_per_joule * energy / area)
                           : 0.0;
  for (auto& a : amplitude) a *= scale;
  p.table_t_ = std::move(times);
  p.table_a_ = std::move(amplitude);
  return p;
}

double ControlPulse::fwhm() const {
  if (shape_ == PulseShape::gaussian) return transform_limited_fwhm(bandwidth_);
  return (table_t_.back() - table_t_.front()) / static_cast<double>(table_t_.size() - 1) * 4.0;
}

std::pair<double, double> ControlPulse::support() const {
  if (shape_ == PulseShape::gaussian) {
    const double half = 3.0 * fwhm();
    return {center_ - half, center_ + half};
  }
  return {table_t_.front(), table_t_.back()};
}

ControlPulse ControlPulse::with_energy(double energy) const {
  if (shape_ == PulseShape::gaussian)
    return gaussian(energy, center_, bandwidth_, chirp_, kappa_);
  return from_table(table_t_, table_a_, energy, kappa_);
}

ControlPulse ControlPulse::with_center(double center) const {
  if (shape_ == PulseShape::gaussian)
    return gaussian(energy_, center, bandwidth_, chirp_, kappa_);
  ControlPulse p = *this;
  const double shift = center - center_;
  for (auto& t : p.table_t_) t += shift;
  p.center_ = center;
  return p;
}

cplx ControlPulse::rabi(double t) const {
  if (energy_ == 0.0) return {0.0, 0.0};
  if (shape_ == PulseShape::gaussian) {
    const double sigma = transform_limited_fwhm(bandwidth_) / fwhm_per_sigma;
    const double x = t - center_;
    const double mag = peak_amplitude_ * std::exp(-x * x / (4.0 * sigma * sigma));
    if (chirp_ == 0.0) return {mag, 0.0};
    return std::polar(mag, 0.5 * chirp_ * x * x);
  }
  if (t < table_t_.front() || t > table_t_.back()) return {0.0, 0.0};
  const auto it = std::upper_bound(table_t_.begin(), table_t_.end(), t);
  const std::size_t hi = std::min<std::size_t>(it - table_t_.begin(), table_t_.size() - 1);
  const std::size_t lo = hi - 1;
  const double s = (t - table_t_[lo]) / (table_t_[hi] - table_t_[lo]);
  return table_a_[lo] * (1.0 - s) + table_a_[hi] * s;
}

SignalEnvelope SignalEnvelope::gaussian(double mu_in, double fwhm, double center_time) {
  if (!(mu_in >= 0.0) || !std::isfinite(mu_in))
    throw DomainError("mean photon number must be finite and >= 0");
  if (!(fwhm > 0.0)) throw DomainError("signal FWHM must be positive");
  SignalEnvelope s;
  s.mu_ = mu_in;
  s.fwhm_ = fwhm;
  s.center_ = center_time;
  return s;
}

SignalEnvelope SignalEnvelope::tabulated(TimeGrid grid, std::vector<cplx> amplitude) {
  if (amplitude.size() != grid.n) throw ConfigError("envelope table size does not match grid");
  SignalEnvelope s;
  s.tabulated_ = true;
  s.grid_ = grid;
  s.amp_ = std::move(amplitude);
  double mass = 0.0;
  double first = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < s.amp_.size(); ++i) {
    const double f = std::norm(s.amp_[i]);
    mass += f;
    first += f * grid.time(i);
    peak = std::max(peak, f);
  }
  s.mu_ = mass * grid.dt;
  s.center_ = mass > 0.0 ? first / mass : 0.0;
  // FWHM from the half-maximum crossings.
  if (peak > 0.0) {
    std::size_t lo = s.amp_.size();
    std::size_t hi = 0;
    for (std::size_t i = 0; i < s.amp_.size(); ++i) {
      if (std::norm(s.amp_[i]) >= 0.5 * peak) {
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
    s.fwhm_ = static_cast<double>(hi - lo + 1) * grid.dt;
  }
  return s;
}

double SignalEnvelope::photon_number() const { return mu_; }

std::vector<cplx> SignalEnvelope::sample(const TimeGrid& grid) const {
  std::vector<cplx> out(grid.n);
  if (!tabulated_) {
    if (mu_ == 0.0) return out;
    const double sigma = fwhm_ / fwhm_per_sigma;  // intensity sigma
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double x = grid.time(i) - center_;
      const double a = std::exp(-x * x / (4.0 * sigma * sigma));
      out[i] = {a, 0.0};
      sum += a * a;
    }
    if (sum == 0.0) throw DomainError("signal pulse lies outside the simulation grid");
    const double scale = std::sqrt(mu_ / (sum * grid.dt));
    for (auto& v : out) v *= scale;
    return out;
  }
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = (grid.time(i) - grid_.t0) / grid_.dt - 0.5;
    if (x < 0.0 || x > static_cast<double>(grid_.n - 1)) continue;
    const auto lo = static_cast<std::size_t>(x);
    const std::size_t hi = std::min(lo + 1, grid_.n - 1);
    const double s = x - static_cast<double>(lo);
    out[i] = amp_[lo] * (1.0 - s) + amp_[hi] * s;
  }
  return out;
}

double SignalEnvelope::flux(double t) const {
  if (!tabulated_) {
    if (mu_ == 0.0) return 0.0;
    const double sigma = fwhm_ / fwhm_per_sigma;
    const double x = t - center_;
    return mu_ / (sigma * std::sqrt(constants::two_pi)) * std::exp(-x * x / (2.0 * sigma * sigma));
  }
  const double x = (t - grid_.t0) / grid_.dt - 0.5;
  if (x < 0.0 || x > static_cast<double>(grid_.n - 1)) return 0.0;
  const auto lo = static_cast<std::size_t>(x);
  const std::size_t hi = std::min(lo + 1, grid_.n - 1);
  const double s = x - static_cast<double>(lo);
  return std::norm(amp_[lo]) * (1.0 - s) + std::norm(amp_[hi]) * s;
}

SignalEnvelope SignalEnvelope::scaled(cplx factor) const {
  SignalEnvelope s = *this;
  if (!tabulated_) {
    s.mu_ *= std::norm(factor);
    return s;
  }
  for (auto& a : s.amp_) a *= factor;
  s.mu_ *= std::norm(factor);
  return s;
}

}  // namespace orca
