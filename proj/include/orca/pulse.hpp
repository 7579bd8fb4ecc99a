#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "orca/physics.hpp"

namespace orca {

/// Uniform grid; sample i sits at the cell midpoint t0 + (i + 1/2) dt.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-12;
  std::size_t n = 0;

  double time(std::size_t i) const { return t0 + (static_cast<double>(i) + 0.5) * dt; }
  double end() const { return t0 + static_cast<double>(n) * dt; }
  /// First step whose midpoint is >= t (n if none).
  std::size_t first_at_or_after(double t) const;
};

/// Intensity FWHM of a transform-limited Gaussian with the given bandwidth.
double transform_limited_fwhm(double bandwidth);

inline constexpr double fwhm_per_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

/// 425 um D2 beam waist; places the read-in Stark rollover at 0.7 nJ.
double default_rabi_area_per_joule();

enum class PulseShape { gaussian, user_table };

/// Control field in Rabi-frequency units. The envelope is normalized so that
/// integral |Omega(t)|^2 dt = rabi_area_per_joule * energy for every shape.
class ControlPulse {
 public:
  ControlPulse() = default;

  static ControlPulse gaussian(double energy, double center_time, double bandwidth = 1e9,
                               double chirp_rate = 0.0,
                               double rabi_area_per_joule = default_rabi_area_per_joule());

  /// Shape from samples (linear interpolation of the complex amplitude, zero
  /// outside). Only the shape matters; the scale is set by `energy`.
  static ControlPulse from_table(std::vector<double> times, std::vector<cplx> amplitude,
                                 double energy,
                                 double rabi_area_per_joule = default_rabi_area_per_joule());

  double energy() const { return energy_; }
  double center_time() const { return center_; }
  PulseShape shape() const { return shape_; }
  double bandwidth() const { return bandwidth_; }
  double chirp_rate() const { return chirp_; }
  double rabi_area_per_joule() const { return kappa_; }
  const std::vector<double>& table_times() const { return table_t_; }
  const std::vector<cplx>& table_amplitude() const { return table_a_; }

  /// Intensity FWHM for gaussians; the table span divided by the knot count
  /// otherwise (used only for grid-resolution checks).
  double fwhm() const;

  /// Interval outside which the envelope is negligible.
  std::pair<double, double> support() const;

  ControlPulse with_energy(double energy) const;
  ControlPulse with_center(double center) const;

  cplx rabi(double t) const;
  double intensity(double t) const { return std::norm(rabi(t)); }

  /// integral |Omega|^2 dt, analytic.
  double rabi_area() const { return kappa_ * energy_; }

 private:
  double energy_ = 0.0;
  double center_ = 0.0;
  PulseShape shape_ = PulseShape::gaussian;
  double bandwidth_ = 1e9;
  double chirp_ = 0.0;
  double kappa_ = 0.0;
  double peak_amplitude_ = 0.0;  // gaussian: sqrt of peak intensity
  std::vector<double> table_t_;
  std::vector<cplx> table_a_;    // scaled so the normalization holds
};

/// Weak signal field; |E|^2 in photons per second so that
/// integral |E|^2 dt = mean photon number.
class SignalEnvelope {
 public:
  SignalEnvelope() = default;

  static SignalEnvelope gaussian(double mu_in, double fwhm = 350e-12, double center_time = 0.0);
  static SignalEnvelope tabulated(TimeGrid grid, std::vector<cplx> amplitude);

  bool is_tabulated() const { return tabulated_; }
  double fwhm() const { return fwhm_; }
  double center_time() const { return center_; }
  const TimeGrid& grid() const { return grid_; }
  const std::vector<cplx>& amplitude() const { return amp_; }

  /// Mean photon number (exact for gaussians, rectangle rule for tables).
  double photon_number() const;

  /// Amplitudes at the grid midpoints. Gaussians are renormalized on the
  /// grid so the discrete photon number equals mu_in.
  std::vector<cplx> sample(const TimeGrid& grid) const;

  /// |E(t)|^2, linear interpolation for tables.
  double flux(double t) const;

  SignalEnvelope scaled(cplx factor) const;

 private:
  bool tabulated_ = false;
  double mu_ = 0.0;
  double fwhm_ = 350e-12;
  double center_ = 0.0;
  TimeGrid grid_;
  std::vector<cplx> amp_;
};

}  // namespace orca
