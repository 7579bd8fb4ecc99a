#pragma once

#include <complex>
#include <numbers>
#include <vector>

namespace orca {

using cplx = std::complex<double>;

namespace constants {
// CODATA 2018 (exact SI values where defined).
inline constexpr double boltzmann = 1.380649e-23;        // J/K
inline constexpr double speed_of_light = 299792458.0;     // m/s
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double epsilon0 = 8.8541878128e-12;      // F/m
inline constexpr double torr = 133.322368;                // Pa
inline constexpr double rb87_mass = 1.44316e-25;          // kg
// Rb D2 cycling-transition dipole moment and 5P3/2 decay rate.
inline constexpr double rb_d2_dipole = 3.58424e-29;       // C m
inline constexpr double rb_d2_gamma = 3.8117e7;           // 1/s
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

enum class Geometry { counter_propagating, co_propagating };

/// One route through the intermediate hyperfine manifold. The amplitude weight
/// multiplies the collective emission; the offset shifts the two-photon
/// resonance of that route.
struct Pathway {
  double detuning_offset = 0.0;  // rad/s
  cplx amplitude_weight{1.0, 0.0};
};

/// Set of interfering pathways. Weights are normalized so that sum |w_p| = 1,
/// which keeps |A(t)| <= 1. An empty set behaves as one pathway of weight 1.
class HyperfinePathwaySet {
 public:
  HyperfinePathwaySet() = default;
  explicit HyperfinePathwaySet(std::vector<Pathway> pathways);

  static HyperfinePathwaySet trivial() { return {}; }

  bool empty() const { return pathways_.empty(); }
  const std::vector<Pathway>& pathways() const { return pathways_; }

  /// Pathways with the trivial set expanded to a single unit-weight entry.
  std::vector<Pathway> effective() const;

  /// sum_p w_p exp(i delta_p t)
  cplx beat(double t) const;

 private:
  std::vector<Pathway> pathways_;
};

/// g -> e -> s ladder. Signal on the telecom leg, control on the D2 leg.
struct LadderScheme {
  double lambda_signal = 1529.3e-9;                              // m
  double lambda_control = 780.3e-9;                              // m
  double delta_intermediate = constants::two_pi * 6.0e9;         // rad/s
  double gamma_e = constants::rb_d2_gamma;                       // rad/s
  double tau_storage = 90e-9;                                    // s
  Geometry geometry = Geometry::counter_propagating;
  HyperfinePathwaySet pathways;

  void validate() const;
  double k_signal() const { return constants::two_pi / lambda_signal; }
  double k_control() const { return constants::two_pi / lambda_control; }
};

struct VelocityGrid {
  std::vector<double> velocity;  // m/s
  std::vector<double> weight;    // sums to 1

  std::size_t size() const { return velocity.size(); }
};

struct VaporEnsemble {
  double cell_length = 0.08;         // m
  double temperature = 393.15;       // K
  double isotope_fraction_87 = 0.969;
  double atomic_mass = constants::rb87_mass;
  VelocityGrid velocity_grid;        // optional; the solver builds its own

  void validate() const;
};

/// Signed two-photon wavevector mismatch k_s - k_c along the signal axis.
/// The control wavevector is negative in the counter-propagating geometry.
double spinwave_wavevector(const LadderScheme& scheme);

/// 2 pi / |dk|, infinite when dk == 0.
double spinwave_wavelength(const LadderScheme& scheme);

/// One-dimensional rms velocity sqrt(k_B T / m).
double thermal_velocity_sigma(const VaporEnsemble& ensemble);

/// Gauss-Hermite quadrature of the 1D Maxwell-Boltzmann distribution.
/// n_points must be odd and >= 3 so the v = 0 class is a node.
VelocityGrid build_velocity_grid(const VaporEnsemble& ensemble, int n_points);

/// Collective-coherence amplitude after free evolution for time t:
/// A(t) = [sum_p w_p e^{i delta_p t}] exp(-(dk sigma_v t)^2 / 2).
cplx doppler_envelope(double dk, double sigma_v, double t,
                      const HyperfinePathwaySet& pathways = {});

/// Saturated Rb vapor pressure in Pa, 250 K <= T <= 550 K.
double rb_vapor_pressure(double temperature);

/// Number density of Rb (both isotopes) in m^-3.
double rb_number_density(double temperature);

/// Atoms in the interaction volume beam_area x cell_length.
double vapor_atom_count(const VaporEnsemble& ensemble, double beam_area);

/// Integral of |Omega|^2 dt per joule of control energy for a Gaussian beam
/// of 1/e^2 intensity radius `beam_waist` on the Rb D2 line, rad^2/s per J.
double rabi_area_per_joule(double beam_waist, double dipole = constants::rb_d2_dipole);

}  // namespace orca
