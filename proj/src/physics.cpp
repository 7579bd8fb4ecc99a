#include "orca/physics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "orca/error.hpp"

namespace orca {

HyperfinePathwaySet::HyperfinePathwaySet(std::vector<Pathway> pathways)
    : pathways_(std::move(pathways)) {
  double total = 0.0;
  for (const auto& p : pathways_) {
    if (!std::isfinite(p.detuning_offset) || !std::isfinite(std::abs(p.amplitude_weight)))
      throw DomainError("hyperfine pathway has a non-finite entry");
    total += std::abs(p.amplitude_weight);
  }
  if (!pathways_.empty() && total <= 0.0)
    throw DomainError("hyperfine pathway weights are all zero");
  for (auto& p : pathways_) p.amplitude_weight /= total;
}

std::vector<Pathway> HyperfinePathwaySet::effective() const {
  if (pathways_.empty()) return {Pathway{}};
  return pathways_;
}

cplx HyperfinePathwaySet::beat(double t) const {
  if (pathways_.empty()) return {1.0, 0.0};
  cplx sum{0.0, 0.0};
  for (const auto& p : pathways_)
    sum += p.amplitude_weight * std::polar(1.0, p.detuning_offset * t);
  return sum;
}

void LadderScheme::validate() const {
  if (!(lambda_signal > 0.0) || !(lambda_control > 0.0) || !std::isfinite(lambda_signal) ||
      !std::isfinite(lambda_control))
    throw DomainError("ladder wavelengths must be positive and finite");
  if (delta_intermediate == 0.0 || !std::isfinite(delta_intermediate))
    throw DomainError("intermediate detuning must be non-zero and finite");
  if (!(tau_storage > 0.0)) throw DomainError("storage-state lifetime must be positive");
  if (!(gamma_e >= 0.0)) throw DomainError("intermediate decay rate must be non-negative");
}

void VaporEnsemble::validate() const {
  if (!(cell_length > 0.0)) throw DomainError("cell length must be positive");
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (!(isotope_fraction_87 >= 0.0 && isotope_fraction_87 <= 1.0))
    throw DomainError("isotope fraction must lie in [0, 1]");
  if (!(atomic_mass > 0.0)) throw DomainError("atomic mass must be positive");
}

double spinwave_wavevector(const LadderScheme& scheme) {
  scheme.validate();
  const double sign = scheme.geometry == Geometry::counter_propagating ? -1.0 : 1.0;
  return scheme.k_signal() + sign * scheme.k_control();
}

double spinwave_wavelength(const LadderScheme& scheme) {
  const double dk = spinwave_wavevector(scheme);
  if (dk == 0.0) return std::numeric_limits<double>::infinity();
  return constants::two_pi / std::abs(dk);
}

double thermal_velocity_sigma(const VaporEnsemble& ensemble) {
  if (!(ensemble.temperature > 0.0))
    throw DomainError("thermal velocity needs a positive temperature");
  if (!(ensemble.atomic_mass > 0.0)) throw DomainError("atomic mass must be positive");
  return std::sqrt(constants::boltzmann * ensemble.temperature / ensemble.atomic_mass);
}

VelocityGrid build_velocity_grid(const VaporEnsemble& ensemble, int n_points) {
  if (n_points < 3 || n_points % 2 == 0)
    throw ConfigError("velocity grid needs an odd node count >= 3, got " +
                      std::to_string(n_points));
  const double sigma = thermal_velocity_sigma(ensemble);

  // Golub-Welsch on the probabilists' Hermite recurrence: off-diagonal sqrt(k).
  const int n = n_points;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigen-solve failed");

  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    w[i] = v0 * v0;
  }
  // Enforce exact mirror symmetry and an exact zero node.
  VelocityGrid grid;
  grid.velocity.resize(n);
  grid.weight.resize(n);
  const int mid = n / 2;
  for (int i = 0; i < n; ++i) {
    const int j = n - 1 - i;
    const double xs = 0.5 * (x[i] - x[j]);
    const double ws = 0.5 * (w[i] + w[j]);
    grid.velocity[i] = (i == mid) ? 0.0 : xs * sigma;
    grid.weight[i] = ws;
  }
  // Pairwise summation from the tails keeps the normalization at round-off.
  double total = grid.weight[mid];
  for (int i = 0; i < mid; ++i) total += 2.0 * grid.weight[i];
  for (auto& wi : grid.weight) wi /= total;
  return grid;
}

cplx doppler_envelope(double dk, double sigma_v, double t, const HyperfinePathwaySet& pathways) {
  if (t < 0.0) throw DomainError("doppler_envelope needs t >= 0");
  const double phase_spread = dk * sigma_v * t;
  return pathways.beat(t) * std::exp(-0.5 * phase_spread * phase_spread);
}

double rb_vapor_pressure(double temperature) {
  if (!(temperature >= 250.0 && temperature <= 550.0))
    throw DomainError("Rb vapor-pressure correlation valid for 250-550 K, got " +
                      std::to_string(temperature) + " K");
  const double t = temperature;
  const double log_t = std::log10(t);
  // Extended Antoine fits (Nesmeyanov), torr; melting point 312.46 K.
  double log_p;
  if (t < 312.46)
    log_p = -94.04826 - 1961.258 / t - 0.03771687 * t + 42.57526 * log_t;
  else
    log_p = 15.88253 - 4529.635 / t + 0.00058663 * t - 2.99138 * log_t;
  return std::pow(10.0, log_p) * constants::torr;
}

double rb_number_density(double temperature) {
  return rb_vapor_pressure(temperature) / (constants::boltzmann * temperature);
}

double vapor_atom_count(const VaporEnsemble& ensemble, double beam_area) {
  if (!(beam_area > 0.0)) throw DomainError("beam area must be positive");
  ensemble.validate();
  return rb_number_density(ensemble.temperature) * beam_area * ensemble.cell_length;
}

double rabi_area_per_joule(double beam_waist, double dipole) {
  if (!(beam_waist > 0.0)) throw DomainError("beam waist must be positive");
  // Omega^2 = 2 I d^2 / (c eps0 hbar^2), peak fluence = 2 E / (pi w^2).
  const double per_fluence = 2.0 * dipole * dipole /
                             (constants::speed_of_light * constants::epsilon0 *
                              constants::hbar * constants::hbar);
  const double area = std::numbers::pi * beam_waist * beam_waist / 2.0;
  return per_fluence / area;
}

}  // namespace orca
