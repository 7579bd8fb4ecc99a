#include "orca/metrics.hpp"

#include <cmath>
#include <limits>

#include "orca/error.hpp"

namespace orca {

SnrValue snr(double signal_out, double noise) {
  if (noise < 0.0) throw DomainError("noise must be >= 0");
  if (noise == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {signal_out / noise, false};
}

double mu_one(double noise, double eta_mem) {
  if (!(eta_mem > 0.0)) throw DomainError("mu_one needs eta_mem > 0");
  return noise / eta_mem;
}

double g2_out(double mu_in, double mu1) {
  if (mu_in < 0.0 || mu1 < 0.0) throw DomainError("g2_out needs non-negative photon numbers");
  if (mu_in == 0.0 && mu1 == 0.0) throw DomainError("g2_out undefined for mu_in = mu1 = 0");
  if (mu1 == 0.0) return 0.0;
  return 2.0 / (mu_in / mu1 + 1.0);
}

double fidelity(double mu_in, double mu1) {
  const double den = mu_in + 2.0 * mu1;
  if (!(den > 0.0)) throw DomainError("fidelity denominator must be positive");
  return (mu_in + mu1) / den;
}

namespace {

double quad(double a, double b) { return std::sqrt(a * a + b * b); }
double quad(double a, double b, double c) { return std::sqrt(a * a + b * b + c * c); }

}  // namespace

Measured throughput(Measured eta_mem, Measured eta_trans, Measured eta_det) {
  for (const auto& m : {eta_mem, eta_trans, eta_det})
    if (m.value < 0.0 || m.value > 1.0) throw DomainError("efficiencies must lie in [0, 1]");
  const double value = eta_mem.value * eta_trans.value * eta_det.value;
  if (value == 0.0) return {0.0, 0.0};
  return {value, value * quad(eta_mem.relative(), eta_trans.relative(), eta_det.relative())};
}

MemoryFigures compute_figures(Measured mu_in, Measured noise, Measured eta_mem,
                              Measured eta_trans, Measured eta_det) {
  MemoryFigures f;
  f.mu_in = mu_in;
  f.noise = noise;
  f.eta_mem = eta_mem;

  const double signal_out = eta_mem.value * mu_in.value;
  const SnrValue s = snr(signal_out, noise.value);
  f.snr_infinite = s.infinite;
  f.snr.value = s.value;
  if (!s.infinite && s.value != 0.0)
    f.snr.sigma = s.value * quad(mu_in.relative(), eta_mem.relative(), noise.relative());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!(eta_mem.value > 0.0)) {
    // No retrieved signal: the single-photon figures are undefined.
    f.mu1 = {nan, nan};
    f.g2_out_pred = {nan, nan};
    f.fidelity_pred = {nan, nan};
  } else {
    f.mu1.value = mu_one(noise.value, eta_mem.value);
    f.mu1.sigma = f.mu1.value * quad(noise.relative(), eta_mem.relative());
    const double mu1 = f.mu1.value;
    if (mu1 > 0.0) {
      // Single-photon prediction: x = 1 / mu1.
      const double x = 1.0 / mu1;
      const double rel_x = f.mu1.relative();
      f.g2_out_pred.value = g2_out(1.0, mu1);
      f.g2_out_pred.sigma = 2.0 / ((x + 1.0) * (x + 1.0)) * x * rel_x;
      f.fidelity_pred.value = fidelity(1.0, mu1);
      f.fidelity_pred.sigma = x * rel_x / ((x + 2.0) * (x + 2.0));
    } else {
      f.g2_out_pred = {0.0, 0.0};
      f.fidelity_pred = {1.0, 0.0};
    }
  }

  if (eta_mem.value >= 0.0 && eta_mem.value <= 1.0) f.throughput = throughput(eta_mem, eta_trans, eta_det);
  else f.throughput = {nan, nan};
  return f;
}

}  // namespace orca
