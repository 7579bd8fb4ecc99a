#pragma once

#include <limits>

namespace orca {

/// Value with a symmetric standard uncertainty.
struct Measured {
  double value = 0.0;
  double sigma = 0.0;

  double relative() const { return value != 0.0 ? sigma / value : 0.0; }
};

/// SNR; a zero noise floor is reported as an infinite, flagged value.
struct SnrValue {
  double value = 0.0;
  bool infinite = false;
};

SnrValue snr(double signal_out, double noise);

/// Input photon number that gives SNR = 1 at the output: N / eta_mem.
double mu_one(double noise, double eta_mem);

/// Predicted g2 of a retrieved single photon admixed with thermal noise.
double g2_out(double mu_in, double mu1);

/// Retrieved single-photon fidelity (mu_in + mu1) / (mu_in + 2 mu1).
double fidelity(double mu_in, double mu1);

/// eta_mem eta_trans eta_det with relative errors added in quadrature.
Measured throughput(Measured eta_mem, Measured eta_trans, Measured eta_det);

struct MemoryFigures {
  Measured mu_in;
  Measured noise;
  Measured eta_mem;
  Measured snr;
  bool snr_infinite = false;
  Measured mu1;
  Measured g2_out_pred;
  Measured fidelity_pred;
  Measured throughput;
};

/// All figures of merit with first-order propagation. g2 and fidelity are
/// evaluated for a single-photon input (mu_in = 1); snr uses the measured mu_in.
/// With eta_mem <= 0 the mu1, g2 and fidelity entries are NaN.
MemoryFigures compute_figures(Measured mu_in, Measured noise, Measured eta_mem,
                              Measured eta_trans, Measured eta_det);

}  // namespace orca
