#pragma once

#include <memory>
#include <span>
#include <vector>

#include "orca/physics.hpp"
#include "orca/pulse.hpp"

namespace orca {

enum class RetrievalDirection { forward, backward };

/// Calibrated against the 69.13 % read-in point with the default sequence.
inline constexpr double default_coupling_d2 = 1497.0;

struct SolverConfig {
  int n_z = 200;
  int n_t = 4096;
  int n_v = 65;
  double time_span = 0.0;  // s; 0 selects a span covering every pulse
  double coupling_d2 = default_coupling_d2;
  bool include_stark = true;
  bool include_doppler = true;
  bool include_dispersion = true;
  bool include_decay = true;
  RetrievalDirection retrieval_direction = RetrievalDirection::forward;

  void validate() const;
};

/// Atomic excitation per (slab, class). Entries are photon-number amplitudes,
/// so the stored photon number is the plain squared norm.
struct SpinWave {
  int n_z = 0;
  int n_classes = 0;
  std::vector<cplx> amp;  // index z * n_classes + c
  double time = 0.0;

  SpinWave() = default;
  SpinWave(int nz, int nc) : n_z(nz), n_classes(nc), amp(static_cast<std::size_t>(nz) * nc) {}

  cplx& at(int z, int c) { return amp[static_cast<std::size_t>(z) * n_classes + c]; }
  cplx at(int z, int c) const { return amp[static_cast<std::size_t>(z) * n_classes + c]; }

  double photons() const;
  double class_photons(int c) const;
  /// Spatial mirror z -> L - z.
  SpinWave reversed() const;
};

/// One atomic sub-ensemble: a velocity node combined with a hyperfine route.
struct AtomClass {
  double weight = 0.0;         // population fraction
  double velocity = 0.0;       // m/s
  double phase_rate = 0.0;     // Doppler + pathway offset, rad/s
  double intermediate = 0.0;   // Doppler-shifted intermediate detuning, rad/s
  cplx coupling_phase{1.0, 0.0};
};

/// Split-step integrator for the adiabatically eliminated ladder equations
///   dE/dz  = i sum_c w_c [ beta_c E + G_c B_c ]
///   dB_c/dt = i G_c^* E - [ 1/(2 tau) + i (omega_c + delta_S) ] B_c
/// on a normalized cell z in [0, 1]. Each (slab, step) cell applies the exact
/// beamsplitter rotation between the passing light packet and the slab's
/// atomic modes; free evolution is an exact exponential. With decay off the
/// map is unitary, so photon number is conserved to round-off.
class Propagator {
 public:
  Propagator(const LadderScheme& scheme, const VaporEnsemble& ensemble, const SolverConfig& cfg);

  const std::vector<AtomClass>& classes() const { return classes_; }
  int n_z() const { return cfg_.n_z; }
  SpinWave empty_state() const { return SpinWave(cfg_.n_z, static_cast<int>(classes_.size())); }

  /// Advances `state` over steps [begin, end) of `grid`. `input` holds the
  /// field entering z = 0 for every grid step (empty means none). Returns the
  /// field leaving z = 1 for the same steps.
  std::vector<cplx> propagate(const TimeGrid& grid, std::size_t begin, std::size_t end,
                              std::span<const cplx> input,
                              std::span<const ControlPulse* const> controls,
                              SpinWave& state) const;

 private:
  LadderScheme scheme_;
  SolverConfig cfg_;
  std::vector<AtomClass> classes_;
};

/// |Omega(t)|^2 / (4 Delta).
double stark_shift(const ControlPulse& control, const LadderScheme& scheme, double t);

struct RunContext;

struct MemoryRunResult {
  SignalEnvelope input_envelope;
  SignalEnvelope transmitted_envelope;
  SignalEnvelope retrieved_envelope;
  SpinWave spinwave_snapshot;
  double eta_read_in = 0.0;
  double eta_read_out = 0.0;
  double eta_mem = 0.0;

  double input_photons = 0.0;
  double input_before_snapshot = 0.0;
  double transmitted_before_snapshot = 0.0;
  double stored_photons = 0.0;
  TimeGrid grid;
  std::size_t snapshot_step = 0;
  RetrievalDirection direction = RetrievalDirection::forward;
  std::shared_ptr<const RunContext> context;

  /// Transmitted plus retrieved field.
  SignalEnvelope output_envelope() const;
};

/// Grid that covers the signal and both controls for the given config.
TimeGrid make_time_grid(const SignalEnvelope& signal, const ControlPulse& control_in,
                        const ControlPulse& control_out, const SolverConfig& cfg);

MemoryRunResult run_memory(const LadderScheme& scheme, const VaporEnsemble& ensemble,
                           const SignalEnvelope& signal, const ControlPulse& control_in,
                           const ControlPulse& control_out, double storage_time,
                           const SolverConfig& cfg);

/// Read-in stage only, with the same bookkeeping as run_memory.
double read_in_efficiency(const LadderScheme& scheme, const VaporEnsemble& ensemble,
                          const SignalEnvelope& signal, const ControlPulse& control_in,
                          const ControlPulse& control_out, double storage_time,
                          const SolverConfig& cfg);

/// Re-runs the read-out from `result.spinwave_snapshot` in cfg.retrieval_direction.
MemoryRunResult retrieve(const MemoryRunResult& result, const ControlPulse& control_out,
                         const SolverConfig& cfg);

/// Re-runs the read-out with the snapshot mirrored in z and emission in -z.
MemoryRunResult retrieve_backward(const MemoryRunResult& result, const ControlPulse& control_out,
                                  const SolverConfig& cfg);

struct CalibrationReference {
  LadderScheme scheme;
  VaporEnsemble ensemble;
  SignalEnvelope signal;
  ControlPulse control_in;
  ControlPulse control_out;
  double storage_time = 0.0;
  SolverConfig solver;
};

/// Coupling that makes run_memory reproduce `target_read_in` at the reference.
double calibrate_coupling(double target_read_in, const CalibrationReference& reference);

}  // namespace orca
