#include "orca/solver.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <sstream>
#include <string>

#include "orca/error.hpp"

namespace orca {

void SolverConfig::validate() const {
  if (n_z < 16) throw ConfigError("solver.n_z must be >= 16");
  if (n_t < 256) throw ConfigError("solver.n_t must be >= 256");
  if (n_v < 3 || n_v % 2 == 0) throw ConfigError("solver.n_v must be odd and >= 3");
  if (!(time_span >= 0.0)) throw ConfigError("solver.time_span must be >= 0");
  if (!(coupling_d2 >= 0.0) || !std::isfinite(coupling_d2))
    throw ConfigError("solver.coupling_d2 must be finite and >= 0");
}

double SpinWave::photons() const {
  double sum = 0.0;
  for (const auto& a : amp) sum += std::norm(a);
  return sum;
}

double SpinWave::class_photons(int c) const {
  double sum = 0.0;
  for (int z = 0; z < n_z; ++z) sum += std::norm(at(z, c));
  return sum;
}

SpinWave SpinWave::reversed() const {
  SpinWave out(n_z, n_classes);
  out.time = time;
  for (int z = 0; z < n_z; ++z)
    for (int c = 0; c < n_classes; ++c) out.at(n_z - 1 - z, c) = at(z, c);
  return out;
}

Propagator::Propagator(const LadderScheme& scheme, const VaporEnsemble& ensemble,
                       const SolverConfig& cfg)
    : scheme_(scheme), cfg_(cfg) {
  scheme.validate();
  ensemble.validate();
  cfg.validate();
  const VelocityGrid vg = build_velocity_grid(ensemble, cfg.n_v);
  const double dk = spinwave_wavevector(scheme);
  const double ks = scheme.k_signal();
  for (const auto& path : scheme.pathways.effective()) {
    const double frac = std::abs(path.amplitude_weight);
    if (frac == 0.0) continue;
    const cplx half_phase = std::polar(1.0, 0.5 * std::arg(path.amplitude_weight));
    for (std::size_t i = 0; i < vg.size(); ++i) {
      AtomClass c;
      c.weight = vg.weight[i] * frac;
      c.velocity = vg.velocity[i];
      const double v = cfg.include_doppler ? vg.velocity[i] : 0.0;
      c.phase_rate = dk * v + path.detuning_offset;
      c.intermediate = scheme.delta_intermediate + ks * v;
      c.coupling_phase = half_phase;
      classes_.push_back(c);
    }
  }
}

std::vector<cplx> Propagator::propagate(const TimeGrid& grid, std::size_t begin, std::size_t end,
                                        std::span<const cplx> input,
                                        std::span<const ControlPulse* const> controls,
                                        SpinWave& state) const {
  const int nc = static_cast<int>(classes_.size());
  const int nz = cfg_.n_z;
  if (state.n_z != nz || state.n_classes != nc)
    throw ConfigError("spin-wave state does not match the solver discretization");
  if (!input.empty() && input.size() != grid.n)
    throw ConfigError("input field does not match the time grid");
  end = std::min(end, grid.n);
  std::vector<cplx> out(end > begin ? end - begin : 0);
  if (end <= begin) return out;

  const double h = 1.0 / nz;
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double decay = cfg_.include_decay ? 0.5 / scheme_.tau_storage : 0.0;
  const double d2g = cfg_.coupling_d2 * scheme_.gamma_e;

  // Per-class coupling per unit Rabi frequency, and the mean dispersion
  // coefficient: beta = d2 gamma |Omega|^2 / (8 Delta_c^3).
  std::vector<cplx> unit_coupling(nc);
  double coupling_norm = 0.0;
  double dispersion = 0.0;
  for (int c = 0; c < nc; ++c) {
    const auto& ac = classes_[c];
    unit_coupling[c] = ac.coupling_phase * std::sqrt(d2g * ac.weight * h * dt) /
                       (2.0 * ac.intermediate);
    coupling_norm += std::norm(unit_coupling[c]);
    if (cfg_.include_dispersion)
      dispersion += ac.weight * d2g / (8.0 * ac.intermediate * ac.intermediate * ac.intermediate);
  }
  coupling_norm = std::sqrt(coupling_norm);

  // Free evolution is z-independent, so it is carried as a per-class factor
  // and the slab amplitudes are stored in that interaction frame.
  std::vector<cplx> frame(nc, cplx{1.0, 0.0});
  std::vector<cplx> dot_w(nc), upd_w(nc);
  std::vector<cplx>& b = state.amp;

  for (std::size_t n = begin; n < end; ++n) {
    const double t = grid.time(n);
    cplx omega{0.0, 0.0};
    for (const ControlPulse* p : controls) omega += p->rabi(t);
    const double intensity = std::norm(omega);
    const double stark = cfg_.include_stark ? intensity / (4.0 * scheme_.delta_intermediate) : 0.0;

    for (int c = 0; c < nc; ++c) {
      const cplx rate{decay, classes_[c].phase_rate + stark};
      frame[c] *= std::exp(-rate * (0.5 * dt));
    }

    cplx a = input.empty() ? cplx{} : input[n] * sqrt_dt;
    const double theta = coupling_norm * std::sqrt(intensity);
    if (theta > 1e-300) {
      for (int c = 0; c < nc; ++c) {
        const cplx cc = unit_coupling[c] * omega;
        dot_w[c] = cc * frame[c] / theta;
        upd_w[c] = std::conj(cc) / (theta * frame[c]);
      }
      const double cs = std::cos(theta);
      const double sn = std::sin(theta);
      const cplx disp = std::polar(1.0, dispersion * intensity * h);
      for (int z = 0; z < nz; ++z) {
        cplx* row = b.data() + static_cast<std::size_t>(z) * nc;
        a *= disp;
        cplx bc{0.0, 0.0};
        for (int c = 0; c < nc; ++c) bc += dot_w[c] * row[c];
        const cplx a_next = cs * a + cplx{0.0, sn} * bc;
        const cplx delta = cplx{0.0, sn} * a + (cs - 1.0) * bc;
        for (int c = 0; c < nc; ++c) row[c] += delta * upd_w[c];
        a = a_next;
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
          int bad = 0;
          for (int c = 0; c < nc; ++c)
            if (!std::isfinite(std::abs(row[c]))) {
              bad = c;
              break;
            }
          std::ostringstream os;
          os << "non-finite field at z index " << z << ", t index " << n << ", class index "
             << bad;
          throw NumericalError(os.str());
        }
      }
    }
    out[n - begin] = a / sqrt_dt;

    for (int c = 0; c < nc; ++c) {
      const cplx rate{decay, classes_[c].phase_rate + stark};
      frame[c] *= std::exp(-rate * (0.5 * dt));
    }
  }

  for (int z = 0; z < nz; ++z)
    for (int c = 0; c < nc; ++c) state.at(z, c) *= frame[c];
  state.time = grid.t0 + static_cast<double>(end) * dt;
  return out;
}

double stark_shift(const ControlPulse& control, const LadderScheme& scheme, double t) {
  return control.intensity(t) / (4.0 * scheme.delta_intermediate);
}

struct RunContext {
  LadderScheme scheme;
  VaporEnsemble ensemble;
  SolverConfig cfg;
  ControlPulse control_in;
};

SignalEnvelope MemoryRunResult::output_envelope() const {
  std::vector<cplx> sum = transmitted_envelope.amplitude();
  const auto& r = retrieved_envelope.amplitude();
  for (std::size_t i = 0; i < sum.size() && i < r.size(); ++i) sum[i] += r[i];
  return SignalEnvelope::tabulated(grid, std::move(sum));
}

TimeGrid make_time_grid(const SignalEnvelope& signal, const ControlPulse& control_in,
                        const ControlPulse& control_out, const SolverConfig& cfg) {
  cfg.validate();
  double lo, hi;
  if (signal.is_tabulated()) {
    lo = signal.grid().t0;
    hi = signal.grid().end();
  } else {
    lo = signal.center_time() - 3.0 * signal.fwhm();
    hi = signal.center_time() + 3.0 * signal.fwhm();
  }
  double shortest = signal.fwhm();
  for (const ControlPulse* p : {&control_in, &control_out}) {
    const auto [a, b] = p->support();
    lo = std::min(lo, a);
    hi = std::max(hi, b);
    if (p->energy() > 0.0) shortest = std::min(shortest, p->fwhm());
  }
  double span = hi - lo;
  if (cfg.time_span > 0.0) {
    if (cfg.time_span < span * (1.0 - 1e-12))
      throw ConfigError("solver.time_span does not cover the pulses and storage time");
    span = cfg.time_span;
  }
  TimeGrid grid{lo, span / cfg.n_t, static_cast<std::size_t>(cfg.n_t)};
  if (shortest / grid.dt < 20.0) {
    std::ostringstream os;
    os << "time grid resolves the shortest pulse with only " << shortest / grid.dt
       << " points (need >= 20); raise solver.n_t";
    throw ConfigError(os.str());
  }
  return grid;
}

namespace {

double photons(std::span<const cplx> field, double dt, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += std::norm(field[i]);
  return sum * dt;
}

struct ReadInStage {
  TimeGrid grid;
  std::vector<cplx> input;
  std::vector<cplx> transmitted;  // full grid
  SpinWave snapshot;
  std::size_t snap = 0;
  double input_photons = 0.0;
  double input_before = 0.0;
  double transmitted_before = 0.0;
  double eta_read_in = 0.0;
};

void check_sequence(const ControlPulse& control_in, const ControlPulse& control_out,
                    double storage_time) {
  if (!(storage_time >= 0.0)) throw ConfigError("storage time must be >= 0");
  const double sep = control_out.center_time() - control_in.center_time();
  if (std::abs(sep - storage_time) > 1e-15 + 1e-9 * std::abs(storage_time))
    throw ConfigError("control separation does not equal the storage time");
}

ReadInStage read_in_stage(const Propagator& prop, const SignalEnvelope& signal,
                          const ControlPulse& control_in, const ControlPulse& control_out,
                          const SolverConfig& cfg) {
  ReadInStage st;
  st.grid = make_time_grid(signal, control_in, control_out, cfg);
  st.input = signal.sample(st.grid);
  const double mid = 0.5 * (control_in.center_time() + control_out.center_time());
  st.snap = st.grid.first_at_or_after(mid);
  const std::size_t n = st.grid.n;

  st.snapshot = prop.empty_state();
  const ControlPulse* in_only[] = {&control_in};
  auto head = prop.propagate(st.grid, 0, st.snap, st.input, in_only, st.snapshot);

  // The signal still arriving after the snapshot sees both controls; by
  // linearity its response is computed from an empty medium and added to the
  // transmitted field, while the snapshot's own emission is the retrieval.
  std::vector<cplx> tail_input(n);
  std::copy(st.input.begin() + static_cast<std::ptrdiff_t>(st.snap), st.input.end(),
            tail_input.begin() + static_cast<std::ptrdiff_t>(st.snap));
  SpinWave scratch = prop.empty_state();
  const ControlPulse* both[] = {&control_in, &control_out};
  auto tail = prop.propagate(st.grid, st.snap, n, tail_input, both, scratch);

  st.transmitted.assign(n, cplx{});
  std::copy(head.begin(), head.end(), st.transmitted.begin());
  std::copy(tail.begin(), tail.end(), st.transmitted.begin() + static_cast<std::ptrdiff_t>(st.snap));

  st.input_photons = photons(st.input, st.grid.dt, 0, n);
  st.input_before = photons(st.input, st.grid.dt, 0, st.snap);
  st.transmitted_before = photons(st.transmitted, st.grid.dt, 0, st.snap);
  const double transmitted = photons(st.transmitted, st.grid.dt, 0, n);
  st.eta_read_in = st.input_photons > 0.0
                       ? std::clamp(1.0 - transmitted / st.input_photons, 0.0, 1.0)
                       : 0.0;
  return st;
}

std::vector<cplx> read_out(const Propagator& prop, const TimeGrid& grid, std::size_t snap,
                           const SpinWave& snapshot, const ControlPulse& control_in,
                           const ControlPulse& control_out, RetrievalDirection dir) {
  SpinWave state = dir == RetrievalDirection::backward ? snapshot.reversed() : snapshot;
  const ControlPulse* both[] = {&control_in, &control_out};
  auto emitted = prop.propagate(grid, snap, grid.n, {}, both, state);
  std::vector<cplx> full(grid.n);
  std::copy(emitted.begin(), emitted.end(), full.begin() + static_cast<std::ptrdiff_t>(snap));
  return full;
}

void fill_efficiencies(MemoryRunResult& r) {
  const double retrieved = r.retrieved_envelope.photon_number();
  r.eta_mem = r.input_photons > 0.0 ? std::clamp(retrieved / r.input_photons, 0.0, 1.0) : 0.0;
  r.eta_read_out = r.eta_read_in > 0.0 ? std::min(1.0, r.eta_mem / r.eta_read_in) : 0.0;
  // Keep eta_mem = eta_read_in * eta_read_out exactly.
  r.eta_mem = r.eta_read_in * r.eta_read_out;
}

}  // namespace

MemoryRunResult run_memory(const LadderScheme& scheme, const VaporEnsemble& ensemble,
                           const SignalEnvelope& signal, const ControlPulse& control_in,
                           const ControlPulse& control_out, double storage_time,
                           const SolverConfig& cfg) {
  check_sequence(control_in, control_out, storage_time);
  const Propagator prop(scheme, ensemble, cfg);
  ReadInStage st = read_in_stage(prop, signal, control_in, control_out, cfg);

  MemoryRunResult r;
  r.grid = st.grid;
  r.snapshot_step = st.snap;
  r.direction = cfg.retrieval_direction;
  r.input_envelope = SignalEnvelope::tabulated(st.grid, st.input);
  r.input_photons = st.input_photons;
  r.input_before_snapshot = st.input_before;
  r.transmitted_before_snapshot = st.transmitted_before;
  r.stored_photons = st.snapshot.photons();
  r.eta_read_in = st.eta_read_in;
  auto emitted = read_out(prop, st.grid, st.snap, st.snapshot, control_in, control_out,
                          cfg.retrieval_direction);
  r.transmitted_envelope = SignalEnvelope::tabulated(st.grid, std::move(st.transmitted));
  r.retrieved_envelope = SignalEnvelope::tabulated(st.grid, std::move(emitted));
  r.spinwave_snapshot = std::move(st.snapshot);
  r.context = std::make_shared<const RunContext>(RunContext{scheme, ensemble, cfg, control_in});
  fill_efficiencies(r);
  return r;
}

double read_in_efficiency(const LadderScheme& scheme, const VaporEnsemble& ensemble,
                          const SignalEnvelope& signal, const ControlPulse& control_in,
                          const ControlPulse& control_out, double storage_time,
                          const SolverConfig& cfg) {
  check_sequence(control_in, control_out, storage_time);
  const Propagator prop(scheme, ensemble, cfg);
  return read_in_stage(prop, signal, control_in, control_out, cfg).eta_read_in;
}

MemoryRunResult retrieve(const MemoryRunResult& result, const ControlPulse& control_out,
                         const SolverConfig& cfg) {
  if (!result.context || result.spinwave_snapshot.amp.empty())
    throw ConfigError("retrieval needs a run with a spin-wave snapshot");
  const auto& ctx = *result.context;
  const auto dir = cfg.retrieval_direction;
  const Propagator prop(ctx.scheme, ctx.ensemble, cfg);
  if (prop.n_z() != result.spinwave_snapshot.n_z ||
      static_cast<int>(prop.classes().size()) != result.spinwave_snapshot.n_classes)
    throw ConfigError("solver config does not match the snapshot discretization");
  MemoryRunResult r = result;
  r.direction = dir;
  auto emitted = read_out(prop, result.grid, result.snapshot_step, result.spinwave_snapshot,
                          ctx.control_in, control_out, dir);
  r.retrieved_envelope = SignalEnvelope::tabulated(result.grid, std::move(emitted));
  fill_efficiencies(r);
  return r;
}

MemoryRunResult retrieve_backward(const MemoryRunResult& result, const ControlPulse& control_out,
                                  const SolverConfig& cfg) {
  SolverConfig c = cfg;
  c.retrieval_direction = RetrievalDirection::backward;
  return retrieve(result, control_out, c);
}

double calibrate_coupling(double target_read_in, const CalibrationReference& ref) {
  if (!(target_read_in > 0.0 && target_read_in < 1.0))
    throw ConfigError("calibration target must lie in (0, 1)");
  SolverConfig cfg = ref.solver;
  auto eta = [&](double log_d2) {
    cfg.coupling_d2 = std::exp(log_d2);
    return read_in_efficiency(ref.scheme, ref.ensemble, ref.signal, ref.control_in,
                              ref.control_out, ref.storage_time, cfg);
  };

  constexpr double log_min = -20.0;  // ~2e-9
  constexpr double log_max = 23.0;   // ~1e10
  double x0 = std::log(ref.solver.coupling_d2 > 0.0 ? ref.solver.coupling_d2 : 1.0);
  x0 = std::clamp(x0, log_min, log_max);
  double f0 = eta(x0) - target_read_in;
  double a = x0, fa = f0, b = x0, fb = f0;
  const double step = std::log(4.0);
  if (f0 < 0.0) {
    while (fb < 0.0) {
      a = b;
      fa = fb;
      if (b >= log_max)
        throw CalibrationError("read-in target above the achievable range", 0.0, fb + target_read_in);
      b = std::min(b + step, log_max);
      fb = eta(b) - target_read_in;
    }
  } else {
    while (fa > 0.0) {
      b = a;
      fb = fa;
      if (a <= log_min)
        throw CalibrationError("read-in target below the achievable range", fa + target_read_in, 1.0);
      a = std::max(a - step, log_min);
      fa = eta(a) - target_read_in;
    }
  }
  if (fa == 0.0) return std::exp(a);
  if (fb == 0.0) return std::exp(b);

  std::uintmax_t iters = 60;
  auto tol = [](double lo, double hi) { return std::abs(hi - lo) < 1e-9; };
  auto f = [&](double x) { return eta(x) - target_read_in; };
  const auto root = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return std::exp(0.5 * (root.first + root.second));
}

}  // namespace orca
