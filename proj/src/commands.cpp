#include "orca/commands.hpp"

#include <fstream>

#include "orca/error.hpp"
#include "orca/io.hpp"

namespace orca {

namespace fs = std::filesystem;

namespace {

// Energy at which the default noise split is pinned to the measured level.
constexpr double noise_reference_energy_nj = 4.17;

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write output file '" + path.string() + "'");
  return f;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

Histogram read_histogram(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw AnalysisError("cannot open histogram file '" + path.string() + "'");
  try {
    return Histogram::read_csv(f);
  } catch (const AnalysisError& e) {
    throw AnalysisError(path.string() + ": " + e.what());
  }
}

MemoryFigures figures_from(const ExtractedEfficiencies& e, const DetectionChain& chain) {
  return compute_figures(e.mu_in, e.noise, e.eta_mem, {chain.eta_trans, chain.eta_trans_sigma},
                         {chain.eta_det, chain.eta_det_sigma});
}

}  // namespace

Provenance provenance_of(const RunConfig& cfg) { return {cfg.hash(), cfg.seed, artifact_version}; }

ModelSetup prepare_model(const RunConfig& cfg) {
  ModelSetup m = cfg.model();
  if (!cfg.calibration.enabled) return m;
  const auto& c = cfg.calibration;
  const PulseSequence ref = PulseSequence::standard(
      cfg.sequence.mu_in > 0.0 ? cfg.sequence.mu_in : 1.0, c.e_in_nj, c.e_out_nj, c.storage_time,
      cfg.sequence.signal_fwhm, cfg.sequence.control_bandwidth, cfg.sequence.chirp_rate,
      cfg.rabi_area_per_joule());
  CalibrationReference r{m.scheme, m.ensemble, ref.signal, ref.control_in, ref.control_out,
                         ref.storage_time, m.solver};
  m.solver.coupling_d2 = calibrate_coupling(c.target_read_in, r);
  return m;
}

SimulationProducts cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const ModelSetup model = prepare_model(cfg);
  const PulseSequence seq = cfg.pulse_sequence();
  SimulationProducts p;
  p.run = run_sequence(model, seq);

  const double e_total = seq.total_energy_nj();
  const double n_mem = cfg.noise.per_window(e_total);
  const double n_ref = cfg.noise.per_window(0.0);
  SynthesisOptions opt;
  opt.signal_rate = seq.repetition_rate_signal;
  opt.noise_window = cfg.noise.window;
  opt.span_begin = p.run.grid.t0;
  opt.span_end = p.run.grid.end();
  const double t_acq = cfg.acquisition.acquisition_time;
  p.input = synthesize_histogram(p.run.input_envelope, cfg.detection, n_ref, t_acq,
                                 split_seed(cfg.seed, 1), opt);
  p.memory = synthesize_histogram(p.run.output_envelope(), cfg.detection, n_mem, t_acq,
                                  split_seed(cfg.seed, 2), opt);
  p.noise = synthesize_histogram(SignalEnvelope::gaussian(0.0), cfg.detection, n_mem, t_acq,
                                 split_seed(cfg.seed, 3), opt);

  const auto e = extract_efficiencies(p.input, p.memory, p.noise, cfg.detection, cfg.windows());
  auto j = figures_json(figures_from(e, cfg.detection), e);
  const double mu = seq.signal.photon_number();
  j["model_eta_read_in"] = p.run.eta_read_in;
  j["model_eta_read_out"] = p.run.eta_read_out;
  j["model_eta_mem"] = p.run.eta_mem;
  j["model_noise"] = n_mem;
  j["model_snr"] = n_mem > 0.0 ? p.run.eta_mem * mu / n_mem : 0.0;
  if (p.run.eta_mem > 0.0) j["model_mu1"] = mu_one(n_mem, p.run.eta_mem);
  else j["model_mu1"] = nullptr;
  j["noise_dN_dn0"] = 1.0 - e_total / noise_reference_energy_nj;
  j["coupling_d2"] = model.solver.coupling_d2;
  provenance_of(cfg).add_to(j);
  p.figures = j;

  if (!out.empty()) {
    ensure_dir(out);
    const auto prov = provenance_of(cfg);
    {
      auto f = open_output(out / "envelopes.csv");
      write_envelopes_csv(f, p.run, prov);
    }
    for (const auto& [name, h] : {std::pair{"histogram_input.csv", &p.input},
                                  std::pair{"histogram_memory.csv", &p.memory},
                                  std::pair{"histogram_noise.csv", &p.noise}}) {
      auto f = open_output(out / name);
      h->write_csv(f, prov.line());
    }
    {
      auto f = open_output(out / "figures.json");
      f << j.dump(2) << '\n';
    }
    {
      auto f = open_output(out / "config.toml");
      f << "# " << prov.line() << '\n' << cfg.canonical();
    }
  }
  return p;
}

fs::path cmd_sweep(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  ensure_dir(out);
  const fs::path path = out / "sweep.csv";
  const auto prov = provenance_of(cfg);
  const auto& sw = cfg.sweep;
  if (sw.axis.empty()) throw ConfigError("sweep.axis is required (storage_time | energy | mu_in)");
  const PulseSequence seq = cfg.pulse_sequence();

  if (sw.values.empty()) {
    auto f = open_output(path);
    if (sw.axis == "storage_time") write_storage_sweep_csv(f, {}, prov);
    else if (sw.axis == "energy") write_energy_sweep_csv(f, {}, {}, prov);
    else write_photon_series_csv(f, {}, 0.0, prov);
    return path;
  }

  const ModelSetup model = prepare_model(cfg);
  if (sw.axis == "storage_time") {
    const auto s = storage_time_sweep(model, seq, sw.values, cfg.jobs);
    auto f = open_output(path);
    write_storage_sweep_csv(f, s, prov);
  } else if (sw.axis == "energy") {
    const auto rows = energy_sweep(model, seq, sw.values, sw.ratio_R, cfg.jobs);
    std::vector<double> noise;
    for (const auto& r : rows) noise.push_back(cfg.noise.per_window(r.total_energy_nj));
    auto f = open_output(path);
    write_energy_sweep_csv(f, rows, noise, prov);
  } else {
    const auto r = run_sequence(model, seq);
    const double n = cfg.noise.per_window(seq.total_energy_nj());
    const auto rows = photon_number_series(r.eta_mem, n, sw.values);
    auto f = open_output(path);
    write_photon_series_csv(f, rows, r.eta_mem, prov);
  }
  return path;
}

nlohmann::ordered_json cmd_analyze(const RunConfig& cfg, const fs::path& input,
                                   const fs::path& memory, const fs::path& noise) {
  cfg.validate();
  const Histogram hi = read_histogram(input);
  const Histogram hm = read_histogram(memory);
  const Histogram hn = read_histogram(noise);
  for (const auto& [h, path] : {std::pair{&hm, &memory}, std::pair{&hn, &noise}}) {
    if (!hi.same_binning(*h) || hi.trials != h->trials)
      throw AnalysisError("binning or trial count of '" + path->string() + "' does not match '" +
                          input.string() + "'");
  }
  const auto e = extract_efficiencies(hi, hm, hn, cfg.detection, cfg.windows());
  auto j = figures_json(figures_from(e, cfg.detection), e);
  provenance_of(cfg).add_to(j);
  return j;
}

nlohmann::ordered_json cmd_optimize(const RunConfig& cfg, const fs::path& out,
                                    const fs::path& resume) {
  cfg.validate();
  ensure_dir(out);
  const auto prov = provenance_of(cfg);
  const auto& oc = cfg.optimizer;
  const ModelSetup model = prepare_model(cfg);
  const PulseSequence seq = cfg.pulse_sequence();
  nlohmann::ordered_json j;
  j["mode"] = oc.mode;

  if (oc.mode == "ratio") {
    const auto r = optimize_ratio(model, seq, oc.r_min, oc.r_max, oc.budget);
    j["total_energy_nj"] = seq.total_energy_nj();
    j["best_R"] = r.best_R;
    j["best_eta_mem"] = r.best_value;
    j["evaluations"] = r.trace.size();
    auto f = open_output(out / "trace.csv");
    write_trace_csv(f, {"R"}, r.trace, prov.line());
  } else {
    const double budget_nj = oc.energy_budget_nj > 0.0 ? oc.energy_budget_nj : cfg.sequence.e_in_nj;
    ControlParameterization param;
    switch (oc.basis) {
      case Basis::energy_only:
        param = ControlParameterization::energy_only(oc.energy_min_nj, oc.energy_max_nj);
        break;
      case Basis::gaussian:
      case Basis::chirped_gaussian:
        param = ControlParameterization::gaussian(seq.control_in, budget_nj,
                                                  oc.basis == Basis::chirped_gaussian);
        break;
      case Basis::piecewise:
        param = ControlParameterization::piecewise(seq.control_in, oc.knots, budget_nj);
        break;
    }
    OptimizeOptions o;
    o.budget = oc.budget;
    o.max_restarts = oc.max_restarts;
    o.tolerance = oc.tolerance;
    o.seed = cfg.seed;
    o.jobs = cfg.jobs;
    if (!resume.empty()) {
      std::ifstream f(resume);
      if (!f) throw ConfigError("cannot open trace file '" + resume.string() + "'");
      o.cache = read_trace_csv(f, param.size());
    }
    const auto r = optimize_control(oc.objective, param, model, seq, o);
    j["objective"] = to_string(oc.objective);
    j["basis"] = to_string(oc.basis);
    j["energy_budget_nj"] = param.total_energy_budget_nj;
    j["best_value"] = r.best_value;
    j["initial_value"] = r.initial_value;
    j["converged"] = r.converged;
    j["evaluations"] = r.evaluations;
    j["resumed_evaluations"] = r.cache_hits;
    nlohmann::ordered_json params;
    for (std::size_t i = 0; i < param.size(); ++i) params[param.bounds[i].name] = r.best_params[i];
    j["params"] = params;
    std::vector<std::string> names;
    for (const auto& b : param.bounds) names.push_back(b.name);
    auto f = open_output(out / "trace.csv");
    write_trace_csv(f, names, r.trace, prov.line());
  }
  prov.add_to(j);
  auto f = open_output(out / "best_params.json");
  f << j.dump(2) << '\n';
  return j;
}

}  // namespace orca
