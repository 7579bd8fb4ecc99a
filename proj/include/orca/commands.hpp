#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "orca/config.hpp"
#include "orca/io.hpp"

namespace orca {

/// Model with the coupling calibrated when the config asks for it.
ModelSetup prepare_model(const RunConfig& cfg);

struct SimulationProducts {
  MemoryRunResult run;
  Histogram input;
  Histogram memory;
  Histogram noise;
  nlohmann::ordered_json figures;
};

/// One storage/retrieval at the configured point plus its synthetic
/// measurement. Writes envelopes.csv, histogram_{input,memory,noise}.csv,
/// figures.json and config.toml into `out` unless it is empty.
SimulationProducts cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out);

/// Writes sweep.csv; returns its path.
std::filesystem::path cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out);

nlohmann::ordered_json cmd_analyze(const RunConfig& cfg, const std::filesystem::path& input,
                                   const std::filesystem::path& memory,
                                   const std::filesystem::path& noise);

/// Writes best_params.json and trace.csv; `resume` names an earlier trace.
nlohmann::ordered_json cmd_optimize(const RunConfig& cfg, const std::filesystem::path& out,
                                    const std::filesystem::path& resume = {});

Provenance provenance_of(const RunConfig& cfg);

}  // namespace orca
