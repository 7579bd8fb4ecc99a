#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "orca/detection.hpp"
#include "orca/error.hpp"
#include "orca/experiment.hpp"
#include "orca/metrics.hpp"
#include "orca/solver.hpp"

namespace orca {

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;

  /// "orca version=... config_hash=... seed=..."
  std::string line() const;
  void add_to(nlohmann::ordered_json& j) const;
};

/// time_s plus (re, im) pairs for the input, transmitted and retrieved fields.
void write_envelopes_csv(std::ostream& os, const MemoryRunResult& r, const Provenance& p);

/// Flat figures object: each quantity as `name` and `name_err`.
nlohmann::ordered_json figures_json(const MemoryFigures& f, const ExtractedEfficiencies& e);

void write_storage_sweep_csv(std::ostream& os, const StorageSweep& s, const Provenance& p);
void write_energy_sweep_csv(std::ostream& os, const std::vector<EnergyPoint>& rows,
                            const std::vector<double>& noise, const Provenance& p);
void write_photon_series_csv(std::ostream& os, const std::vector<PhotonNumberRow>& rows,
                             double eta_mem, const Provenance& p);

/// Process exit code for an error kind: 1 config, 2 numerical, 3 analysis.
int exit_code(ErrorKind kind);
nlohmann::ordered_json error_json(ErrorKind kind, const std::string& message);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace orca
