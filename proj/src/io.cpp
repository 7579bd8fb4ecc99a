#include "orca/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace orca {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string Provenance::line() const {
  return "orca version=" + version + " config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

void Provenance::add_to(nlohmann::ordered_json& j) const {
  j["version"] = version;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
}

void write_envelopes_csv(std::ostream& os, const MemoryRunResult& r, const Provenance& p) {
  os << "# " << p.line() << '\n';
  os << "time_s,input_re,input_im,transmitted_re,transmitted_im,retrieved_re,retrieved_im\n";
  const auto& in = r.input_envelope.amplitude();
  const auto& tr = r.transmitted_envelope.amplitude();
  const auto& re = r.retrieved_envelope.amplitude();
  for (std::size_t i = 0; i < r.grid.n; ++i) {
    os << format_number(r.grid.time(i));
    for (const auto* v : {&in, &tr, &re}) {
      const cplx a = i < v->size() ? (*v)[i] : cplx{};
      os << ',' << format_number(a.real()) << ',' << format_number(a.imag());
    }
    os << '\n';
  }
}

namespace {

// JSON has no infinity; null marks it and the flag field says why.
void put(nlohmann::ordered_json& j, const std::string& name, const Measured& m) {
  if (std::isfinite(m.value)) j[name] = m.value;
  else j[name] = nullptr;
  j[name + "_err"] = std::isfinite(m.sigma) ? m.sigma : 0.0;
}

}  // namespace

nlohmann::ordered_json figures_json(const MemoryFigures& f, const ExtractedEfficiencies& e) {
  nlohmann::ordered_json j;
  put(j, "mu_in", f.mu_in);
  put(j, "noise", f.noise);
  put(j, "eta_read_in", e.eta_read_in);
  put(j, "eta_read_out", e.eta_read_out);
  put(j, "eta_mem", f.eta_mem);
  put(j, "snr", f.snr);
  j["snr_infinite"] = f.snr_infinite;
  put(j, "mu1", f.mu1);
  put(j, "g2_out", f.g2_out_pred);
  put(j, "fidelity", f.fidelity_pred);
  put(j, "throughput", f.throughput);
  j["inconsistent"] = e.inconsistent;
  j["note"] = e.note;
  return j;
}

void write_storage_sweep_csv(std::ostream& os, const StorageSweep& s, const Provenance& p) {
  os << "# " << p.line() << '\n';
  if (!s.fit_error.empty()) os << "# lifetime fit failed: " << s.fit_error << '\n';
  os << "storage_time_s,eta_read_in,eta_read_out,eta_mem,fit_lifetime_s,fit_lifetime_err_s,error\n";
  const std::string tau = s.fit ? format_number(s.fit->lifetime) : "nan";
  const std::string tau_err = s.fit ? format_number(s.fit->lifetime_sigma) : "nan";
  for (const auto& r : s.points) {
    os << format_number(r.storage_time) << ',' << format_number(r.eta_read_in) << ','
       << format_number(r.eta_read_out) << ',' << format_number(r.eta_mem) << ',' << tau << ','
       << tau_err << ',' << '"' << r.error << '"' << '\n';
  }
}

void write_energy_sweep_csv(std::ostream& os, const std::vector<EnergyPoint>& rows,
                            const std::vector<double>& noise, const Provenance& p) {
  os << "# " << p.line() << '\n';
  os << "total_energy_nj,e_in_nj,e_out_nj,eta_read_in,eta_read_out,eta_mem,noise,error\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << format_number(r.total_energy_nj) << ',' << format_number(r.e_in_nj) << ','
       << format_number(r.e_out_nj) << ',' << format_number(r.eta_read_in) << ','
       << format_number(r.eta_read_out) << ',' << format_number(r.eta_mem) << ','
       << format_number(noise[i]) << ',' << '"' << r.error << '"' << '\n';
  }
}

void write_photon_series_csv(std::ostream& os, const std::vector<PhotonNumberRow>& rows,
                             double eta_mem, const Provenance& p) {
  os << "# " << p.line() << " eta_mem=" << format_number(eta_mem) << '\n';
  os << "mu_in,input,memory,noise,snr,error\n";
  for (const auto& r : rows) {
    const double snr = r.noise > 0.0 ? r.memory / r.noise : std::numeric_limits<double>::infinity();
    os << format_number(r.mu_in) << ',' << format_number(r.input) << ','
       << format_number(r.memory) << ',' << format_number(r.noise) << ',' << format_number(snr)
       << ",\"\"\n";
  }
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::domain:
      return 1;
    case ErrorKind::numerical:
    case ErrorKind::calibration:
    case ErrorKind::optimization:
      return 2;
    case ErrorKind::range:
    case ErrorKind::fit:
    case ErrorKind::analysis:
      return 3;
  }
  return 2;
}

nlohmann::ordered_json error_json(ErrorKind kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = to_string(kind);
  j["message"] = message;
  j["exit_code"] = exit_code(kind);
  return j;
}

}  // namespace orca
