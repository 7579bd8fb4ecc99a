#include "orca/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "orca/error.hpp"

namespace orca {

namespace {

using Value = std::variant<double, bool, std::string, std::vector<double>>;

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double as_number(const Value& v, const std::string& where) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError(where + ": expected a number");
}

int as_int(const Value& v, const std::string& where) {
  const double d = as_number(v, where);
  if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError(where + ": expected an integer");
  return static_cast<int>(d);
}

bool as_bool(const Value& v, const std::string& where) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError(where + ": expected true or false");
}

std::string as_string(const Value& v, const std::string& where) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(where + ": expected a quoted string");
}

std::vector<double> as_array(const Value& v, const std::string& where) {
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw ConfigError(where + ": expected an array of numbers");
}

std::string fmt_array(const std::vector<double>& a) {
  std::string s = "[";
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + fmt(a[i]);
  return s + "]";
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const Value&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Acc>
Field num(const char* s, const char* k, Acc acc) {
  return {s, k, [acc](RunConfig& c, const Value& v, const std::string& w) { acc(c) = as_number(v, w); },
          [acc](const RunConfig& c) { return fmt(acc(const_cast<RunConfig&>(c))); }};
}

template <class Acc>
Field integer(const char* s, const char* k, Acc acc) {
  return {s, k, [acc](RunConfig& c, const Value& v, const std::string& w) { acc(c) = as_int(v, w); },
          [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); }};
}

template <class Acc>
Field flag(const char* s, const char* k, Acc acc) {
  return {s, k, [acc](RunConfig& c, const Value& v, const std::string& w) { acc(c) = as_bool(v, w); },
          [acc](const RunConfig& c) {
            return std::string(acc(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    // run
    f.push_back(integer("run", "jobs", [](RunConfig& c) -> int& { return c.jobs; }));
    f.push_back({"run", "seed",
                 [](RunConfig& c, const Value& v, const std::string& w) {
                   const double d = as_number(v, w);
                   if (d < 0 || d != std::floor(d) || d > 9.007199254740992e15)
                     throw ConfigError(w + ": expected a non-negative integer");
                   c.seed = static_cast<std::uint64_t>(d);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back({"run", "output_dir",
                 [](RunConfig& c, const Value& v, const std::string& w) { c.output_dir = as_string(v, w); },
                 [](const RunConfig& c) { return "\"" + c.output_dir + "\""; }});
    // scheme
    f.push_back(num("scheme", "lambda_signal", [](RunConfig& c) -> double& { return c.scheme.lambda_signal; }));
    f.push_back(num("scheme", "lambda_control", [](RunConfig& c) -> double& { return c.scheme.lambda_control; }));
    f.push_back(num("scheme", "delta_intermediate", [](RunConfig& c) -> double& { return c.scheme.delta_intermediate; }));
    f.push_back(num("scheme", "gamma_e", [](RunConfig& c) -> double& { return c.scheme.gamma_e; }));
    f.push_back(num("scheme", "tau_storage", [](RunConfig& c) -> double& { return c.scheme.tau_storage; }));
    f.push_back(num("scheme", "control_waist", [](RunConfig& c) -> double& { return c.control_waist; }));
    f.push_back({"scheme", "geometry",
                 [](RunConfig& c, const Value& v, const std::string& w) {
                   const auto s = as_string(v, w);
                   if (s == "counter_propagating") c.scheme.geometry = Geometry::counter_propagating;
                   else if (s == "co_propagating") c.scheme.geometry = Geometry::co_propagating;
                   else throw ConfigError(w + ": expected \"counter_propagating\" or \"co_propagating\"");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.scheme.geometry == Geometry::counter_propagating
                                          ? "\"counter_propagating\""
                                          : "\"co_propagating\"");
                 }});
    f.push_back({"scheme", "pathway_offsets",
                 [](RunConfig& c, const Value& v, const std::string& w) { c.pathway_offsets = as_array(v, w); },
                 [](const RunConfig& c) { return fmt_array(c.pathway_offsets); }});
    f.push_back({"scheme", "pathway_weights",
                 [](RunConfig& c, const Value& v, const std::string& w) { c.pathway_weights = as_array(v, w); },
                 [](const RunConfig& c) { return fmt_array(c.pathway_weights); }});
    f.push_back({"scheme", "pathway_phases",
                 [](RunConfig& c, const Value& v, const std::string& w) { c.pathway_phases = as_array(v, w); },
                 [](const RunConfig& c) { return fmt_array(c.pathway_phases); }});
    // ensemble
    f.push_back(num("ensemble", "cell_length", [](RunConfig& c) -> double& { return c.ensemble.cell_length; }));
    f.push_back(num("ensemble", "temperature", [](RunConfig& c) -> double& { return c.ensemble.temperature; }));
    f.push_back(num("ensemble", "isotope_fraction_87", [](RunConfig& c) -> double& { return c.ensemble.isotope_fraction_87; }));
    f.push_back(num("ensemble", "atomic_mass", [](RunConfig& c) -> double& { return c.ensemble.atomic_mass; }));
    // solver
    f.push_back(integer("solver", "n_z", [](RunConfig& c) -> int& { return c.solver.n_z; }));
    f.push_back(integer("solver", "n_t", [](RunConfig& c) -> int& { return c.solver.n_t; }));
    f.push_back(integer("solver", "n_v", [](RunConfig& c) -> int& { return c.solver.n_v; }));
    f.push_back(num("solver", "time_span", [](RunConfig& c) -> double& { return c.solver.time_span; }));
    f.push_back(num("solver", "coupling_d2", [](RunConfig& c) -> double& { return c.solver.coupling_d2; }));
    f.push_back(flag("solver", "include_stark", [](RunConfig& c) -> bool& { return c.solver.include_stark; }));
    f.push_back(flag("solver", "include_doppler", [](RunConfig& c) -> bool& { return c.solver.include_doppler; }));
    f.push_back(flag("solver", "include_dispersion", [](RunConfig& c) -> bool& { return c.solver.include_dispersion; }));
    f.push_back(flag("solver", "include_decay", [](RunConfig& c) -> bool& { return c.solver.include_decay; }));
    f.push_back({"solver", "retrieval_direction",
                 [](RunConfig& c, const Value& v, const std::string& w) {
                   const auto s = as_string(v, w);
                   if (s == "forward") c.solver.retrieval_direction = RetrievalDirection::forward;
                   else if (s == "backward") c.solver.retrieval_direction = RetrievalDirection::backward;
                   else throw ConfigError(w + ": expected \"forward\" or \"backward\"");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.solver.retrieval_direction == RetrievalDirection::forward
                                          ? "\"forward\""
                                          : "\"backward\"");
                 }});
    // calibration
    f.push_back(flag("calibration", "enabled", [](RunConfig& c) -> bool& { return c.calibration.enabled; }));
    f.push_back(num("calibration", "target_read_in", [](RunConfig& c) -> double& { return c.calibration.target_read_in; }));
    f.push_back(num("calibration", "e_in_nj", [](RunConfig& c) -> double& { return c.calibration.e_in_nj; }));
    f.push_back(num("calibration", "e_out_nj", [](RunConfig& c) -> double& { return c.calibration.e_out_nj; }));
    f.push_back(num("calibration", "storage_time", [](RunConfig& c) -> double& { return c.calibration.storage_time; }));
    // sequence
    f.push_back(num("sequence", "mu_in", [](RunConfig& c) -> double& { return c.sequence.mu_in; }));
    f.push_back(num("sequence", "signal_fwhm", [](RunConfig& c) -> double& { return c.sequence.signal_fwhm; }));
    f.push_back(num("sequence", "e_in_nj", [](RunConfig& c) -> double& { return c.sequence.e_in_nj; }));
    f.push_back(num("sequence", "e_out_nj", [](RunConfig& c) -> double& { return c.sequence.e_out_nj; }));
    f.push_back(num("sequence", "storage_time", [](RunConfig& c) -> double& { return c.sequence.storage_time; }));
    f.push_back(num("sequence", "control_bandwidth", [](RunConfig& c) -> double& { return c.sequence.control_bandwidth; }));
    f.push_back(num("sequence", "chirp_rate", [](RunConfig& c) -> double& { return c.sequence.chirp_rate; }));
    f.push_back(num("sequence", "repetition_rate_signal", [](RunConfig& c) -> double& { return c.sequence.repetition_rate_signal; }));
    f.push_back(num("sequence", "repetition_rate_control", [](RunConfig& c) -> double& { return c.sequence.repetition_rate_control; }));
    f.push_back(flag("sequence", "hardware_timing", [](RunConfig& c) -> bool& { return c.sequence.hardware_timing; }));
    // noise
    f.push_back(num("noise", "n0", [](RunConfig& c) -> double& { return c.noise.n0; }));
    f.push_back(num("noise", "n1", [](RunConfig& c) -> double& { return c.noise.n1; }));
    f.push_back(num("noise", "window", [](RunConfig& c) -> double& { return c.noise.window; }));
    // detection
    f.push_back(num("detection", "eta_det", [](RunConfig& c) -> double& { return c.detection.eta_det; }));
    f.push_back(num("detection", "eta_det_sigma", [](RunConfig& c) -> double& { return c.detection.eta_det_sigma; }));
    f.push_back(num("detection", "eta_trans", [](RunConfig& c) -> double& { return c.detection.eta_trans; }));
    f.push_back(num("detection", "eta_trans_sigma", [](RunConfig& c) -> double& { return c.detection.eta_trans_sigma; }));
    f.push_back(num("detection", "timing_jitter_sigma", [](RunConfig& c) -> double& { return c.detection.timing_jitter_sigma; }));
    f.push_back(num("detection", "bin_width", [](RunConfig& c) -> double& { return c.detection.bin_width; }));
    f.push_back(num("detection", "acquisition_time", [](RunConfig& c) -> double& { return c.acquisition.acquisition_time; }));
    f.push_back(num("detection", "read_in_center", [](RunConfig& c) -> double& { return c.acquisition.read_in_center; }));
    f.push_back(num("detection", "read_out_center", [](RunConfig& c) -> double& { return c.acquisition.read_out_center; }));
    f.push_back(num("detection", "window_width", [](RunConfig& c) -> double& { return c.acquisition.window_width; }));
    // optimizer
    f.push_back({"optimizer", "mode",
                 [](RunConfig& c, const Value& v, const std::string& w) {
                   const auto s = as_string(v, w);
                   if (s != "control" && s != "ratio") throw ConfigError(w + ": expected \"control\" or \"ratio\"");
                   c.optimizer.mode = s;
                 },
                 [](const RunConfig& c) { return "\"" + c.optimizer.mode + "\""; }});
    f.push_back({"optimizer", "objective",
                 [](RunConfig& c, const Value& v, const std::string& w) {
                   try {
                     c.optimizer.objective = parse_objective(as_string(v, w));
                   } catch (const ConfigError& e) {
                     throw ConfigError(w + ": " + e.what());
                   }
                 },
                 [](const RunConfig& c) { return "\"" + to_string(c.optimizer.objective) + "\""; }});
    f.push_back({"optimizer", "basis",
                 [](RunConfig& c, const Value& v, const std::string& w) {
                   try {
                     c.optimizer.basis = parse_basis(as_string(v, w));
                   } catch (const ConfigError& e) {
                     throw ConfigError(w + ": " + e.what());
                   }
                 },
                 [](const RunConfig& c) { return "\"" + to_string(c.optimizer.basis) + "\""; }});
    f.push_back(integer("optimizer", "knots", [](RunConfig& c) -> int& { return c.optimizer.knots; }));
    f.push_back(integer("optimizer", "budget", [](RunConfig& c) -> int& { return c.optimizer.budget; }));
    f.push_back(integer("optimizer", "max_restarts", [](RunConfig& c) -> int& { return c.optimizer.max_restarts; }));
    f.push_back(num("optimizer", "tolerance", [](RunConfig& c) -> double& { return c.optimizer.tolerance; }));
    f.push_back(num("optimizer", "energy_budget_nj", [](RunConfig& c) -> double& { return c.optimizer.energy_budget_nj; }));
    f.push_back(num("optimizer", "energy_min_nj", [](RunConfig& c) -> double& { return c.optimizer.energy_min_nj; }));
    f.push_back(num("optimizer", "energy_max_nj", [](RunConfig& c) -> double& { return c.optimizer.energy_max_nj; }));
    f.push_back(num("optimizer", "r_min", [](RunConfig& c) -> double& { return c.optimizer.r_min; }));
    f.push_back(num("optimizer", "r_max", [](RunConfig& c) -> double& { return c.optimizer.r_max; }));
    // sweep
    f.push_back({"sweep", "axis",
                 [](RunConfig& c, const Value& v, const std::string& w) {
                   const auto s = as_string(v, w);
                   if (s != "storage_time" && s != "energy" && s != "mu_in")
                     throw ConfigError(w + ": expected \"storage_time\", \"energy\" or \"mu_in\"");
                   c.sweep.axis = s;
                 },
                 [](const RunConfig& c) { return "\"" + c.sweep.axis + "\""; }});
    f.push_back({"sweep", "values",
                 [](RunConfig& c, const Value& v, const std::string& w) { c.sweep.values = as_array(v, w); },
                 [](const RunConfig& c) { return fmt_array(c.sweep.values); }});
    f.push_back(num("sweep", "ratio_R", [](RunConfig& c) -> double& { return c.sweep.ratio_R; }));
    return f;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Drops a trailing # comment outside quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  std::string t = s;
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ConfigError(where + ": cannot parse value '" + s + "'");
  return v;
}

Value parse_value(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError(where + ": missing value");
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"' || s.find('"', 1) != s.size() - 1)
      throw ConfigError(where + ": malformed string");
    return s.substr(1, s.size() - 2);
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError(where + ": unterminated array");
    std::vector<double> out;
    std::stringstream ss(s.substr(1, s.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(parse_double(item, where));
    }
    return out;
  }
  return parse_double(s, where);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  std::map<std::pair<std::string, std::string>, const Field*> index;
  std::set<std::string> sections;
  for (const auto& f : fields()) {
    index[{f.section, f.key}] = &f;
    sections.insert(f.section);
  }

  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where_line = "line " + std::to_string(lineno);
    line = trim(strip_comment(line));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where_line + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where_line + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (section.empty()) throw ConfigError(where_line + ": key '" + key + "' outside a section");
    const std::string full = section + "." + key;
    const auto it = index.find({section, key});
    if (it == index.end()) throw ConfigError("unknown config key '" + full + "'");
    if (!seen.insert(full).second) throw ConfigError("duplicate config key '" + full + "'");
    it->second->set(cfg, parse_value(line.substr(eq + 1), full), full);
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

HyperfinePathwaySet RunConfig::pathways() const {
  if (pathway_offsets.empty() && pathway_weights.empty() && pathway_phases.empty()) return {};
  const std::size_t n = pathway_offsets.size();
  if (pathway_weights.size() != n || (!pathway_phases.empty() && pathway_phases.size() != n))
    throw ConfigError("scheme.pathway_offsets, pathway_weights and pathway_phases must have equal length");
  std::vector<Pathway> list(n);
  for (std::size_t i = 0; i < n; ++i) {
    list[i].detuning_offset = pathway_offsets[i];
    list[i].amplitude_weight = std::polar(pathway_weights[i], pathway_phases.empty() ? 0.0 : pathway_phases[i]);
  }
  return HyperfinePathwaySet(std::move(list));
}

LadderScheme RunConfig::ladder() const {
  LadderScheme s = scheme;
  s.pathways = pathways();
  return s;
}

void RunConfig::validate() const {
  ladder().validate();
  ensemble.validate();
  solver.validate();
  noise.validate();
  detection.validate();
  if (!(control_waist > 0.0)) throw ConfigError("scheme.control_waist must be positive");
  if (jobs < 1) throw ConfigError("run.jobs must be >= 1");
  const auto& s = sequence;
  if (!(s.mu_in >= 0.0)) throw ConfigError("sequence.mu_in must be >= 0");
  if (!(s.signal_fwhm > 0.0)) throw ConfigError("sequence.signal_fwhm must be positive");
  if (!(s.e_in_nj >= 0.0) || !(s.e_out_nj >= 0.0)) throw ConfigError("sequence energies must be >= 0");
  if (!(s.storage_time >= 0.0)) throw ConfigError("sequence.storage_time must be >= 0");
  if (!(s.control_bandwidth > 0.0)) throw ConfigError("sequence.control_bandwidth must be positive");
  if (!(calibration.target_read_in > 0.0 && calibration.target_read_in < 1.0))
    throw ConfigError("calibration.target_read_in must lie in (0, 1)");
  if (!(acquisition.acquisition_time > 0.0)) throw ConfigError("detection.acquisition_time must be positive");
  if (!(acquisition.window_width > 0.0)) throw ConfigError("detection.window_width must be positive");
  if (optimizer.knots < 2) throw ConfigError("optimizer.knots must be >= 2");
  if (optimizer.budget < 1) throw ConfigError("optimizer.budget must be >= 1");
  if (!(optimizer.r_min > 0.0) || !(optimizer.r_max > optimizer.r_min))
    throw ConfigError("optimizer.r_min/r_max must form a positive interval");
  if (!(sweep.ratio_R > 0.0)) throw ConfigError("sweep.ratio_R must be positive");
  pulse_sequence().validate();
}

double RunConfig::rabi_area_per_joule() const { return orca::rabi_area_per_joule(control_waist); }

ModelSetup RunConfig::model() const { return {ladder(), ensemble, solver}; }

PulseSequence RunConfig::pulse_sequence() const {
  const auto& s = sequence;
  PulseSequence seq = PulseSequence::standard(s.mu_in, s.e_in_nj, s.e_out_nj, s.storage_time,
                                              s.signal_fwhm, s.control_bandwidth, s.chirp_rate,
                                              rabi_area_per_joule());
  seq.repetition_rate_signal = s.repetition_rate_signal;
  seq.repetition_rate_control = s.repetition_rate_control;
  seq.hardware_timing = s.hardware_timing;
  return seq;
}

AnalysisWindows RunConfig::windows() const {
  AnalysisWindows w;
  w.read_in_center = acquisition.read_in_center;
  w.read_out_center = acquisition.read_out_center >= 0.0 ? acquisition.read_out_center
                                                         : sequence.storage_time;
  w.width = acquisition.window_width;
  return w;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(*this) << '\n';
  }
  return os.str();
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash() const {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  // Where and how fast a run executes does not change its results.
  RunConfig c = *this;
  c.output_dir = RunConfig{}.output_dir;
  c.jobs = RunConfig{}.jobs;
  os << fnv1a64(c.canonical());
  return os.str();
}

}  // namespace orca
