#include "orca/optimizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "orca/error.hpp"

namespace orca {

Objective parse_objective(const std::string& name) {
  if (name == "eta_mem") return Objective::eta_mem;
  if (name == "eta_read_in") return Objective::eta_read_in;
  throw ConfigError("unknown objective '" + name + "' (eta_mem | eta_read_in)");
}

Basis parse_basis(const std::string& name) {
  if (name == "energy_only") return Basis::energy_only;
  if (name == "gaussian") return Basis::gaussian;
  if (name == "piecewise") return Basis::piecewise;
  if (name == "chirped_gaussian") return Basis::chirped_gaussian;
  throw ConfigError("unknown basis '" + name +
                    "' (energy_only | gaussian | piecewise | chirped_gaussian)");
}

std::string to_string(Objective o) { return o == Objective::eta_mem ? "eta_mem" : "eta_read_in"; }

std::string to_string(Basis b) {
  switch (b) {
    case Basis::energy_only: return "energy_only";
    case Basis::gaussian: return "gaussian";
    case Basis::piecewise: return "piecewise";
    case Basis::chirped_gaussian: return "chirped_gaussian";
  }
  return "?";
}

ControlParameterization ControlParameterization::energy_only(double lo_nj, double hi_nj) {
  ControlParameterization p;
  p.basis = Basis::energy_only;
  p.bounds = {{"energy_nj", lo_nj, hi_nj}};
  p.total_energy_budget_nj = hi_nj;
  p.validate();
  return p;
}

ControlParameterization ControlParameterization::gaussian(const ControlPulse& ref,
                                                          double budget_nj, bool chirped) {
  if (ref.shape() != PulseShape::gaussian)
    throw ConfigError("gaussian parameterization needs a gaussian reference pulse");
  const double w = ref.fwhm();
  ControlParameterization p;
  p.basis = chirped ? Basis::chirped_gaussian : Basis::gaussian;
  p.bounds = {{"center_s", ref.center_time() - w, ref.center_time() + w},
              {"fwhm_s", 0.5 * w, 3.0 * w},
              {"energy_nj", 0.0, budget_nj}};
  if (chirped) {
    const double a = 4.0 * std::numbers::pi / (w * w);
    p.bounds.push_back({"chirp_rad_s2", -a, a});
  }
  p.total_energy_budget_nj = budget_nj;
  p.validate();
  return p;
}

ControlParameterization ControlParameterization::piecewise(const ControlPulse& ref, int n_knots,
                                                           double budget_nj) {
  if (n_knots < 2) throw ConfigError("piecewise parameterization needs >= 2 knots");
  ControlParameterization p;
  p.basis = Basis::piecewise;
  const double half = 2.0 * ref.fwhm();
  for (int k = 0; k < n_knots; ++k) {
    p.knot_times.push_back(ref.center_time() - half + 2.0 * half * k / (n_knots - 1));
    p.bounds.push_back({"a" + std::to_string(k), 0.0, 1.0});
  }
  p.total_energy_budget_nj = budget_nj;
  p.validate();
  return p;
}

void ControlParameterization::validate() const {
  if (bounds.empty()) throw ConfigError("parameterization has no parameters");
  for (const auto& b : bounds)
    if (!(b.hi > b.lo) || !std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw ConfigError("bad bounds for parameter " + b.name);
  if (!(total_energy_budget_nj > 0.0)) throw ConfigError("energy budget must be positive");
  if (basis == Basis::piecewise && knot_times.size() != bounds.size())
    throw ConfigError("piecewise knots do not match the parameter count");
}

bool ControlParameterization::feasible(const std::vector<double>& p) const {
  if (p.size() != bounds.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] >= bounds[i].lo && p[i] <= bounds[i].hi)) return false;
  return true;
}

std::vector<double> ControlParameterization::initial(const ControlPulse& ref) const {
  std::vector<double> p;
  switch (basis) {
    case Basis::energy_only:
      p = {ref.energy() / nanojoule};
      break;
    case Basis::gaussian:
    case Basis::chirped_gaussian:
      p = {ref.center_time(), ref.fwhm(), ref.energy() / nanojoule};
      if (basis == Basis::chirped_gaussian) p.push_back(ref.chirp_rate());
      break;
    case Basis::piecewise: {
      double peak = 0.0;
      for (double t : knot_times) peak = std::max(peak, std::abs(ref.rabi(t)));
      for (double t : knot_times) p.push_back(peak > 0.0 ? std::abs(ref.rabi(t)) / peak : 1.0);
      break;
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], bounds[i].lo, bounds[i].hi);
  return p;
}

ControlPulse ControlParameterization::build(const std::vector<double>& p,
                                            const ControlPulse& ref) const {
  if (!feasible(p)) throw DomainError("parameter vector outside its bounds");
  switch (basis) {
    case Basis::energy_only:
      return ref.with_energy(p[0] * nanojoule);
    case Basis::gaussian:
    case Basis::chirped_gaussian: {
      const double bandwidth = 2.0 * std::log(2.0) / (std::numbers::pi * p[1]);
      const double chirp = basis == Basis::chirped_gaussian ? p[3] : 0.0;
      return ControlPulse::gaussian(p[2] * nanojoule, p[0], bandwidth, chirp,
                                    ref.rabi_area_per_joule());
    }
    case Basis::piecewise: {
      if (std::all_of(p.begin(), p.end(), [](double a) { return a == 0.0; }))
        throw DomainError("piecewise shape with all knots at zero");
      std::vector<cplx> amp(p.begin(), p.end());
      return ControlPulse::from_table(knot_times, std::move(amp),
                                      total_energy_budget_nj * nanojoule,
                                      ref.rabi_area_per_joule());
    }
  }
  throw DomainError("unknown basis");
}

namespace {

constexpr double failed = std::numeric_limits<double>::infinity();

struct Search {
  const std::function<double(const std::vector<double>&)>& f;
  const std::vector<ParameterBound>& bounds;
  OptimizeOptions& opt;
  OptimizeResult& result;
  double best_g = failed;
  std::vector<double> best_u;
  std::vector<std::string> failures;

  std::vector<double> physical(const std::vector<double>& u) const {
    std::vector<double> p(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto& b = bounds[i];
      p[i] = std::clamp(b.lo + std::clamp(u[i], 0.0, 1.0) * (b.hi - b.lo), b.lo, b.hi);
    }
    return p;
  }

  bool exhausted() const { return result.evaluations >= opt.budget; }

  // Minimization values (-objective); failures map to +inf. Returns fewer
  // values than requested when the budget runs out.
  std::vector<double> batch(const std::vector<std::vector<double>>& us) {
    const std::size_t room = static_cast<std::size_t>(opt.budget - result.evaluations);
    const std::size_t n = std::min(us.size(), room);
    std::vector<std::vector<double>> ps(n);
    for (std::size_t i = 0; i < n; ++i) ps[i] = physical(us[i]);
    struct Outcome {
      double value;
      std::string error;
      bool cached;
    };
    auto outcomes = parallel_map(n, opt.jobs, [&](std::size_t i) -> Outcome {
      if (auto it = opt.cache.find(ps[i]); it != opt.cache.end())
        return {it->second, std::isfinite(it->second) ? "" : "failed in resumed trace", true};
      try {
        const double v = f(ps[i]);
        if (!std::isfinite(v)) return {std::numeric_limits<double>::quiet_NaN(), "non-finite objective", false};
        return {v, "", false};
      } catch (const std::exception& e) {
        return {std::numeric_limits<double>::quiet_NaN(), e.what(), false};
      }
    });
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = outcomes[i];
      ++result.evaluations;
      if (o.cached) ++result.cache_hits;
      result.trace.push_back({ps[i], o.value, o.error});
      if (!std::isfinite(o.value)) {
        g[i] = failed;
        if (failures.size() < 10) failures.push_back(o.error);
        continue;
      }
      g[i] = -o.value;
      if (g[i] < best_g) {
        best_g = g[i];
        best_u = us[i];
      }
    }
    return g;
  }

  std::vector<double> clamp01(std::vector<double> u) const {
    for (auto& x : u) x = std::clamp(x, 0.0, 1.0);
    return u;
  }

  // One Nelder-Mead run; true when it stopped on the tolerance.
  bool run(const std::vector<double>& x0, const std::vector<double>& step) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> x(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = step[i];
      if (x0[i] + s > 1.0) s = -s;
      if (x0[i] + s < 0.0) s = x0[i] > 0.5 ? -x0[i] : 1.0 - x0[i];
      x[i + 1][i] += s;
    }
    auto g = batch(x);
    if (g.size() < x.size()) return false;

    std::vector<std::size_t> idx(n + 1);
    while (true) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return g[a] < g[b]; });
      const double g_best = g[idx[0]];
      const double g_worst = g[idx[n]];
      if (std::isfinite(g_worst) &&
          g_worst - g_best <= opt.tolerance * std::max(std::abs(g_best), 1e-12))
        return true;
      double diameter = 0.0;
      for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t i = 0; i < n; ++i)
          diameter = std::max(diameter, std::abs(x[idx[k]][i] - x[idx[0]][i]));
      if (diameter < 1e-9) return true;
      if (exhausted()) return false;

      std::vector<double> c(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) c[i] += x[idx[k]][i] / static_cast<double>(n);
      const auto& worst = x[idx[n]];
      auto along = [&](double t) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = c[i] + t * (worst[i] - c[i]);
        return clamp01(std::move(y));
      };

      const auto xr = along(-1.0);
      const auto gr_v = batch({xr});
      if (gr_v.empty()) return false;
      const double gr = gr_v[0];
      if (gr < g_best) {
        const auto xe = along(-2.0);
        const auto ge_v = batch({xe});
        if (ge_v.empty()) return false;
        if (ge_v[0] < gr) {
          x[idx[n]] = xe;
          g[idx[n]] = ge_v[0];
        } else {
          x[idx[n]] = xr;
          g[idx[n]] = gr;
        }
        continue;
      }
      if (gr < g[idx[n - 1]]) {
        x[idx[n]] = xr;
        g[idx[n]] = gr;
        continue;
      }
      const bool outside = gr < g_worst;
      const auto xc = along(outside ? -0.5 : 0.5);
      const auto gc_v = batch({xc});
      if (gc_v.empty()) return false;
      if (gc_v[0] < (outside ? gr : g_worst)) {
        x[idx[n]] = xc;
        g[idx[n]] = gc_v[0];
        continue;
      }
      std::vector<std::vector<double>> shrunk;
      for (std::size_t k = 1; k <= n; ++k) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i)
          y[i] = x[idx[0]][i] + 0.5 * (x[idx[k]][i] - x[idx[0]][i]);
        shrunk.push_back(std::move(y));
      }
      const auto gs = batch(shrunk);
      for (std::size_t k = 0; k < gs.size(); ++k) {
        x[idx[k + 1]] = shrunk[k];
        g[idx[k + 1]] = gs[k];
      }
      if (gs.size() < shrunk.size()) return false;
    }
  }
};

}  // namespace

OptimizeResult maximize(const std::function<double(const std::vector<double>&)>& f,
                        const std::vector<ParameterBound>& bounds, OptimizeOptions opt) {
  const std::size_t n = bounds.size();
  if (n == 0) throw ConfigError("optimizer needs at least one parameter");
  for (const auto& b : bounds)
    if (!(b.hi > b.lo)) throw ConfigError("bad bounds for parameter " + b.name);
  if (opt.budget < static_cast<int>(10 * n))
    throw ConfigError("optimizer budget must be >= 10 x parameter count (" +
                      std::to_string(10 * n) + ")");

  OptimizeResult result;
  Search s{f, bounds, opt, result, failed, {}, {}};

  std::vector<double> u0(n, 0.5);
  if (!opt.start.empty()) {
    if (opt.start.size() != n) throw ConfigError("start point has the wrong dimension");
    for (std::size_t i = 0; i < n; ++i)
      u0[i] = std::clamp((opt.start[i] - bounds[i].lo) / (bounds[i].hi - bounds[i].lo), 0.0, 1.0);
  }
  const auto g0 = s.batch({u0});
  result.initial_value = std::isfinite(g0[0]) ? -g0[0] : std::numeric_limits<double>::quiet_NaN();

  std::mt19937_64 rng(split_seed(opt.seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> step(n, opt.initial_step);
  std::vector<double> start = u0;
  bool converged = false;
  for (int restart = 0; restart <= opt.max_restarts && !s.exhausted(); ++restart) {
    const double before = s.best_g;
    converged = s.run(start, step);
    if (!converged) break;
    if (restart > 0 && std::isfinite(before) &&
        before - s.best_g <= opt.tolerance * std::max(std::abs(before), 1e-12))
      break;
    if (s.best_u.empty()) break;
    start = s.best_u;
    for (auto& st : step)
      st = opt.initial_step * (0.5 + unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
  }
  if (!std::isfinite(s.best_g)) {
    std::string log;
    for (const auto& e : s.failures) log += "\n  " + e;
    throw OptimizationError("all " + std::to_string(result.evaluations) +
                            " objective evaluations failed:" + log);
  }
  result.converged = converged;
  result.best_params = s.physical(s.best_u);
  result.best_value = -s.best_g;
  return result;
}

double evaluate_control(Objective objective, const ModelSetup& setup, const PulseSequence& base,
                        const ControlPulse& control_in) {
  PulseSequence seq = base;
  seq.control_in = control_in;
  seq.storage_time = seq.control_out.center_time() - control_in.center_time();
  seq.hardware_timing = false;
  if (objective == Objective::eta_read_in) {
    seq.validate();
    return read_in_efficiency(setup.scheme, setup.ensemble, seq.signal, seq.control_in,
                              seq.control_out, seq.storage_time, setup.solver);
  }
  return run_sequence(setup, seq).eta_mem;
}

OptimizeResult optimize_control(Objective objective, const ControlParameterization& param,
                                const ModelSetup& setup, const PulseSequence& base,
                                OptimizeOptions options) {
  param.validate();
  if (options.start.empty()) options.start = param.initial(base.control_in);
  auto f = [&](const std::vector<double>& p) {
    return evaluate_control(objective, setup, base, param.build(p, base.control_in));
  };
  return maximize(f, param.bounds, std::move(options));
}

RatioResult optimize_ratio(const std::function<double(double)>& objective, double r_min,
                           double r_max, int budget) {
  if (!(r_min > 0.0) || !(r_max > r_min)) throw ConfigError("R range must be a positive interval");
  if (budget < 4) throw ConfigError("ratio search budget must be >= 4");
  RatioResult res;
  res.best_value = -std::numeric_limits<double>::infinity();
  std::vector<std::string> failures;
  auto eval = [&](double x) {
    const double r = std::exp(x);
    double v = std::numeric_limits<double>::quiet_NaN();
    std::string err;
    try {
      v = objective(r);
      if (!std::isfinite(v)) err = "non-finite objective";
    } catch (const std::exception& e) {
      err = e.what();
    }
    res.trace.push_back({{r}, std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(), err});
    if (!err.empty()) {
      failures.push_back(err);
      return -std::numeric_limits<double>::infinity();
    }
    if (v > res.best_value) {
      res.best_value = v;
      res.best_R = r;
    }
    return v;
  };

  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(r_min), b = std::log(r_max);
  eval(a);
  eval(b);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int used = 4; used < budget; ++used) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = eval(d);
    }
  }
  if (!std::isfinite(res.best_value)) {
    std::string log;
    for (std::size_t i = 0; i < failures.size() && i < 10; ++i) log += "\n  " + failures[i];
    throw OptimizationError("all ratio evaluations failed:" + log);
  }
  return res;
}

RatioResult optimize_ratio(const ModelSetup& setup, const PulseSequence& base, double r_min,
                           double r_max, int budget) {
  const double total = base.total_energy_nj();
  if (!(total > 0.0)) throw ConfigError("ratio search needs a positive total control energy");
  return optimize_ratio(
      [&](double r) {
        const double e_in = total / (1.0 + r);
        return run_sequence(setup, base.with_energies(e_in, total - e_in)).eta_mem;
      },
      r_min, r_max, budget);
}

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("trace file: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<std::string>& names,
                     const std::vector<TraceEntry>& trace, const std::string& provenance) {
  if (!provenance.empty()) os << "# " << provenance << '\n';
  os << "eval";
  for (const auto& n : names) os << ',' << n;
  os << ",objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << i;
    for (double p : trace[i].params) os << ',' << number(p);
    os << ',' << number(trace[i].objective) << '\n';
  }
}

std::map<std::vector<double>, double> read_trace_csv(std::istream& is, std::size_t n_params) {
  std::map<std::vector<double>, double> cache;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != n_params + 2)
      throw ConfigError("trace file row has " + std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(n_params + 2));
    std::vector<double> p;
    for (std::size_t i = 1; i <= n_params; ++i) p.push_back(parse(cells[i]));
    cache.emplace(std::move(p), parse(cells.back()));
  }
  return cache;
}

}  // namespace orca
