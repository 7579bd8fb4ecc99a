#include "orca/detection.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "orca/error.hpp"

namespace orca {

void DetectionChain::validate() const {
  if (!(eta_det >= 0.0 && eta_det <= 1.0)) throw ConfigError("detection.eta_det must lie in [0, 1]");
  if (!(eta_trans >= 0.0 && eta_trans <= 1.0))
    throw ConfigError("detection.eta_trans must lie in [0, 1]");
  if (!(eta_det_sigma >= 0.0) || !(eta_trans_sigma >= 0.0))
    throw ConfigError("detection uncertainties must be >= 0");
  if (!(timing_jitter_sigma >= 0.0)) throw ConfigError("detection.timing_jitter_sigma must be >= 0");
  const double ps = bin_width * 1e12;
  if (!(ps >= 1.0 - 1e-9) || std::abs(ps - std::round(ps)) > 1e-9)
    throw ConfigError("detection.bin_width must be a whole number of picoseconds");
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

bool Histogram::same_binning(const Histogram& o) const {
  return start_ps == o.start_ps && bin_width_ps == o.bin_width_ps && counts.size() == o.counts.size();
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw AnalysisError(std::string("histogram file: bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace

void Histogram::write_csv(std::ostream& os, const std::string& provenance) const {
  if (!provenance.empty()) os << "# " << provenance << '\n';
  os << "# trials," << trials << '\n';
  os << "# seed," << seed << '\n';
  os << "# bin_width_ps," << bin_width_ps << '\n';
  os << "# acquisition_time_s," << format_double(acquisition_time) << '\n';
  os << "bin_start_ps,counts\n";
  for (std::size_t i = 0; i < counts.size(); ++i)
    os << start_ps + static_cast<std::int64_t>(i) * bin_width_ps << ',' << counts[i] << '\n';
}

Histogram Histogram::read_csv(std::istream& is) {
  Histogram h;
  bool have_width = false;
  bool header = false;
  std::string line;
  std::int64_t expected_next = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      std::string key = line.substr(1, comma - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(comma + 1);
      if (key == "trials") h.trials = parse_number<std::uint64_t>(value, "trials");
      else if (key == "seed") h.seed = parse_number<std::uint64_t>(value, "seed");
      else if (key == "bin_width_ps") {
        h.bin_width_ps = parse_number<std::int64_t>(value, "bin width");
        have_width = true;
      } else if (key == "acquisition_time_s")
        h.acquisition_time = parse_number<double>(value, "acquisition time");
      continue;
    }
    if (!header) {
      if (line != "bin_start_ps,counts")
        throw AnalysisError("histogram file: expected header 'bin_start_ps,counts'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw AnalysisError("histogram file: malformed row '" + line + "'");
    const auto start = parse_number<std::int64_t>(line.substr(0, comma), "bin start");
    const auto count = parse_number<std::uint64_t>(line.substr(comma + 1), "count");
    if (h.counts.empty()) {
      h.start_ps = start;
    } else if (start != expected_next) {
      throw AnalysisError("histogram file: bins are not contiguous at " + std::to_string(start));
    }
    h.counts.push_back(count);
    expected_next = start + h.bin_width_ps;
  }
  if (!header || !have_width) throw AnalysisError("histogram file: missing header or bin width");
  if (h.bin_width_ps <= 0) throw AnalysisError("histogram file: bin width must be positive");
  return h;
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

double bin_photons(const SignalEnvelope& env, double a, double b) {
  if (env.photon_number() == 0.0) return 0.0;
  if (!env.is_tabulated()) {
    const double s = env.fwhm() / fwhm_per_sigma * std::sqrt(2.0);
    const double c = env.center_time();
    return 0.5 * env.photon_number() * (std::erf((b - c) / s) - std::erf((a - c) / s));
  }
  constexpr int sub = 8;
  const double h = (b - a) / sub;
  double sum = 0.0;
  for (int k = 0; k < sub; ++k) sum += env.flux(a + (k + 0.5) * h);
  return sum * h;
}

void apply_jitter(std::vector<double>& mu, double sigma_bins) {
  if (!(sigma_bins > 0.0)) return;
  const int radius = static_cast<int>(std::ceil(5.0 * sigma_bins));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma_bins * sigma_bins));
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& k : kernel) k /= norm;
  std::vector<double> out(mu.size(), 0.0);
  const auto n = static_cast<int>(mu.size());
  for (int i = 0; i < n; ++i) {
    if (mu[i] == 0.0) continue;
    for (int k = -radius; k <= radius; ++k) {
      const int j = i + k;
      if (j >= 0 && j < n) out[j] += mu[i] * kernel[k + radius];
    }
  }
  mu = std::move(out);
}

}  // namespace

std::vector<double> expected_counts(const SignalEnvelope& envelope, const DetectionChain& chain,
                                    double noise_per_window, std::uint64_t trials,
                                    std::int64_t start_ps, std::size_t bins,
                                    const SynthesisOptions& opt) {
  chain.validate();
  if (!(noise_per_window >= 0.0)) throw DomainError("noise must be >= 0");
  const auto w_ps = static_cast<std::int64_t>(std::llround(chain.bin_width * 1e12));
  const double w = static_cast<double>(w_ps) * 1e-12;
  const double scale = static_cast<double>(trials) * chain.efficiency();
  const double noise_bin = noise_per_window * w / opt.noise_window;
  std::vector<double> mu(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double a = static_cast<double>(start_ps + static_cast<std::int64_t>(i) * w_ps) * 1e-12;
    mu[i] = scale * (bin_photons(envelope, a, a + w) + noise_bin);
    if (!std::isfinite(mu[i]))
      throw NumericalError("non-finite expected count in bin " + std::to_string(i));
  }
  apply_jitter(mu, chain.timing_jitter_sigma / w);
  return mu;
}

Histogram synthesize_histogram(const SignalEnvelope& envelope, const DetectionChain& chain,
                               double noise_per_window, double acquisition_time,
                               std::uint64_t seed, const SynthesisOptions& opt) {
  if (!(acquisition_time > 0.0)) throw DomainError("acquisition time must be positive");
  if (!(opt.signal_rate > 0.0)) throw DomainError("signal repetition rate must be positive");
  if (!(opt.noise_window > 0.0)) throw DomainError("noise window must be positive");
  chain.validate();
  double begin = opt.span_begin;
  double end = opt.span_end;
  if (!(end > begin)) {
    if (envelope.is_tabulated()) {
      begin = envelope.grid().t0;
      end = envelope.grid().end();
    } else {
      begin = envelope.center_time() - 5.0 * envelope.fwhm();
      end = envelope.center_time() + 5.0 * envelope.fwhm();
    }
  }
  Histogram h;
  h.bin_width_ps = std::llround(chain.bin_width * 1e12);
  // Snap to 1e-6 ps first so that e.g. -1500e-12 s lands on -1500 ps.
  auto ps = [](double t) { return std::round(t * 1e12 * 1e6) / 1e6; };
  const auto bw = static_cast<double>(h.bin_width_ps);
  h.start_ps = static_cast<std::int64_t>(std::floor(ps(begin) / bw)) * h.bin_width_ps;
  const auto stop_ps = static_cast<std::int64_t>(std::ceil(ps(end) / bw)) * h.bin_width_ps;
  const auto bins = static_cast<std::size_t>((stop_ps - h.start_ps) / h.bin_width_ps);
  h.acquisition_time = acquisition_time;
  h.trials = static_cast<std::uint64_t>(std::floor(acquisition_time * opt.signal_rate));
  h.seed = seed;

  const auto mu = expected_counts(envelope, chain, noise_per_window, h.trials, h.start_ps, bins, opt);
  std::mt19937_64 rng(split_seed(seed, 0));
  h.counts.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    if (mu[i] <= 0.0) continue;
    std::poisson_distribution<std::uint64_t> draw(mu[i]);
    h.counts[i] = draw(rng);
  }
  return h;
}

namespace {

struct Model {
  // p = (A, x0, s, b) in normalized units.
  static double value(const Eigen::Vector4d& p, double x) {
    const double u = (x - p[1]) / p[2];
    return p[0] * std::exp(-0.5 * u * u) + p[3];
  }
  static Eigen::Vector4d gradient(const Eigen::Vector4d& p, double x) {
    const double u = (x - p[1]) / p[2];
    const double g = std::exp(-0.5 * u * u);
    return {g, p[0] * g * u / p[2], p[0] * g * u * u / p[2], 1.0};
  }
};

std::string describe(const Eigen::Vector4d& p) {
  std::ostringstream os;
  os << "A=" << p[0] << " t0=" << p[1] << " sigma=" << p[2] << " b=" << p[3];
  return os.str();
}

}  // namespace

GaussianFit fit_gaussian_points(const std::vector<double>& x, const std::vector<double>& y,
                                const std::vector<double>& weight, const PointFitOptions& opt,
                                const GaussianFit* guess) {
  const std::size_t n = x.size();
  if (y.size() != n || weight.size() != n) throw FitError("fit inputs differ in length");
  std::array<bool, 4> free{true, !opt.fix_center, true, !opt.fix_baseline};
  const int n_free = static_cast<int>(std::count(free.begin(), free.end(), true));
  if (static_cast<int>(n) <= n_free) throw FitError("too few points for a Gaussian fit");

  // Normalize to O(1) units.
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double xs = *xmax_it > *xmin_it ? *xmax_it - *xmin_it : 1.0;
  const double xm = opt.fix_center ? opt.center : 0.5 * (*xmax_it + *xmin_it);
  double ys = 0.0;
  for (double v : y) ys = std::max(ys, std::abs(v));
  if (ys == 0.0) throw FitError("degenerate fit window: all values are zero");
  std::vector<double> xn(n), yn(n), wn(n);
  for (std::size_t i = 0; i < n; ++i) {
    xn[i] = (x[i] - xm) / xs;
    yn[i] = y[i] / ys;
    wn[i] = weight[i] * ys * ys;
  }

  Eigen::Vector4d p;
  if (guess) {
    p = {guess->amplitude / ys, (guess->center - xm) / xs, guess->sigma / xs, guess->baseline / ys};
  } else {
    double b = opt.baseline / ys;
    if (!opt.fix_baseline) {
      std::vector<double> sorted = yn;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t k = std::max<std::size_t>(1, n / 10);
      b = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
          static_cast<double>(k);
    }
    const double peak = *std::max_element(yn.begin(), yn.end());
    const double a = peak - b;
    if (!(a > 1e-12)) throw FitError("degenerate fit window: no peak above the baseline");
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::max(yn[i] - b, 0.0);
      m0 += v;
      m1 += v * xn[i];
    }
    const double c = opt.fix_center ? 0.0 : m1 / m0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::max(yn[i] - b, 0.0);
      m2 += v * (xn[i] - c) * (xn[i] - c);
    }
    const double s = std::sqrt(m2 / m0);
    p = {a, c, s > 0.0 ? s : 0.1, b};
  }
  if (opt.fix_center) p[1] = 0.0;
  if (opt.fix_baseline) p[3] = opt.baseline / ys;

  auto chi2 = [&](const Eigen::Vector4d& q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = yn[i] - Model::value(q, xn[i]);
      sum += wn[i] * r * r;
    }
    return sum;
  };
  auto normal = [&](const Eigen::Vector4d& q, Eigen::Matrix4d& jtj, Eigen::Vector4d& jtr) {
    jtj.setZero();
    jtr.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Vector4d g = Model::gradient(q, xn[i]);
      for (int k = 0; k < 4; ++k)
        if (!free[k]) g[k] = 0.0;
      const double r = yn[i] - Model::value(q, xn[i]);
      jtj.noalias() += wn[i] * g * g.transpose();
      jtr.noalias() += wn[i] * r * g;
    }
    for (int k = 0; k < 4; ++k)
      if (!free[k]) jtj(k, k) = 1.0;
  };

  double lambda = 1e-3;
  double current = chi2(p);
  bool converged = false;
  int it = 0;
  Eigen::Matrix4d jtj;
  Eigen::Vector4d jtr;
  for (; it < opt.max_iterations && !converged; ++it) {
    normal(p, jtj, jtr);
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Eigen::Matrix4d a = jtj;
      for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-30);
      const Eigen::Vector4d step = a.ldlt().solve(jtr);
      const Eigen::Vector4d trial = p + step;
      if (!(trial[2] > 0.0) || !trial.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const double value = chi2(trial);
      if (value <= current) {
        const double scale[4] = {std::abs(p[0]), std::abs(p[2]), std::abs(p[2]),
                                 std::max(std::abs(p[0]), 1e-300)};
        double rel = 0.0;
        for (int k = 0; k < 4; ++k)
          if (free[k]) rel = std::max(rel, std::abs(step[k]) / std::max(scale[k], 1e-300));
        p = trial;
        current = value;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        converged = rel < opt.step_tolerance;
      } else {
        lambda *= 10.0;
      }
    }
    // No downhill step at any damping: p is a minimum to machine precision.
    if (!accepted) converged = true;
  }
  if (!converged)
    throw FitError("Gaussian fit did not converge after " + std::to_string(it) +
                   " iterations; last iterate " + describe(p));

  normal(p, jtj, jtr);
  Eigen::Matrix4d cov = jtj.inverse();
  for (int k = 0; k < 4; ++k)
    if (!free[k]) {
      cov.row(k).setZero();
      cov.col(k).setZero();
    }

  GaussianFit f;
  f.iterations = it;
  const int dof = static_cast<int>(n) - n_free;
  f.chi2_dof = current / dof;
  const Eigen::Vector4d d{ys, xs, xs, ys};
  f.amplitude = p[0] * ys;
  f.center = xm + p[1] * xs;
  f.sigma = p[2] * xs;
  f.baseline = p[3] * ys;
  f.covariance = d.asDiagonal() * cov * d.asDiagonal();
  if (!f.covariance.allFinite()) throw FitError("singular fit covariance; last iterate " + describe(p));
  if (!(f.amplitude > 0.0)) throw FitError("fit collapsed to a non-positive amplitude");
  return f;
}

GaussianFit fit_gaussian(const Histogram& h, double t0, double t1) {
  std::vector<double> x, y, w;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double c = h.bin_center(i);
    if (c < t0 || c >= t1) continue;
    const auto v = static_cast<double>(h.counts[i]);
    x.push_back(c);
    y.push_back(v);
    w.push_back(1.0 / std::max(v, 1.0));
    if (h.counts[i] > 0) ++nonzero;
  }
  if (nonzero == 0) throw FitError("degenerate fit window: all counts are zero");
  if (x.size() < 20 || nonzero < 20) throw FitError("fit window needs >= 20 bins with counts");
  return fit_gaussian_points(x, y, w);
}

std::uint64_t window_integrate(const Histogram& h, double center, double width) {
  if (!(width > 0.0)) throw RangeError("window width must be positive");
  auto ps = [](double t) { return std::round(t * 1e12 * 1e6) / 1e6; };
  const double lo = ps(center - 0.5 * width);
  const double hi = ps(center + 0.5 * width);
  const double begin = static_cast<double>(h.start_ps);
  const double end = static_cast<double>(h.start_ps + static_cast<std::int64_t>(h.bins()) * h.bin_width_ps);
  if (lo < begin || hi > end) {
    std::ostringstream os;
    os << "window [" << lo << ", " << hi << ") ps lies outside the histogram span [" << begin
       << ", " << end << ") ps";
    throw RangeError(os.str());
  }
  const double bw = static_cast<double>(h.bin_width_ps);
  const auto first = static_cast<std::size_t>(std::ceil((lo - begin) / bw));
  const auto last = std::min(h.bins(), static_cast<std::size_t>(std::ceil((hi - begin) / bw)));
  std::uint64_t sum = 0;
  for (std::size_t i = first; i < last; ++i) sum += h.counts[i];
  return sum;
}

ExtractedEfficiencies extract_efficiencies(const Histogram& input_h, const Histogram& memory_h,
                                           const Histogram& noise_h, const DetectionChain& chain,
                                           const AnalysisWindows& win) {
  chain.validate();
  if (!input_h.same_binning(memory_h) || !input_h.same_binning(noise_h))
    throw AnalysisError("histograms have different binning");
  if (input_h.trials != memory_h.trials || input_h.trials != noise_h.trials)
    throw AnalysisError("histograms have different trial counts");
  if (input_h.trials == 0) throw AnalysisError("histograms record zero trials");

  const auto ref = static_cast<double>(window_integrate(input_h, win.read_in_center, win.width));
  const auto kept = static_cast<double>(window_integrate(memory_h, win.read_in_center, win.width));
  const auto out = static_cast<double>(window_integrate(memory_h, win.read_out_center, win.width));
  const auto noise = static_cast<double>(window_integrate(noise_h, win.read_out_center, win.width));
  if (ref == 0.0) throw AnalysisError("reference histogram has zero counts in the read-in window");

  const double norm = chain.efficiency() * static_cast<double>(input_h.trials);
  if (!(norm > 0.0)) throw AnalysisError("detection chain efficiency is zero");
  ExtractedEfficiencies e;
  e.mu_in = {ref / norm, std::sqrt(ref) / norm};
  e.noise = {noise / norm, std::sqrt(noise) / norm};

  const double kept_ratio = kept / ref;
  e.eta_read_in.value = 1.0 - kept_ratio;
  e.eta_read_in.sigma = kept > 0.0 ? kept_ratio * std::sqrt(1.0 / kept + 1.0 / ref) : 1.0 / ref;

  const double signal = out - noise;
  e.eta_mem.value = signal / ref;
  e.eta_mem.sigma = std::sqrt((out + noise) / (ref * ref) + e.eta_mem.value * e.eta_mem.value / ref);

  const double absorbed = ref - kept;
  if (absorbed > 0.0) {
    e.eta_read_out.value = signal / absorbed;
    e.eta_read_out.sigma =
        std::sqrt((out + noise) + e.eta_read_out.value * e.eta_read_out.value * (ref + kept)) /
        absorbed;
  } else {
    e.eta_read_out = {0.0, 0.0};
    e.inconsistent = true;
    e.note = "no absorption in the read-in window";
  }

  for (const auto& [name, m] : {std::pair{"eta_read_in", e.eta_read_in},
                                std::pair{"eta_read_out", e.eta_read_out},
                                std::pair{"eta_mem", e.eta_mem}}) {
    if (m.value < 0.0 || m.value > 1.0 + 3.0 * m.sigma) {
      e.inconsistent = true;
      if (!e.note.empty()) e.note += "; ";
      e.note += std::string(name) + " outside [0, 1 + 3 sigma]";
    }
  }
  return e;
}

}  // namespace orca
