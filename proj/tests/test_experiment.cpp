#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "orca/error.hpp"
#include "orca/experiment.hpp"

using namespace orca;

namespace {

ModelSetup coarse() {
  ModelSetup m;
  m.solver.n_z = 64;
  m.solver.n_t = 1024;
  m.solver.n_v = 17;
  return m;
}

PulseSequence reference_point() { return PulseSequence::standard(0.084, 0.57, 3.6, 660e-12); }

}  // namespace

TEST_CASE("pulse sequence bookkeeping") {
  const auto s = reference_point();
  CHECK(s.ratio_R() == doctest::Approx(3.6 / 0.57).epsilon(1e-12));
  CHECK(s.total_energy_nj() == doctest::Approx(4.17).epsilon(1e-12));
  CHECK(s.control_out.center_time() - s.control_in.center_time() ==
        doctest::Approx(660e-12).epsilon(1e-12));
  const auto t = s.with_storage_time(2e-9);
  CHECK(t.control_out.center_time() - t.control_in.center_time() ==
        doctest::Approx(2e-9).epsilon(1e-12));
  CHECK(t.ratio_R() == doctest::Approx(s.ratio_R()).epsilon(1e-12));
  CHECK(s.with_mu_in(0.5).signal.photon_number() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("hardware timing quantizes the storage time") {
  auto s = reference_point();
  s.hardware_timing = true;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  auto q = s.with_storage_time(12.5e-9);
  q.hardware_timing = true;
  CHECK_NOTHROW(q.validate());
}

TEST_CASE("energy split") {
  const auto rows = energy_sweep(coarse(), reference_point(), {0.5, 2.0, 4.17}, 6.4);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(std::abs(r.e_in_nj + r.e_out_nj - r.total_energy_nj) <= 1e-9 * r.total_energy_nj);
    CHECK(std::abs(r.e_out_nj / r.e_in_nj - 6.4) <= 1e-9 * 6.4);
  }
  CHECK_THROWS_AS(energy_sweep(coarse(), reference_point(), {1.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(energy_sweep(coarse(), reference_point(), {0.0}, 3.3), ConfigError);
}

TEST_CASE("vanishing control energy gives no memory") {
  const auto rows = energy_sweep(coarse(), reference_point(), {1e-6}, 6.4);
  CHECK(rows[0].eta_read_in < 1e-4);
  CHECK(rows[0].eta_mem < 1e-6);
}

TEST_CASE("sweeps are deterministic and independent of the job count") {
  const std::vector<double> e{1.0, 3.0, 5.0};
  const auto a = energy_sweep(coarse(), reference_point(), e, 3.3, 1);
  const auto b = energy_sweep(coarse(), reference_point(), e, 3.3, 1);
  const auto c = energy_sweep(coarse(), reference_point(), e, 3.3, 3);
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(a[i].eta_mem == b[i].eta_mem);
    CHECK(a[i].eta_mem == c[i].eta_mem);
    CHECK(a[i].eta_read_in == c[i].eta_read_in);
  }
}

TEST_CASE("lifetime fit on exact Gaussian data") {
  std::vector<double> t, eta;
  for (int i = 0; i <= 12; ++i) {
    const double x = 0.25e-9 * i;
    t.push_back(x);
    eta.push_back(0.8 * std::exp(-std::pow((x - 0.3e-9) / 1.2e-9, 2)));
  }
  const auto f = fit_lifetime(t, eta);
  CHECK(f.lifetime == doctest::Approx(1.2e-9).epsilon(1e-6));
  CHECK(f.offset == doctest::Approx(0.3e-9).epsilon(1e-5));
  CHECK(f.amplitude == doctest::Approx(0.8).epsilon(1e-6));
  CHECK_THROWS_AS(fit_lifetime({0.0, 1e-9}, {0.5, 0.4}), FitError);
}

TEST_CASE("storage sweep without Doppler dephasing") {
  ModelSetup m = coarse();
  m.solver.include_doppler = false;
  std::vector<double> times;
  for (int i = 0; i <= 6; ++i) times.push_back(0.5e-9 * i);
  const auto s = storage_time_sweep(m, reference_point(), times);
  REQUIRE(s.points.size() == times.size());
  const double last = s.points.back().eta_read_out;
  const double peak = std::max_element(s.points.begin(), s.points.end(), [](auto& a, auto& b) {
                        return a.eta_read_out < b.eta_read_out;
                      })->eta_read_out;
  CHECK(last > 0.95 * peak);
  if (s.fit) CHECK(s.fit->lifetime > 10e-9);
  else CHECK(!s.fit_error.empty());
}

TEST_CASE("a hyperfine beat shortens the lifetime") {
  ModelSetup plain = coarse();
  ModelSetup beat = plain;
  beat.scheme.pathways =
      HyperfinePathwaySet({{0.0, {0.5, 0.0}}, {constants::two_pi * 100e6, {0.5, 0.0}}});
  std::vector<double> times;
  for (int i = 0; i <= 12; ++i) times.push_back(0.25e-9 * i);
  const auto a = storage_time_sweep(plain, reference_point(), times);
  const auto b = storage_time_sweep(beat, reference_point(), times);
  REQUIRE(a.fit);
  REQUIRE(b.fit);
  CHECK(b.fit->lifetime < a.fit->lifetime);
}

TEST_CASE("sweep errors are tagged per point") {
  ModelSetup m = coarse();
  m.solver.time_span = 6e-9;
  const auto s = storage_time_sweep(m, reference_point(), {0.5e-9, 20e-9});
  REQUIRE(s.points.size() == 2);
  CHECK_MESSAGE(s.points[0].error.empty(), s.points[0].error);
  CHECK(s.points[1].error.find("T=") != std::string::npos);
  CHECK_THROWS_AS(storage_time_sweep(m, reference_point(), {}), ConfigError);
  CHECK_THROWS_AS(storage_time_sweep(m, reference_point(), {-1e-9}), ConfigError);
}

TEST_CASE("noise model") {
  NoiseModel n;
  CHECK(n.per_window(0.57 + 3.6) == doctest::Approx(9e-7).epsilon(1e-12));
  CHECK(n.per_window(0.0) == n.n0);
  CHECK(n.per_window(4.0) - n.per_window(2.0) == doctest::Approx(n.n1 * 2.0).epsilon(1e-12));
  for (double a : {0.0, 0.3, 1.7})
    for (double b : {0.1, 2.5})
      CHECK(std::abs(n.per_window(a) + n.per_window(b) - n.n0 - n.per_window(a + b)) < 1e-12);
  const auto c = noise_counts(n, 4.17, 1200000000ULL);
  CHECK(c.total == doctest::Approx(9e-7 * 1.2e9).epsilon(1e-12));
  CHECK_THROWS_AS(noise_counts(n, 4.17, 0), DomainError);
  NoiseModel bad;
  bad.n1 = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("photon-number series") {
  const auto rows = photon_number_series(0.209, 9e-7, {1e-5, 1e-3, 1e-1});
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.input == r.mu_in);
    CHECK(r.memory == doctest::Approx(0.209 * r.mu_in).epsilon(1e-15));
    CHECK(r.noise == 9e-7);
  }
  CHECK_THROWS_AS(photon_number_series(1.5, 9e-7, {0.1}), DomainError);
}

TEST_CASE("parallel map keeps order and rethrows") {
  const auto out = parallel_map(50, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK_THROWS_AS(parallel_map(5, 2,
                               [](std::size_t i) -> int {
                                 if (i == 3) throw std::runtime_error("boom");
                                 return 0;
                               }),
                  std::runtime_error);
}
