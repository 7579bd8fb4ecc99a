#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string coarse_grid = "[solver]\nn_z = 64\nn_t = 1024\nn_v = 17\n";

struct Outcome {
  int code;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "orca_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.toml";
  std::ofstream(p) << text;
  return p;
}

Outcome orca(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + ORCA_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(out), slurp(err)};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string c; std::getline(in, c, ',');) v.push_back(c);
  return v;
}

}  // namespace

TEST_CASE("simulate is deterministic and stamps provenance") {
  const auto dir = scratch("simulate");
  const auto cfg = write_config(dir, coarse_grid + "[detection]\nacquisition_time = 5\n");
  const auto a = orca(dir, "simulate --config " + cfg.string() + " --seed 11 --out " + (dir / "a").string());
  REQUIRE(a.code == 0);
  const std::vector<std::string> files{"envelopes.csv", "histogram_input.csv", "histogram_memory.csv",
                                       "histogram_noise.csv", "figures.json", "config.toml"};
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(dir / "a" / f));
  REQUIRE(orca(dir, "simulate --config " + cfg.string() + " --seed 11 --out " + (dir / "a").string()).code == 0);
  const auto b = orca(dir, "simulate --config " + cfg.string() + " --seed 11 --jobs 2 --out " +
                               (dir / "b").string());
  REQUIRE(b.code == 0);
  const json fig = json::parse(slurp(dir / "a" / "figures.json"));
  const std::string stamp = "# orca version=0.1.0 config_hash=" + fig["config_hash"].get<std::string>() +
                            " seed=11";
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& f = files[i];
    CAPTURE(f);
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == first[i]);
    if (f != "config.toml") CHECK(slurp(dir / "b" / f) == first[i]);
    if (f != "figures.json") CHECK(lines(first[i]).front() == stamp);
  }
  CHECK(fig["version"] == "0.1.0");
  CHECK(fig["seed"] == 11);
  CHECK(json::parse(a.out) == fig);

  const auto c = orca(dir, "simulate --config " + cfg.string() + " --seed 12 --out " + (dir / "c").string());
  REQUIRE(c.code == 0);
  CHECK(slurp(dir / "a" / "histogram_memory.csv") != slurp(dir / "c" / "histogram_memory.csv"));
}

TEST_CASE("analyze reproduces the simulate figures") {
  const auto dir = scratch("analyze");
  const auto cfg = write_config(dir, coarse_grid + "[detection]\nacquisition_time = 5\n");
  REQUIRE(orca(dir, "simulate --config " + cfg.string() + " --seed 5 --out " + dir.string()).code == 0);
  const json sim = json::parse(slurp(dir / "figures.json"));
  const std::string in = (dir / "histogram_input.csv").string();
  const std::string mem = (dir / "histogram_memory.csv").string();
  const std::string noise = (dir / "histogram_noise.csv").string();

  const auto r = orca(dir, "analyze --config " + cfg.string() + " --input " + in + " --memory " + mem +
                               " --noise " + noise);
  REQUIRE(r.code == 0);
  const json an = json::parse(r.out);
  for (const char* k : {"mu_in", "eta_read_in", "eta_read_out", "eta_mem", "noise"}) {
    CAPTURE(k);
    const double err = an[std::string(k) + "_err"].get<double>();
    CHECK(std::abs(an[k].get<double>() - sim[k].get<double>()) <= 3.0 * err + 1e-15);
  }

  const auto same = orca(dir, "analyze --config " + cfg.string() + " --input " + in + " --memory " +
                                  in + " --noise " + noise);
  REQUIRE(same.code == 0);
  CHECK(std::abs(json::parse(same.out)["eta_read_in"].get<double>()) < 1e-12);
}

TEST_CASE("analyze rejects mismatched binning naming both files") {
  const auto dir = scratch("mismatch");
  const auto fine = write_config(dir, coarse_grid + "[detection]\nacquisition_time = 1\n");
  REQUIRE(orca(dir, "simulate --config " + fine.string() + " --out " + (dir / "fine").string()).code == 0);
  const fs::path wide_cfg = dir / "wide.toml";
  std::ofstream(wide_cfg) << coarse_grid << "[detection]\nacquisition_time = 1\nbin_width = 2e-12\n";
  REQUIRE(orca(dir, "simulate --config " + wide_cfg.string() + " --out " + (dir / "wide").string()).code == 0);

  const std::string in = (dir / "fine" / "histogram_input.csv").string();
  const std::string mem = (dir / "wide" / "histogram_memory.csv").string();
  const auto r = orca(dir, "analyze --input " + in + " --memory " + mem + " --noise " +
                               (dir / "fine" / "histogram_noise.csv").string());
  CHECK(r.code == 3);
  const json e = json::parse(r.err);
  CHECK(e["error"] == "analysis");
  CHECK(e["exit_code"] == 3);
  const std::string msg = e["message"];
  CHECK(msg.find(in) != std::string::npos);
  CHECK(msg.find(mem) != std::string::npos);

  std::ofstream(dir / "broken.csv") << "# orca\nnot,a,histogram\n";
  const auto b = orca(dir, "analyze --input " + (dir / "broken.csv").string() + " --memory " + mem +
                               " --noise " + mem);
  CHECK(b.code == 3);
}

TEST_CASE("exit-code contract") {
  const auto dir = scratch("exit");
  const auto bad = write_config(dir, "[solver]\nnz = 64\n");
  const auto r = orca(dir, "simulate --config " + bad.string() + " --out " + dir.string());
  CHECK(r.code == 1);
  const json e = json::parse(r.err);
  CHECK(e["error"] == "config");
  CHECK(e["message"].get<std::string>().find("solver.nz") != std::string::npos);

  CHECK(orca(dir, "simulate --jobs 0").code == 1);
  CHECK(orca(dir, "simulate --no-such-flag").code == 1);
  CHECK(orca(dir, "").code == 1);
  CHECK(orca(dir, "analyze --input x.csv").code == 1);

  const fs::path cal = dir / "cal.toml";
  std::ofstream(cal) << coarse_grid << "[calibration]\nenabled = true\ntarget_read_in = 0.999999\n";
  const auto c = orca(dir, "simulate --config " + cal.string() + " --out " + dir.string());
  CHECK(c.code == 2);
  CHECK(json::parse(c.err)["exit_code"] == 2);
}

TEST_CASE("zero control energy stores nothing") {
  const auto dir = scratch("dark");
  const auto cfg = write_config(dir, coarse_grid + "[sequence]\ne_in_nj = 0\ne_out_nj = 0\n"
                                                   "[detection]\nacquisition_time = 1\n");
  const auto r = orca(dir, "simulate --config " + cfg.string() + " --out " + dir.string());
  REQUIRE(r.code == 0);
  const json f = json::parse(r.out);
  CHECK(f["model_eta_mem"].get<double>() == 0.0);
  CHECK(f["model_snr"].get<double>() == 0.0);
  CHECK(f["model_mu1"].is_null());
  CHECK(std::abs(f["model_eta_read_in"].get<double>()) < 1e-9);
}

TEST_CASE("sweeps") {
  const auto dir = scratch("sweep");
  SUBCASE("empty grid gives a header-only table") {
    const auto cfg = write_config(dir, coarse_grid + "[sweep]\naxis = \"energy\"\nvalues = []\n");
    const auto r = orca(dir, "sweep --config " + cfg.string() + " --out " + dir.string());
    CHECK(r.code == 0);
    const auto l = lines(slurp(dir / "sweep.csv"));
    REQUIRE(l.size() == 2);
    CHECK(l[0].rfind("# orca version=", 0) == 0);
    CHECK(l[1].rfind("total_energy_nj,", 0) == 0);
  }
  SUBCASE("missing axis is a config error") {
    const auto cfg = write_config(dir, coarse_grid);
    CHECK(orca(dir, "sweep --config " + cfg.string() + " --out " + dir.string()).code == 1);
  }
  SUBCASE("storage time with lifetime fit column") {
    const auto cfg = write_config(dir, coarse_grid + "[sweep]\naxis = \"storage_time\"\n"
                                                     "values = [0, 0.5e-9, 1e-9, 1.5e-9, 2e-9, 2.5e-9, 3e-9]\n");
    REQUIRE(orca(dir, "sweep --config " + cfg.string() + " --jobs 2 --out " + dir.string()).code == 0);
    const auto l = lines(slurp(dir / "sweep.csv"));
    REQUIRE(l.size() == 9);
    const auto head = split(l[1]);
    CHECK(head[4] == "fit_lifetime_s");
    const double tau = std::stod(split(l[2])[4]);
    CHECK(tau > 0.8e-9);
    CHECK(tau < 2.0e-9);
  }
  SUBCASE("photon-number series") {
    const auto cfg = write_config(dir, coarse_grid + "[sweep]\naxis = \"mu_in\"\n"
                                                     "values = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1]\n");
    REQUIRE(orca(dir, "sweep --config " + cfg.string() + " --out " + dir.string()).code == 0);
    const auto l = lines(slurp(dir / "sweep.csv"));
    REQUIRE(l.size() == 7);
    const auto eta_at = l[0].find("eta_mem=");
    REQUIRE(eta_at != std::string::npos);
    const double eta = std::stod(l[0].substr(eta_at + 8));
    CHECK(eta > 0.0);
    for (std::size_t i = 2; i < l.size(); ++i) {
      const auto c = split(l[i]);
      const double mu = std::stod(c[0]);
      CHECK(std::stod(c[1]) == mu);
      CHECK(std::stod(c[2]) == doctest::Approx(eta * mu).epsilon(1e-12));
      CHECK(std::stod(c[3]) == doctest::Approx(9e-7).epsilon(1e-9));
    }
  }
}

TEST_CASE("optimize writes results and resumes from its trace") {
  const auto dir = scratch("optimize");
  const auto cfg = write_config(dir, coarse_grid + "[optimizer]\nbasis = \"gaussian\"\nbudget = 30\n"
                                                   "max_restarts = 0\n");
  const auto a = orca(dir, "optimize --config " + cfg.string() + " --out " + (dir / "a").string());
  REQUIRE(a.code == 0);
  const json ja = json::parse(slurp(dir / "a" / "best_params.json"));
  CHECK(ja["best_value"].get<double>() >= ja["initial_value"].get<double>());
  CHECK(ja["energy_budget_nj"].get<double>() == doctest::Approx(0.57));
  CHECK(lines(slurp(dir / "a" / "trace.csv")).front().rfind("# orca version=", 0) == 0);

  const auto b = orca(dir, "optimize --config " + cfg.string() + " --out " + (dir / "b").string() +
                               " --resume " + (dir / "a" / "trace.csv").string());
  REQUIRE(b.code == 0);
  const json jb = json::parse(b.out);
  CHECK(jb["resumed_evaluations"] == jb["evaluations"]);
  CHECK(jb["best_value"] == ja["best_value"]);
  CHECK(jb["params"] == ja["params"]);

  const fs::path ratio = dir / "ratio.toml";
  std::ofstream(ratio) << coarse_grid << "[optimizer]\nmode = \"ratio\"\nbudget = 8\n";
  const auto r = orca(dir, "optimize --config " + ratio.string() + " --out " + (dir / "r").string());
  REQUIRE(r.code == 0);
  const json jr = json::parse(r.out);
  CHECK(jr["best_R"].get<double>() >= 1.0);
  CHECK(jr["best_R"].get<double>() <= 20.0);
}

TEST_CASE("default simulate lands near the reference figures") {
  const auto dir = scratch("default");
  const auto r = orca(dir, "simulate --out " + dir.string());
  REQUIRE(r.code == 0);
  const json f = json::parse(r.out);
  CHECK(std::abs(f["eta_mem"].get<double>() - 0.209) <= 0.05);
  const double s = f["snr"].get<double>();
  CHECK(s >= 1.9e4 / 2.0);
  CHECK(s <= 1.9e4 * 2.0);
}
