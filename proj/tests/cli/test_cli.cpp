#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = MATEOPTIX_CLI;
const fs::path kFixtures = MATEOPTIX_FIXTURES;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mateoptix_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fixture(const std::string& name) { return (kFixtures / name).string(); }

struct Outcome {
  int code = -1;
  std::string err;
};

// Runs the tool with `args`, capturing stderr.
Outcome run(const std::string& args, const std::string& env = "") {
  const fs::path err = fs::temp_directory_path() / "mateoptix_cli_tests" / "stderr.txt";
  fs::create_directories(err.parent_path());
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " 2>'" +
                          err.string() + "' >/dev/null";
  const int status = std::system(cmd.c_str());
  Outcome r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  r.err.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

double param(const json& fit, const std::string& name, const char* field = "value") {
  for (const auto& p : fit["parameters"]) {
    if (p["name"] == name) return p[field].get<double>();
  }
  ADD_FAILURE() << "no parameter " << name;
  return NAN;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Usage, BadInvocationsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("fit nonsense --config " + fixture("loss.toml")).code, 2);
  EXPECT_EQ(run("tilt --threads 0 --config " + fixture("tilt.toml")).code, 2);
  EXPECT_EQ(run("tilt --config /nonexistent/run.toml").code, 2);
  const Outcome r = run("spectrum --threads many");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[usage]", 0), 0u) << r.err;
}

TEST(Config, SchemaErrorsExitTwoWithOneLine) {
  const fs::path dir = scratch("schema");
  write(dir / "typo.toml",
        "[membrane]\nd = 88e-9\n[tilt]\nmode_l = 24\nlambda_min = 1.5e-6\n"
        "lambda_max = 1.6e-6\nthetta = 1e-4\n");
  Outcome r = run("tilt --config " + (dir / "typo.toml").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("thetta"), std::string::npos) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;

  write(dir / "missing.toml", "[membrane]\nmodel = \"slab\"\n");
  r = run("tilt --config " + (dir / "missing.toml").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("membrane.d"), std::string::npos) << r.err;

  r = run("tilt --config " + fixture("tilt.toml") + " --set membrane.d=abc --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  r = run("tilt --config " + fixture("tilt.toml") + " --set bogus --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  r = run("spectrum --config " + fixture("spectrum.toml") +
          " --set membrane.model=\"foam\" --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("foam"), std::string::npos) << r.err;
}

TEST(Config, PhysicalValidationExitsTwo) {
  const fs::path dir = scratch("physical");
  EXPECT_EQ(run("resonances --config " + fixture("resonances.toml") +
                " --set mirror1.t_sq=1.5 --out " + dir.string())
                .code,
            2);
  EXPECT_EQ(run("resonances --config " + fixture("resonances.toml") +
                " --set cavity.length=-0.1 --out " + dir.string())
                .code,
            2);
}

TEST(Csv, SchemaErrorsExitTwo) {
  const fs::path dir = scratch("csv");
  write(dir / "short.csv", "x_m,kappa_rad_s,r_res\n1e-5,1e6,0.5\n");
  Outcome r = run("fit loss --config " + fixture("loss.toml") + " --input " +
                  (dir / "short.csv").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sigma_kappa"), std::string::npos) << r.err;
  write(dir / "bad.csv",
        "x_m,kappa_rad_s,r_res,sigma_kappa,sigma_r\n1e-5,1e6,0.5,1e4,0.01\n2e-5,oops,0.5,1e4,0.01\n");
  r = run("fit loss --config " + fixture("loss.toml") + " --input " + (dir / "bad.csv").string() +
          " --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.csv:3"), std::string::npos) << r.err;
}

TEST(Fit, NonConvergenceExitsThree) {
  const fs::path dir = scratch("noconv");
  const Outcome r = run("fit loss --config " + fixture("loss.toml") +
                        " --set fit.max_iterations=1 --out " + dir.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error[fit-nonconvergence]"), std::string::npos) << r.err;
  // The partial result is still written for inspection.
  EXPECT_FALSE(load_json(dir / "fit.json")["converged"].get<bool>());
}

TEST(Fit, LossFixtureRecoversGeneratingModel) {
  const fs::path dir = scratch("loss");
  ASSERT_EQ(run("fit loss --config " + fixture("loss.toml") + " --out " + dir.string()).code, 0);
  const json f = load_json(dir / "fit.json");
  EXPECT_TRUE(f["converged"].get<bool>());
  const std::pair<const char*, double> truth[] = {
      {"eps", 0.75}, {"t1_sq", 7.5e-3}, {"S1", 8e-4}, {"t2_sq", 6e-4}};
  for (const auto& [name, v] : truth) {
    EXPECT_NEAR(param(f, name), v, 3 * param(f, name, "uncertainty")) << name;
  }
  EXPECT_NEAR(f["finesse_bound"].get<double>(), 2 * M_PI / param(f, "S1"), 1e-6);
  EXPECT_TRUE(fs::exists(dir / "residuals.csv"));
}

TEST(Fit, TransmissionFixtureFindsOrder24) {
  const fs::path dir = scratch("transmission");
  ASSERT_EQ(
      run("fit transmission --config " + fixture("transmission.toml") + " --out " + dir.string())
          .code,
      0);
  const json f = load_json(dir / "fit.json");
  EXPECT_EQ(f["l0"].get<int>(), 24);
  EXPECT_FALSE(f["ambiguous_l0"].get<bool>());
  EXPECT_NEAR(param(f, "r1_sq"), 0.9935, 3 * param(f, "r1_sq", "uncertainty"));
  EXPECT_NEAR(param(f, "theta0"), 0.18e-3, 3 * param(f, "theta0", "uncertainty"));
  EXPECT_NEAR(param(f, "A"), 40.0, 3 * param(f, "A", "uncertainty"));
}

TEST(Fit, MapFixtureThinConventionBelowSlab) {
  const fs::path dir = scratch("map");
  ASSERT_EQ(run("fit map --config " + fixture("map.toml") + " --out " + dir.string()).code, 0);
  const json f = load_json(dir / "fit.json");
  EXPECT_TRUE(f["converged"].get<bool>());
  EXPECT_LT(param(f, "d"), 88e-9);
  EXPECT_GT(param(f, "d"), 70e-9);
}

TEST(Fit, SynthThenFitRoundTrip) {
  const fs::path dir = scratch("synth");
  ASSERT_EQ(run("synth loss --seed 17 --config " + fixture("loss_synth.toml") + " --out " +
                dir.string())
                .code,
            0);
  ASSERT_EQ(run("fit loss --config " + fixture("loss.toml") + " --input " +
                (dir / "loss.csv").string() + " --out " + dir.string())
                .code,
            0);
  const json f = load_json(dir / "fit.json");
  EXPECT_NEAR(param(f, "eps"), 0.75, 4 * param(f, "eps", "uncertainty"));
}

TEST(Spectrum, NoModeMatchingGivesUniformMap) {
  const fs::path dir = scratch("eps0");
  const Outcome r = run("spectrum --config " + fixture("spectrum.toml") +
                    " --set cavity.mode_match=0 --set spectrum.x_points=5 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(dir / "map.csv"));
  std::string line;
  std::getline(in, line);
  std::set<std::string> values;
  while (std::getline(in, line)) values.insert(line.substr(line.rfind(',') + 1));
  ASSERT_EQ(values.size(), 1u);
  EXPECT_EQ(*values.begin(), "1");
}

TEST(Couplings, TransparentMembraneHasNoCoupling) {
  const fs::path dir = scratch("transparent");
  ASSERT_EQ(run("couplings --config " + fixture("couplings.toml") +
                " --set membrane.t=1 --set couplings.maxima=false --out " + dir.string())
                .code,
            0);
  std::istringstream in(slurp(dir / "couplings.csv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string dx, g1, g2;
    std::getline(cells, dx, ',');
    std::getline(cells, g1, ',');
    std::getline(cells, g2, ',');
    EXPECT_EQ(std::stod(g1), 0.0);
    EXPECT_EQ(std::stod(g2), 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 156);
}

TEST(Determinism, ThreadCountDoesNotChangeOutput) {
  const fs::path a = scratch("threads1");
  const fs::path b = scratch("threads3");
  const std::string base = "spectrum --config " + fixture("spectrum.toml") +
                           " --set spectrum.x_points=9 --set spectrum.detuning_points=301";
  ASSERT_EQ(run(base + " --threads 1 --out " + a.string()).code, 0);
  ASSERT_EQ(run(base + " --threads 3 --out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a / "map.csv"), slurp(b / "map.csv"));
  EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
}

TEST(Determinism, SeedControlsSyntheticNoise) {
  const fs::path a = scratch("seed_a");
  const fs::path b = scratch("seed_b");
  const fs::path c = scratch("seed_c");
  const std::string base = "synth transmission --config " + fixture("transmission_synth.toml");
  ASSERT_EQ(run(base + " --seed 4 --out " + a.string()).code, 0);
  ASSERT_EQ(run(base + " --seed 4 --out " + b.string()).code, 0);
  ASSERT_EQ(run(base + " --seed 5 --out " + c.string()).code, 0);
  EXPECT_EQ(slurp(a / "transmission.csv"), slurp(b / "transmission.csv"));
  EXPECT_NE(slurp(a / "transmission.csv"), slurp(c / "transmission.csv"));
}

TEST(Output, SeventeenSignificantDigits) {
  const fs::path dir = scratch("digits");
  ASSERT_EQ(run("tilt --config " + fixture("tilt.toml") + " --out " + dir.string()).code, 0);
  const std::string text = slurp(dir / "tilt.json");
  EXPECT_NE(text.find("0.00018000000000000001"), std::string::npos) << text;
  const json j = json::parse(text);
  EXPECT_NEAR(j["flexure"]["sagitta"].get<double>(), 11e-3 * 11e-3 / (2 * 80.0), 1e-12);
  EXPECT_NE(slurp(dir / "tilt.csv").find("1.5e-06"), std::string::npos);
}

TEST(Logging, EnvironmentControlsVerbosity) {
  const fs::path dir = scratch("log");
  const std::string args = "spectrum --config " + fixture("spectrum.toml") +
                           " --set spectrum.x_points=3 --out " + dir.string();
  const Outcome quiet = run(args, "MATE_OPTIX_LOG=off");
  EXPECT_EQ(quiet.code, 0);
  EXPECT_TRUE(quiet.err.empty()) << quiet.err;
  const Outcome chatty = run(args, "MATE_OPTIX_LOG=debug");
  EXPECT_EQ(chatty.code, 0);
  EXPECT_FALSE(chatty.err.empty());
  const Outcome odd = run(args, "MATE_OPTIX_LOG=shouting");
  EXPECT_EQ(odd.code, 0);
  EXPECT_NE(odd.err.find("shouting"), std::string::npos);
}
