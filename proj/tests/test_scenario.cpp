#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "cqtraj/scenario.hpp"

using namespace cqtraj;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cqtraj_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> violations_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

json small_config() {
  return json::parse(R"({
    "name": "small",
    "state": {"family": "HO_COHERENT_CLOSED", "lambda": 2.1},
    "field": "HO_COHERENT_CLOSED",
    "initial_points": [2.2, 2.5, [2.9, 0.1]],
    "samples": 300,
    "analyses": ["ellipse_fit"]
  })");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CQTRAJ_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalResolvesDefaults) {
  const auto cfg = parse_config(small_config());
  EXPECT_EQ(cfg.name, "small");
  EXPECT_EQ(cfg.initial_points.size(), 3u);
  EXPECT_EQ(cfg.initial_points[2].x0, cplx(2.9, 0.1));
  EXPECT_EQ(cfg.outputs.size(), 3u);
  const json echo = config_to_json(cfg);
  EXPECT_EQ(echo["integrator"]["method"], "RK45_ADAPTIVE");
  EXPECT_EQ(echo["model"]["hbar"], 1.0);
  // The echo is itself a valid config describing the same run.
  EXPECT_EQ(config_to_json(parse_config(echo)), echo);
}

TEST(Config, EmptyInitialPointsNamesTheField) {
  json j = small_config();
  j["initial_points"] = json::array();
  const auto v = violations_of(j);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("initial_points"), std::string::npos);
}

TEST(Config, EveryViolationIsListed) {
  json j = small_config();
  j["initial_points"] = json::array();
  j["t_span"] = {3, 1};
  j["samples"] = 0;
  j["integrator"] = {{"rel_tol", 2.0}, {"dt_min", -1.0}};
  j["outputs"] = {"csv", "png"};
  j["bogus"] = 1;
  j["analyses"] = {"nonsense"};
  const auto v = violations_of(j);
  for (const char* needle : {"initial_points", "t_span", "samples", "rel_tol", "dt_min", "png",
                             "bogus", "analyses[0]"})
    EXPECT_TRUE(mentions(v, needle)) << needle;
}

TEST(Config, CrossFieldChecks) {
  EXPECT_TRUE(mentions(violations_of(json::parse(
                           R"({"name": "a", "field": "CLASSICAL_HAMILTONIAN", "initial_points": [1]})")),
                       "classical"));
  EXPECT_TRUE(mentions(violations_of(json::parse(
                           R"({"name": "a", "state": {"family": "WELL_EIGEN"}, "initial_points": [4.0]})")),
                       "initial_points[0]"));
  EXPECT_TRUE(mentions(violations_of(json::parse(
                           R"({"name": "a", "state": {"family": "WELL_EIGEN"}, "field": "DBB", "initial_points": [1]})")),
                       "field"));
  EXPECT_TRUE(mentions(violations_of(json::parse(
                           R"({"name": "a", "state": {"family": "PT_COHERENT", "J": 0.1, "l": 0.3}, "initial_points": [0.5]})")),
                       "state.l"));
}

TEST(Config, ScenarioFilesInRepository) {
  for (const auto& entry : fs::directory_iterator(CQTRAJ_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    if (entry.path().stem() == "invalid") {
      EXPECT_THROW(load_config(entry.path()), ConfigError);
    } else {
      EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    }
  }
}

TEST(Presets, AllPresetsValidate) {
  EXPECT_GE(presets().size(), 20u);
  for (const auto& [name, cfg] : presets()) {
    EXPECT_EQ(name, cfg.name);
    EXPECT_NO_THROW(parse_config(config_to_json(cfg))) << name;
  }
  EXPECT_THROW(preset("fig99"), ConfigError);
}

TEST(Presets, FigurePresetParameters) {
  const auto ho = preset("fig4_ho_coherent");
  const auto& s = std::get<HoCoherentSeries>(*ho.state);
  EXPECT_EQ(s.lambda, 2.1);
  EXPECT_EQ(s.n_max, 4);
  EXPECT_EQ(ho.initial_points.size(), 8u);
  const auto pt = preset("fig7_pt_coherent");
  EXPECT_EQ(pt.initial_points.size(), 3u);
  EXPECT_EQ(pt.t_span.t1, 100.0);
  const auto well = preset("fig6_well_coherent_J016");
  EXPECT_EQ(std::get<WellCoherent>(*well.state).J, 0.16);
  EXPECT_EQ(well.initial_points.size(), 4u);
}

TEST(Csv, ConstantTrajectoryFourLines) {
  Trajectory traj;
  for (int i = 0; i < 3; ++i) {
    traj.times.push_back(i);
    traj.positions.push_back(cplx(1.5, -0.25));
  }
  const std::string csv = render_csv(traj);
  EXPECT_EQ(csv, "t,x_re,x_im\n0,1.5,-0.25\n1,1.5,-0.25\n2,1.5,-0.25\n");
  traj.momenta = std::vector<cplx>(3, cplx(0, 1));
  EXPECT_EQ(render_csv(traj).substr(0, 22), "t,x_re,x_im,p_re,p_im\n");
}

TEST(Csv, RoundTripIsBitIdentical) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  Trajectory traj;
  traj.momenta.emplace();
  for (int i = 0; i < 500; ++i) {
    traj.times.push_back(u(rng) * 1e-7);
    traj.positions.push_back({u(rng), std::ldexp(u(rng), -900)});
    traj.momenta->push_back({u(rng), 1.0 / 3.0});
  }
  const auto back = parse_csv(render_csv(traj));
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_EQ(back.times[i], traj.times[i]);
    EXPECT_EQ(back.positions[i], traj.positions[i]);
    EXPECT_EQ((*back.momenta)[i], (*traj.momenta)[i]);
  }
}

TEST(Csv, MalformedInputCarriesPath) {
  try {
    parse_csv("t,x_re,x_im\n0,1\n", "some/file.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("some/file.csv"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("a,b\n"), IoError);
}

TEST(Svg, OnePolylinePerTrajectoryAndLegend) {
  const auto report = run_scenario(parse_config(small_config()), {.write = false});
  std::vector<SvgSeries> series;
  for (const auto& t : report.trajectories) series.push_back({&t.trajectory, t.trajectory.meta.at("label")});
  const std::string svg = render_svg(series, "small");
  std::size_t polylines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1))
    ++polylines;
  EXPECT_EQ(polylines, 3u);
  EXPECT_NE(svg.find("x0 = 2.9+0.1i"), std::string::npos);
  EXPECT_NE(svg.find("Re x"), std::string::npos);
}

TEST(Run, ArtifactsAndReport) {
  const auto dir = scratch("artifacts");
  const auto report = run_scenario(parse_config(small_config()), {.out_dir = dir});
  EXPECT_TRUE(report.all_completed());
  for (const char* f : {"small_00.csv", "small_01.csv", "small_02.csv", "small.json", "small.svg"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const json j = json::parse(slurp(dir / "small.json"));
  EXPECT_EQ(j["schema"], 1);
  ASSERT_EQ(j["trajectories"].size(), 3u);
  for (const auto& t : j["trajectories"]) {
    EXPECT_EQ(t["stop"]["kind"], "COMPLETED");
    EXPECT_EQ(t["analyses"].size(), 1u);
    EXPECT_TRUE(t["analyses"].contains("ellipse_fit"));
  }
  const auto traj = read_csv(dir / "small_01.csv");
  EXPECT_EQ(traj.size(), 300u);
  // No temporaries are left behind.
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".tmp");
  fs::remove_all(dir);
}

TEST(Run, FormatOverrideLimitsArtifacts) {
  const auto dir = scratch("formats");
  RunOptions opts{.out_dir = dir};
  opts.formats = std::vector{OutputFormat::Json};
  run_scenario(parse_config(small_config()), opts);
  EXPECT_TRUE(fs::exists(dir / "small.json"));
  EXPECT_FALSE(fs::exists(dir / "small_00.csv"));
  EXPECT_FALSE(fs::exists(dir / "small.svg"));
  fs::remove_all(dir);
}

TEST(Run, ByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto cfg = parse_config(small_config());
  run_scenario(cfg, {.out_dir = a, .workers = 1});
  run_scenario(cfg, {.out_dir = b, .workers = 3});
  for (const char* f : {"small_00.csv", "small_01.csv", "small_02.csv", "small.json", "small.svg"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, FailedWriteLeavesNoPartialArtifacts) {
  const auto dir = scratch("atomic");
  // A directory squatting on the report's temporary name makes that one write fail
  // after the CSV temporaries were already written.
  fs::create_directories(dir / "small.json.tmp");
  EXPECT_THROW(run_scenario(parse_config(small_config()), {.out_dir = dir}), IoError);
  EXPECT_FALSE(fs::exists(dir / "small_00.csv"));
  EXPECT_FALSE(fs::exists(dir / "small_00.csv.tmp"));
  EXPECT_FALSE(fs::exists(dir / "small.svg"));
  fs::remove_all(dir);
}

TEST(Run, EarlyStopIsReportedNotThrown) {
  json j = json::parse(R"({"name": "node", "state": {"family": "WELL_EIGEN", "n": 1},
                           "initial_points": [1.5707963267948966, 1.0], "t_span": [0, 1]})");
  const auto report = run_scenario(parse_config(j), {.write = false});
  EXPECT_FALSE(report.all_completed());
  EXPECT_FALSE(report.trajectories[0].trajectory.completed());
  EXPECT_TRUE(report.trajectories[1].trajectory.completed());
}

TEST(Run, ClassicalAnalyticMatchesHamiltonian) {
  json j = json::parse(R"({"name": "c", "classical": {"kind": "HARMONIC", "energy": 4.5},
                           "field": "CLASSICAL_ANALYTIC", "initial_points": [3.2],
                           "analyses": ["energy_drift"]})");
  const auto analytic = run_scenario(parse_config(j), {.write = false});
  j["field"] = "CLASSICAL_HAMILTONIAN";
  const auto numeric = run_scenario(parse_config(j), {.write = false});
  const auto& a = analytic.trajectories[0].trajectory;
  const auto& n = numeric.trajectories[0].trajectory;
  ASSERT_EQ(a.size(), n.size());
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.positions[i] - n.positions[i]));
  EXPECT_LT(worst, 1e-7);
  EXPECT_LT(analytic.trajectories[0].analyses["energy_drift"]["drift"].get<double>(), 1e-12);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const std::string out = " --out-dir " + dir.string();
  const std::string scen = CQTRAJ_SCENARIO_DIR;
  EXPECT_EQ(run_cli("list-presets"), 0);
  EXPECT_EQ(run_cli("run " + scen + "/ho_coherent_closed.json" + out + " --samples 300"), 0);
  EXPECT_TRUE(fs::exists(dir / "ho_coherent_closed.json"));
  EXPECT_EQ(run_cli("run " + scen + "/well_pole.json" + out), 2);
  EXPECT_TRUE(fs::exists(dir / "well_pole.json"));
  EXPECT_EQ(run_cli("run " + scen + "/invalid.json" + out), 1);
  EXPECT_EQ(run_cli("run " + (dir / "missing.json").string() + out), 1);
  EXPECT_EQ(run_cli("preset no_such_preset" + out), 1);
  EXPECT_EQ(run_cli("preset fig3_classical_ho --format svg --format json" + out), 0);
  EXPECT_TRUE(fs::exists(dir / "fig3_classical_ho.svg"));
  EXPECT_FALSE(fs::exists(dir / "fig3_classical_ho_00.csv"));
  EXPECT_EQ(run_cli("preset fig3_classical_ho --format png" + out), 1);
  EXPECT_EQ(run_cli("bogus"), 1);
  fs::remove_all(dir);
}
