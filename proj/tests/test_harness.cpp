#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "infoplane/experiment.hpp"

using namespace infoplane;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

struct CliResult {
  int code;
  std::string output;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = std::string("\"") + INFOPLANE_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

void write_csv(const fs::path& dir, int rows) {
  fs::create_directories(dir);
  std::ofstream out(dir / "trajectory.csv", std::ios::binary);
  out << kTrajectoryHeader << '\n';
  for (int e = 1; e <= rows; ++e) {
    InfoPlanePoint p;
    p.epoch = e;
    p.i_xz_direct = 2.0 + std::sin(e * 0.1);
    p.i_xz_teacher = 3.0;
    p.i_xz_min = std::min(p.i_xz_direct, p.i_xz_teacher);
    p.i_zy_lower = 1.5 * e / rows;
    p.h_y = std::log(10.0);
    p.accuracy = 0.5;
    p.mean_logdet_cov = -10.0 - e * 0.1;
    p.grad_norm = 1.0 / e;
    p.beta = 1e-3;
    p.optimizer = "adam";
    p.seed = 1;
    out << format_csv_row(p) << '\n';
  }
}

}  // namespace

TEST_CASE("one epoch with only the direct bound writes one row") {
  auto cfg = fixture::tiny_run(fixture::scratch_dir("one-epoch"));
  cfg.student.epochs = 1;
  cfg.estimators.teacher = false;
  cfg.estimators.zy = false;
  const auto run = run_experiment(cfg);
  const auto csv = lines(slurp(run.directory / "trajectory.csv"));
  REQUIRE(csv.size() == 2);
  CHECK(csv[0] == kTrajectoryHeader);
  CHECK(csv[0] == "epoch,i_xz_direct,i_xz_teacher,i_xz_min,i_zy_lower,h_y,accuracy,mean_logdet_cov,grad_norm,beta,"
                  "optimizer,seed");
  const auto t = read_trajectory(run.directory / "trajectory.csv");
  REQUIRE(t.size() == 1);
  CHECK(std::isnan(t[0].i_xz_teacher));
  CHECK(std::isnan(t[0].i_zy_lower));
  CHECK(t[0].i_xz_min == t[0].i_xz_direct);
  CHECK(fs::exists(run.directory / "config.json"));
  CHECK(fs::exists(run.directory / "info_plane.svg"));
  CHECK_FALSE(fs::exists(run.directory / "INCOMPLETE"));
}

TEST_CASE("full run: row count, minimum column, reproducible config") {
  const fs::path dir = fixture::scratch_dir("full-run");
  const auto cfg = fixture::tiny_run(dir / "a");
  const auto run = run_experiment(cfg);
  const auto t = read_trajectory(run.directory / "trajectory.csv");
  CHECK(static_cast<int>(t.size()) == cfg.student.epochs);
  for (const auto& p : t) {
    CHECK(p.i_xz_min == std::min(p.i_xz_direct, p.i_xz_teacher));
    CHECK(p.accuracy >= 0.0);
    CHECK(p.accuracy <= 1.0);
  }
  // The resolved config reproduces the run byte for byte.
  auto again = load_run_config(run.directory / "config.json", {"output_dir=\"" + (dir / "b").string() + "\""});
  const auto rerun = run_experiment(again);
  CHECK(slurp(run.directory / "trajectory.csv") == slurp(rerun.directory / "trajectory.csv"));
}

TEST_CASE("teacher bound with no inner steps sits above the direct bound") {
  auto cfg = fixture::tiny_run(fixture::scratch_dir("zero-steps"));
  cfg.estimators.teacher_bound.opt_steps = 0;
  cfg.estimators.warm_start = false;
  const auto [run, report] = run_estimator_compare(cfg);
  for (const auto& p : run.trajectory) CHECK(p.i_xz_teacher >= p.i_xz_direct);
  // Direct is below the teacher from the start, so the crossover is the first epoch.
  REQUIRE(report.crossover_epoch.has_value());
  CHECK(*report.crossover_epoch == run.trajectory.front().epoch);
  const auto j = nlohmann::json::parse(slurp(run.directory / "compare_report.json"));
  CHECK(j.at("crossover_epoch") == run.trajectory.front().epoch);
}

TEST_CASE("compare_trajectory crossover") {
  std::vector<InfoPlanePoint> t(3);
  for (int e = 0; e < 3; ++e) {
    t[static_cast<std::size_t>(e)].epoch = e + 1;
    t[static_cast<std::size_t>(e)].i_xz_direct = 1.0;
    t[static_cast<std::size_t>(e)].i_xz_teacher = 0.5 - 0.1 * e;
  }
  auto r = compare_trajectory(t);
  CHECK_FALSE(r.crossover_epoch.has_value());
  CHECK(r.direct_lower_epochs == 0);
  t[1].i_xz_teacher = 1.2;
  t[2].i_xz_teacher = 1.5;
  r = compare_trajectory(t);
  REQUIRE(r.crossover_epoch.has_value());
  CHECK(*r.crossover_epoch == 2);
  CHECK(r.direct_lower_epochs == 2);
  CHECK(r.epochs == 3);
  CHECK(r.both_nonnegative);
  t[0].i_xz_direct = -0.1;
  CHECK_FALSE(compare_trajectory(t).both_nonnegative);
}

TEST_CASE("beta sweep") {
  const fs::path dir = fixture::scratch_dir("sweep");
  auto cfg = fixture::tiny_run(dir);
  cfg.experiment = ExperimentKind::beta_sweep;
  cfg.estimators.teacher = false;
  CHECK_THROWS_AS(run_beta_sweep(cfg, {1e-3}), ConfigError);
  const auto sweep = run_beta_sweep(cfg, {1e-3, 1e-3});
  REQUIRE(sweep.runs.size() == 2);
  CHECK(slurp(sweep.runs[0].directory / "trajectory.csv") == slurp(sweep.runs[1].directory / "trajectory.csv"));
  CHECK(sweep.runs[0].directory != sweep.runs[1].directory);
  CHECK(lines(slurp(dir / "sweep_summary.csv")).size() == 3);
  CHECK(sweep.summary[0].final_i_xz_min == sweep.summary[1].final_i_xz_min);
}

TEST_CASE("config parsing and validation") {
  const auto base = to_json(RunConfig{});
  SUBCASE("round trip") {
    CHECK(to_json(run_config_from_json(base)) == base);
  }
  SUBCASE("unknown key") {
    auto j = base;
    j["student"]["betta"] = 0.1;
    try {
      (void)run_config_from_json(j);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("student.betta") != std::string::npos);
    }
  }
  SUBCASE("overrides") {
    auto j = base;
    apply_override(j, "student.beta=0.25");
    apply_override(j, "dataset.source=idx-file");
    apply_override(j, "student.encoder_hidden=[8,4]");
    const auto c = run_config_from_json(j);
    CHECK(c.student.beta == 0.25);
    CHECK(c.dataset.source == DatasetSource::idx_file);
    CHECK(c.student.encoder_hidden == std::vector<Eigen::Index>{8, 4});
    CHECK_THROWS_AS(apply_override(j, "student.beta"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "student.beta.x=1"), ConfigError);
  }
  SUBCASE("validation") {
    RunConfig c;
    c.student.beta = -1.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = RunConfig{};
    c.teacher_checkpoint = "/nonexistent/teacher.json";
    CHECK_THROWS_AS(validate(c), ConfigError);
    auto j = base;
    j["seed"] = "seven";
    CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  }
}

TEST_CASE("emit_plots") {
  const fs::path dir = fixture::scratch_dir("plots");
  SUBCASE("one row gives a single marker") {
    write_csv(dir / "one", 1);
    const auto files = emit_plots(dir / "one");
    CHECK(files.size() == 3);
    const std::string svg = slurp(dir / "one" / "info_plane.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(count(svg, "<svg ") == 1);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count(svg, "class=\"marker\"") == 1);
  }
  SUBCASE("byte-identical on rerun") {
    write_csv(dir / "again", 20);
    emit_plots(dir / "again");
    const std::string first = slurp(dir / "again" / "info_plane.svg") + slurp(dir / "again" / "mi_vs_epoch.svg") +
                              slurp(dir / "again" / "diagnostics.svg");
    emit_plots(dir / "again");
    CHECK(first == slurp(dir / "again" / "info_plane.svg") + slurp(dir / "again" / "mi_vs_epoch.svg") +
                       slurp(dir / "again" / "diagnostics.svg"));
  }
  SUBCASE("60 rows give a 60 vertex trajectory with nat axes") {
    write_csv(dir / "sixty", 60);
    emit_plots(dir / "sixty");
    const std::string svg = slurp(dir / "sixty" / "info_plane.svg");
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, std::regex("<polyline[^>]*data-series=\"trajectory\"[^>]*points=\"([^\"]*)\"")));
    std::stringstream pts(m[1].str());
    std::string vertex;
    int n = 0;
    while (pts >> vertex) {
      CHECK(std::regex_match(vertex, std::regex("-?[0-9.]+,-?[0-9.]+")));
      ++n;
    }
    CHECK(n == 60);
    CHECK(count(svg, "class=\"marker\"") == 60);
    CHECK(svg.find("I(X;Z) [nats]") != std::string::npos);
    CHECK(svg.find("I(Z;Y) [nats]") != std::string::npos);
  }
  SUBCASE("malformed CSV reports the line") {
    write_csv(dir / "bad", 3);
    {
      std::ofstream out(dir / "bad" / "trajectory.csv", std::ios::app);
      out << "4,1.0,oops,1,1,1,1,1,1,0.001,adam,1\n";
    }
    try {
      emit_plots(dir / "bad");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("line 5") != std::string::npos);
    }
  }
}

TEST_CASE("cli") {
  const fs::path dir = fixture::scratch_dir("cli");
  const std::string config = std::string(INFOPLANE_CONFIG_DIR) + "/default.json";
  SUBCASE("validate-config on a shipped config") {
    for (const auto& entry : fs::directory_iterator(INFOPLANE_CONFIG_DIR)) {
      CAPTURE(entry.path().string());
      CHECK(cli("validate-config --config \"" + entry.path().string() + "\"", dir).code == 0);
    }
  }
  SUBCASE("missing config") {
    const auto r = cli("run", dir);
    CHECK(r.code == 2);
    CHECK(r.output.find("--config") != std::string::npos);
  }
  SUBCASE("unknown subcommand and flag") {
    CHECK(cli("frobnicate", dir).code == 2);
    CHECK(cli("validate-config --config \"" + config + "\" --bogus", dir).code == 2);
  }
  SUBCASE("bad config value exits 2") {
    CHECK(cli("validate-config --config \"" + config + "\" --set student.beta=-1", dir).code == 2);
  }
  SUBCASE("--set overrides the file value") {
    const auto cfg = fixture::tiny_run(dir / "run");
    {
      std::ofstream out(dir / "tiny.json");
      auto j = to_json(cfg);
      j["student"]["epochs"] = 1;
      j["estimators"]["teacher"] = false;
      out << j.dump(2);
    }
    const auto r = cli("run --config \"" + (dir / "tiny.json").string() + "\" --set student.beta=0.01 --out \"" +
                           (dir / "run").string() + "\"",
                       dir);
    CHECK(r.code == 0);
    const auto resolved = nlohmann::json::parse(slurp(dir / "run" / "config.json"));
    CHECK(resolved["student"]["beta"] == 0.01);
    CHECK(read_trajectory(dir / "run" / "trajectory.csv").at(0).beta == 0.01);
  }
  SUBCASE("numeric abort exits 3 and leaves a marked partial run") {
    auto cfg = fixture::tiny_run(dir / "nan");
    auto j = to_json(cfg);
    j["estimators"]["teacher"] = false;
    j["student"]["optimizer"]["learning_rate"] = 1e300;
    {
      std::ofstream out(dir / "nan.json");
      out << j.dump(2);
    }
    const auto r = cli("run --config \"" + (dir / "nan.json").string() + "\"", dir);
    CHECK(r.code == 3);
    CHECK(fs::exists(dir / "nan" / "INCOMPLETE"));
    CHECK(fs::exists(dir / "nan" / "trajectory.csv"));
  }
  SUBCASE("plot subcommand") {
    write_csv(dir / "plot", 5);
    CHECK(cli("plot --out \"" + (dir / "plot").string() + "\"", dir).code == 0);
    CHECK(fs::exists(dir / "plot" / "diagnostics.svg"));
  }
}
