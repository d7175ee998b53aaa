// Acceptance checks. Each criterion prints one "criterion N: PASS|FAIL ..." line.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "fixtures.hpp"
#include "infoplane/datasets.hpp"
#include "infoplane/distributions.hpp"
#include "infoplane/experiment.hpp"
#include "infoplane/grad_check.hpp"
#include "infoplane/mi.hpp"

using namespace infoplane;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig shipped(const std::string& name, const fs::path& out, std::vector<std::string> overrides = {}) {
  overrides.push_back("output_dir=\"" + out.string() + "\"");
  return load_run_config(fs::path(INFOPLANE_CONFIG_DIR) / name, overrides);
}

Outcome gradients() {
  double worst_vib = 0.0, worst_elbo = 0.0, worst_bound = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const auto seed = static_cast<std::uint64_t>(100 + draw);
    RandomStream rng(seed, "acceptance-grad");

    StudentConfig scfg;
    scfg.bottleneck_dim = 3;
    scfg.encoder_hidden = {6};
    scfg.decoder_hidden = {5};
    scfg.activation = Activation::tanh;
    scfg.beta = 0.05;
    scfg.seed = seed;
    StudentModel student(scfg, 8);
    const Matrix x = rng.uniform_matrix(4, 8);
    const std::vector<int> y{static_cast<int>(draw % 10), 3, 9, 0};
    const Matrix eps = rng.normal_matrix(4, 3);
    auto sp = student.parameters();
    worst_vib = std::max(worst_vib, grad_check(sp, [&](Tape& tape, std::span<const Tensor> p) {
      const StudentGraph g(student, p);
      return vib_loss(g, tape.constant(x), y, tape.constant(eps)).loss;
    }, 1e-5));

    TeacherConfig tcfg;
    tcfg.latent_dim = 2;
    tcfg.hidden = {5};
    tcfg.activation = Activation::tanh;
    tcfg.observation = draw % 2 == 0 ? ObservationModel::bernoulli : ObservationModel::gaussian;
    tcfg.seed = seed;
    TeacherModel teacher(tcfg, 8);
    const Matrix teps = rng.normal_matrix(4, 2);
    auto tp = teacher.parameters();
    worst_elbo = std::max(worst_elbo, grad_check(tp, [&](Tape& tape, std::span<const Tensor> p) {
      const TeacherGraph g(teacher, p);
      return elbo(g, tape.constant(x), tape.constant(teps)).elbo;
    }, 1e-5));

    // Gaussian pixels take the pathwise route; Bernoulli pixels use the decoder mean.
    const ResampleMode mode = tcfg.observation == ObservationModel::gaussian ? ResampleMode::sample : ResampleMode::mean;
    InferenceNet q(3, 2, {4}, Activation::tanh, seed);
    const Matrix z = rng.normal_matrix(4, 3);
    auto qp = q.net.parameters();
    worst_bound = std::max(worst_bound, grad_check(qp, [&](Tape& tape, std::span<const Tensor> p) {
      const BoundMlp net(q.net, p);
      RandomStream draws(seed, "acceptance-bound");
      return teacher_bound_graph(student, teacher, net, tape.constant(z), 3, mode, draws).surrogate;
    }, 1e-5));
  }
  return {worst_vib < 1e-4 && worst_elbo < 1e-4 && worst_bound < 1e-4,
          fmt("max rel err vib %.2e elbo %.2e teacher-bound %.2e (20 draws each, limit 1e-4)", worst_vib, worst_elbo,
              worst_bound)};
}

Outcome distributions() {
  RandomStream rng(200, "acceptance-kl");
  const auto random_gaussian = [&](Eigen::Index d) {
    return DiagGaussiand(rng.normal_matrix(d, 1), (rng.uniform_matrix(d, 1).array() * 3.0 - 1.5).matrix());
  };
  const auto p0 = random_gaussian(4);
  const double self = gauss_kl(p0, p0);
  const double unit = gauss_kl(DiagGaussiand(Vector::Ones(1), Vector::Zero(1)), DiagGaussiand::standard(1));
  bool ok = self == 0.0 && std::abs(unit - 0.5) <= 1e-12;
  int within = 0;
  double worst_z = 0.0;
  const int n = 100000;
  for (int pair = 0; pair < 50; ++pair) {
    const auto p = random_gaussian(3), q = random_gaussian(3);
    // Independent Monte Carlo: log N(z; p) - log N(z; q) written out per coordinate.
    const Matrix eps = rng.normal_matrix(n, 3);
    const Eigen::ArrayXXd zs =
        (eps.array().rowwise() * (0.5 * p.log_var.array()).exp().transpose()).rowwise() + p.mean.array().transpose();
    Eigen::ArrayXd diff = Eigen::ArrayXd::Zero(n);
    for (Eigen::Index j = 0; j < 3; ++j) {
      const auto lp = -0.5 * (p.log_var(j) + (zs.col(j) - p.mean(j)).square() / std::exp(p.log_var(j)));
      const auto lq = -0.5 * (q.log_var(j) + (zs.col(j) - q.mean(j)).square() / std::exp(q.log_var(j)));
      diff += lp - lq;
    }
    const double mean = diff.mean();
    const double se = std::sqrt((diff - mean).square().sum() / (n - 1) / n);
    const double zscore = std::abs(mean - gauss_kl(p, q)) / se;
    worst_z = std::max(worst_z, zscore);
    within += zscore < 3.0;
  }
  ok = ok && within == 50;
  return {ok, fmt("self KL %.1e, KL(N(1,1)||N(0,1)) - 0.5 = %.1e, %d/50 Monte Carlo pairs within 3 SE (worst %.2f SE)",
                  self, unit - 0.5, within, worst_z)};
}

Outcome exact_mi() {
  Matrix t(2, 2);
  t << 0.4, 0.1, 0.1, 0.4;
  const double v = mi_discrete_exact({t}).value;
  // 0.19274 is the direct sum 0.8 ln 1.6 + 0.2 ln 0.4 printed to five decimals.
  const double summed = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
  bool ok = std::abs(v - summed) <= 1e-6 && std::round(v * 1e5) == 19274.0;
  double worst = 0.0;
  RandomStream rng(300, "acceptance-binned");
  for (int trial = 0; trial < 10; ++trial) {
    const int kx = 2 + trial % 5, ky = 2 + (trial * 3) % 4;
    Matrix joint = rng.uniform_matrix(kx, ky).array().square();
    joint /= joint.sum();
    const auto s = sample_discrete({joint}, 5000, 301 + static_cast<std::uint64_t>(trial));
    Matrix x(5000, 1), z(5000, 1);
    for (Eigen::Index i = 0; i < 5000; ++i) {
      x(i, 0) = s.x[static_cast<std::size_t>(i)];
      z(i, 0) = s.y[static_cast<std::size_t>(i)];
    }
    worst = std::max(worst, std::abs(mi_binned(x, z, 30).value - mi_discrete_exact(empirical_joint(s.x, s.y)).value));
  }
  ok = ok && worst <= 1e-9;
  return {ok, fmt("exact MI %.8f (direct sum %.8f +- 1e-6, printed 0.19274), binned vs exact worst gap %.1e over 10 joints", v, summed, worst)};
}

Outcome bracketing() {
  const auto x = fixture::standard_gaussian_inputs(5000, 400);
  RandomStream rng(400, "acceptance-bracket");
  int direct_ok = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const double a = 0.2 + 2.0 * rng.uniform(), sigma = 0.3 + 1.5 * rng.uniform();
    direct_ok += mi_xz_direct_upper(fixture::linear_student(a, sigma * sigma), x).value >=
                 fixture::linear_mi(a, sigma * sigma);
  }
  const double truth = fixture::linear_mi(1.0, 1.0);
  auto q = fixture::linear_inference(401);
  TeacherBoundConfig cfg;
  cfg.n_outer = 4096;
  cfg.opt_steps = 400;
  cfg.learning_rate = 0.02;
  const double teacher =
      mi_xz_teacher_upper(fixture::linear_student(1.0, 1.0), fixture::linear_teacher(0.1), q, cfg, 402).estimate.value;
  const bool ok = direct_ok == 10 && teacher >= truth && teacher - truth < 0.2;
  return {ok, fmt("direct bound >= truth for %d/10 pairs; teacher bound %.4f vs truth %.4f (gap %.4f, limit 0.2)",
                  direct_ok, teacher, truth, teacher - truth)};
}

Outcome zero_info(const fs::path& work) {
  const auto run = run_experiment(shipped("zero_info.json", work / "zero_info"));
  const auto& last = run.trajectory.back();
  const bool ok = last.i_xz_min < 0.05 && last.i_zy_lower < 0.05 && last.accuracy >= 0.07 && last.accuracy <= 0.13;
  return {ok, fmt("after %d epochs i_xz_min %.4f, i_zy_lower %.4f, accuracy %.3f", last.epoch, last.i_xz_min,
                  last.i_zy_lower, last.accuracy)};
}

Outcome beta_monotone(const fs::path& work) {
  const auto cfg = shipped("beta_sweep.json", work / "beta_sweep");
  const auto sweep = run_beta_sweep(cfg, cfg.betas);
  bool ok = cfg.betas.size() == 4;
  std::string detail = "final i_xz_min";
  for (std::size_t i = 0; i < sweep.summary.size(); ++i) {
    detail += fmt(" beta=%g:%.3f", sweep.summary[i].beta, sweep.summary[i].final_i_xz_min);
    if (i > 0) ok = ok && sweep.summary[i].final_i_xz_min < sweep.summary[i - 1].final_i_xz_min;
  }
  return {ok, detail};
}

/// The three compression runs shared by criteria 7-9. A run is reused when its
/// resolved config matches and it completed.
std::vector<std::pair<RunResult, CompareReport>> compression_runs(const fs::path& work) {
  std::vector<std::pair<RunResult, CompareReport>> out;
  for (int seed = 1; seed <= 3; ++seed) {
    const fs::path dir = work / "compression" / ("seed" + std::to_string(seed));
    const auto cfg = shipped("compression.json", dir, {"seed=" + std::to_string(seed)});
    const std::string resolved = to_json(cfg).dump(2) + '\n';
    if (fs::exists(dir / "trajectory.csv") && fs::exists(dir / "compare_report.json") &&
        !fs::exists(dir / "INCOMPLETE") && slurp(dir / "config.json") == resolved) {
      RunResult r{dir, read_trajectory(dir / "trajectory.csv")};
      if (static_cast<int>(r.trajectory.size()) == cfg.student.epochs) {
        const auto report = compare_trajectory(r.trajectory);
        out.emplace_back(std::move(r), report);
        continue;
      }
    }
    out.push_back(run_estimator_compare(cfg));
  }
  return out;
}

std::size_t argmax_min(const std::vector<InfoPlanePoint>& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i].i_xz_min > t[best].i_xz_min) best = i;
  return best;
}

Outcome compression(const fs::path& work) {
  int passing = 0;
  std::string detail;
  for (const auto& [run, report] : compression_runs(work)) {
    const auto& t = run.trajectory;
    const std::size_t peak = argmax_min(t);
    double zy_max = -INFINITY;
    for (const auto& p : t) zy_max = std::max(zy_max, p.i_zy_lower);
    const int total = static_cast<int>(t.size());
    const bool early = t[peak].epoch < 0.8 * total;
    const bool drop = t.back().i_xz_min < 0.95 * t[peak].i_xz_min;
    const bool kept = t.back().i_zy_lower >= 0.9 * zy_max;
    passing += early && drop && kept;
    detail += fmt(" [seed %llu: peak epoch %d/%d, final/max %.3f, final/max I(Z;Y) %.3f]",
                  static_cast<unsigned long long>(t.back().seed), t[peak].epoch, total,
                  t.back().i_xz_min / t[peak].i_xz_min, t.back().i_zy_lower / zy_max);
  }
  return {passing >= 2, fmt("%d/3 seeds show compression with fitting retained;", passing) + detail};
}

Outcome estimator_compare(const fs::path& work) {
  bool ok = true;
  std::string detail;
  for (const auto& [run, report] : compression_runs(work)) {
    const fs::path path = run.directory / "compare_report.json";
    const std::string text = slurp(path);
    const bool formed = text.find("\"crossover_epoch\"") != std::string::npos;
    bool listed = !report.crossover_epoch;
    for (const auto& p : run.trajectory) listed = listed || p.epoch == *report.crossover_epoch;
    ok = ok && formed && listed && report.both_nonnegative && report.epochs == static_cast<int>(run.trajectory.size());
    detail += fmt(" [seed %llu: crossover %s, direct lower in %d/%d epochs, both >= 0: %s]",
                  static_cast<unsigned long long>(run.trajectory.back().seed),
                  report.crossover_epoch ? std::to_string(*report.crossover_epoch).c_str() : "none",
                  report.direct_lower_epochs, report.epochs, report.both_nonnegative ? "yes" : "no");
  }
  return {ok, "comparison reports well formed;" + detail};
}

Outcome diagnostics(const fs::path& work) {
  int passing = 0;
  std::string detail;
  for (const auto& [run, report] : compression_runs(work)) {
    const auto& t = run.trajectory;
    const std::size_t onset = argmax_min(t);
    passing += t.back().mean_logdet_cov < t[onset].mean_logdet_cov;
    detail += fmt(" [seed %llu: logdet onset (epoch %d) %.2f, final %.2f]",
                  static_cast<unsigned long long>(t.back().seed), t[onset].epoch, t[onset].mean_logdet_cov,
                  t.back().mean_logdet_cov);
  }
  return {passing >= 2, fmt("%d/3 seeds end with a tighter covariance than at compression onset;", passing) + detail};
}

Outcome reproducibility(const fs::path& work) {
  const auto a = run_experiment(shipped("reproducibility.json", work / "repro" / "a"));
  const auto b = run_experiment(shipped("reproducibility.json", work / "repro" / "b"));
  const std::string ca = slurp(a.directory / "trajectory.csv"), cb = slurp(b.directory / "trajectory.csv");
  return {!ca.empty() && ca == cb, fmt("trajectory.csv %zu bytes, %s", ca.size(), ca == cb ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> criteria;
  std::string work_dir = "acceptance_runs";
  app.add_option("--criterion", criteria, "criterion number(s), default all")->check(CLI::Range(1, 10));
  app.add_option("--work-dir", work_dir, "directory for experiment outputs");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty())
    for (int i = 1; i <= 10; ++i) criteria.push_back(i);

  const fs::path work = work_dir;
  fs::create_directories(work);
  const std::vector<std::function<Outcome()>> checks{
      gradients,
      distributions,
      exact_mi,
      bracketing,
      [&] { return zero_info(work); },
      [&] { return beta_monotone(work); },
      [&] { return compression(work); },
      [&] { return estimator_compare(work); },
      [&] { return diagnostics(work); },
      [&] { return reproducibility(work); },
  };
  bool all = true;
  for (int c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s %s (%.1fs)\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
