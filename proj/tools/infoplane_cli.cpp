#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "infoplane/experiment.hpp"

using namespace infoplane;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "JSON run configuration");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "Override the run seed");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--set", c.overrides, "Dotted override, e.g. student.beta=0.01")->take_all();
}

RunConfig resolve(const Common& c) {
  auto overrides = c.overrides;
  if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
  if (!c.out.empty()) overrides.push_back("output_dir=\"" + c.out + "\"");
  RunConfig config = c.config.empty() ? RunConfig{} : load_run_config(c.config, overrides);
  if (c.config.empty()) {
    auto j = to_json(config);
    for (const auto& o : overrides) apply_override(j, o);
    config = run_config_from_json(j);
    validate(config);
  }
  return config;
}

void print_report(const CompareReport& r) {
  std::cout << "crossover epoch: " << (r.crossover_epoch ? std::to_string(*r.crossover_epoch) : "none")
            << ", direct below teacher in " << r.direct_lower_epochs << "/" << r.epochs << " epochs\n";
}

void print_last(const RunResult& result) {
  std::cout << "wrote " << result.directory.string() << "\n";
  if (result.trajectory.empty()) return;
  const auto& p = result.trajectory.back();
  std::printf("epoch %d: I(X;Z) <= %.4f nats, I(Z;Y) >= %.4f nats, accuracy %.3f\n", p.epoch, p.i_xz_min,
              p.i_zy_lower, p.accuracy);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-plane experiments with a VIB student and a VAE teacher"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, compare_opts, teacher_opts, gen_opts, validate_opts;
  std::string plot_dir;
  auto* run = app.add_subcommand("run", "Run the experiment named in the config");
  add_common(run, run_opts, true);
  auto* sweep = app.add_subcommand("sweep", "Beta sweep, one run per beta");
  add_common(sweep, sweep_opts, true);
  auto* compare = app.add_subcommand("compare", "Direct versus teacher bound comparison");
  add_common(compare, compare_opts, true);
  auto* train_teacher = app.add_subcommand("train-teacher", "Train and save the teacher only");
  add_common(train_teacher, teacher_opts, true);
  auto* gen = app.add_subcommand("gen-data", "Write the prepared training set as IDX files plus a JSON sidecar");
  add_common(gen, gen_opts, false);
  auto* check = app.add_subcommand("validate-config", "Parse and validate a config, print the resolved form");
  add_common(check, validate_opts, true);
  auto* plot = app.add_subcommand("plot", "Regenerate SVG plots from a run directory");
  plot->add_option("--out", plot_dir, "Run directory containing trajectory.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*run) {
      const RunConfig config = resolve(run_opts);
      switch (config.experiment) {
        case ExperimentKind::beta_sweep: {
          const auto sweep_result = run_beta_sweep(config, config.betas);
          for (const auto& row : sweep_result.summary)
            std::printf("beta %g: final I(X;Z) %.4f, max %.4f, accuracy %.3f\n", row.beta, row.final_i_xz_min,
                        row.max_i_xz_min, row.final_accuracy);
          break;
        }
        case ExperimentKind::estimator_compare: {
          const auto [result, report] = run_estimator_compare(config);
          print_last(result);
          print_report(report);
          break;
        }
        case ExperimentKind::train_teacher_only:
          std::cout << "wrote " << run_train_teacher(config).string() << "\n";
          break;
        default:
          print_last(run_experiment(config));
      }
    } else if (*sweep) {
      const RunConfig config = resolve(sweep_opts);
      const auto sweep_result = run_beta_sweep(config, config.betas);
      for (const auto& row : sweep_result.summary)
        std::printf("beta %g: final I(X;Z) %.4f, max %.4f, accuracy %.3f\n", row.beta, row.final_i_xz_min,
                    row.max_i_xz_min, row.final_accuracy);
    } else if (*compare) {
      const auto [result, report] = run_estimator_compare(resolve(compare_opts));
      print_last(result);
      print_report(report);
    } else if (*train_teacher) {
      std::cout << "wrote " << run_train_teacher(resolve(teacher_opts)).string() << "\n";
    } else if (*gen) {
      const RunConfig config = resolve(gen_opts);
      const auto data = prepare_data(config);
      export_dataset(data.train, config.output_dir);
      std::cout << "wrote " << data.train.images.rows() << " examples to " << config.output_dir << "\n";
    } else if (*check) {
      std::cout << to_json(resolve(validate_opts)).dump(2) << "\n";
    } else if (*plot) {
      for (const auto& path : emit_plots(plot_dir)) std::cout << "wrote " << path.string() << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
