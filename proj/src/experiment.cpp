#include "infoplane/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "infoplane/checkpoint.hpp"

namespace infoplane {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double parse_double(const std::string& field, std::size_t line, const std::string& column) {
  if (field == "nan") return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw FormatError("trajectory.csv line " + std::to_string(line) + ": column '" + column +
                      "' is not a number: '" + field + "'");
  }
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

LabeledDataset synthetic_eval(const DatasetSpec& spec, std::uint64_t seed) {
  const int per_class = (spec.eval_size + 9) / 10;
  LabeledDataset eval = make_synthetic_digits(per_class, spec.side, spec.noise, mix64(seed ^ 0xE7A1ULL));
  std::vector<std::size_t> rows(static_cast<std::size_t>(spec.eval_size));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return eval.subset(rows);
}

double min_enabled(double a, double b) {
  const bool fa = std::isfinite(a), fb = std::isfinite(b);
  if (fa && fb) {
    MIEstimate direct, teacher;
    direct.value = a;
    direct.kind = EstimateKind::xz_direct_upper;
    teacher.value = b;
    teacher.kind = EstimateKind::xz_teacher_upper;
    return combine_estimates(direct, teacher).estimate.value;
  }
  if (fa) return a;
  if (fb) return b;
  return kNaN;
}

}  // namespace

std::string format_csv_row(const InfoPlanePoint& p) {
  std::string row = std::to_string(p.epoch);
  for (double v : {p.i_xz_direct, p.i_xz_teacher, p.i_xz_min, p.i_zy_lower, p.h_y, p.accuracy, p.mean_logdet_cov,
                   p.grad_norm, p.beta}) {
    row += ',';
    row += fmt(v);
  }
  row += ',' + p.optimizer + ',' + std::to_string(p.seed);
  return row;
}

std::vector<InfoPlanePoint> read_trajectory(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw FormatError("cannot open '" + csv_path.string() + "'");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("trajectory.csv line 1: missing header");
  if (line != kTrajectoryHeader) throw FormatError("trajectory.csv line 1: unexpected header '" + line + "'");
  static const std::vector<std::string> columns = split_commas(kTrajectoryHeader);
  std::vector<InfoPlanePoint> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != columns.size()) {
      throw FormatError("trajectory.csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(columns.size()) + " fields, found " + std::to_string(f.size()));
    }
    InfoPlanePoint p;
    p.epoch = static_cast<int>(parse_double(f[0], line_no, columns[0]));
    double* targets[] = {&p.i_xz_direct, &p.i_xz_teacher, &p.i_xz_min, &p.i_zy_lower, &p.h_y,
                         &p.accuracy,    &p.mean_logdet_cov, &p.grad_norm, &p.beta};
    for (std::size_t k = 0; k < 9; ++k) *targets[k] = parse_double(f[k + 1], line_no, columns[k + 1]);
    p.optimizer = f[10];
    try {
      p.seed = std::stoull(f[11]);
    } catch (const std::exception&) {
      throw FormatError("trajectory.csv line " + std::to_string(line_no) + ": bad seed '" + f[11] + "'");
    }
    out.push_back(p);
  }
  return out;
}

PreparedData prepare_data(const RunConfig& config) {
  validate(config);
  const DatasetSpec& spec = config.dataset;
  LabeledDataset train_base, eval_base;
  if (spec.source == DatasetSource::idx_file) {
    LabeledDataset all = load_idx(spec.idx_images, spec.idx_labels);
    if (spec.downsample > 1) all = downsample(all, spec.downsample);
    if (spec.eval_split == "heldout") {
      std::tie(train_base, eval_base) = split(all, static_cast<std::size_t>(spec.eval_size), config.seed);
    } else {
      train_base = all;
    }
  } else {
    train_base = make_synthetic_digits(spec.per_class, spec.side, spec.noise, config.seed);
    if (spec.eval_split == "heldout") eval_base = synthetic_eval(spec, config.seed);
  }
  if (spec.eval_split == "train") {
    std::vector<std::size_t> rows(std::min(train_base.size(), static_cast<std::size_t>(spec.eval_size)));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    eval_base = train_base.subset(rows);
  }

  PreparedData out;
  if (!config.teacher_checkpoint.empty()) {
    out.teacher = load_teacher(config.teacher_checkpoint);
    if (out.teacher.input_dim() != train_base.dim()) {
      throw ConfigError("teacher checkpoint expects " + std::to_string(out.teacher.input_dim()) +
                        " pixels, dataset has " + std::to_string(train_base.dim()));
    }
  } else {
    TeacherTraining t = train_teacher(config.teacher, train_base);
    out.teacher = std::move(t.model);
    out.teacher_elbo_curve = std::move(t.elbo_curve);
  }
  if (spec.teacher_relabel) {
    out.train = teacher_relabel(out.teacher, train_base, config.seed);
    out.eval = teacher_relabel(out.teacher, eval_base, config.seed);
  } else {
    out.train = std::move(train_base);
    out.eval = std::move(eval_base);
  }
  if (config.experiment == ExperimentKind::zero_info) {
    out.train = make_zero_info(out.train, config.seed);
    out.eval = make_zero_info(out.eval, mix64(config.seed ^ 0x2E40ULL));
  }
  return out;
}

RunResult run_experiment(const RunConfig& config) { return run_experiment(config, prepare_data(config)); }

RunResult run_experiment(const RunConfig& config, const PreparedData& data) {
  validate(config);
  RunResult result;
  result.directory = config.output_dir;
  std::filesystem::create_directories(result.directory);
  std::filesystem::remove(result.directory / "INCOMPLETE");
  std::ofstream(result.directory / "config.json") << to_json(config).dump(2) << '\n';

  const std::filesystem::path csv_path = result.directory / "trajectory.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  csv << kTrajectoryHeader << '\n';

  const EstimatorSpec& est = config.estimators;
  auto fresh_net = [&] {
    return InferenceNet(config.student.bottleneck_dim, data.teacher.latent_dim(), est.inference_hidden,
                        Activation::relu, config.seed);
  };
  InferenceNet inf_net = fresh_net();
  const double h_y = label_entropy(data.eval);
  const std::string optimizer = to_string(config.student.optimizer.kind);

  auto hook = [&](const StudentSnapshot& snap, const EpochDiagnostics& diag) {
    const auto epoch_seed = mix64(config.seed ^ mix64(static_cast<std::uint64_t>(diag.epoch)));
    InfoPlanePoint p;
    p.epoch = diag.epoch;
    p.i_xz_direct = est.direct ? mi_xz_direct_upper(*snap, data.eval).value : kNaN;
    if (est.teacher) {
      if (!est.warm_start) inf_net = fresh_net();
      p.i_xz_teacher = mi_xz_teacher_upper(*snap, data.teacher, inf_net, est.teacher_bound, epoch_seed).estimate.value;
    } else {
      p.i_xz_teacher = kNaN;
    }
    p.i_xz_min = min_enabled(p.i_xz_direct, p.i_xz_teacher);
    p.i_zy_lower = est.zy ? mi_zy_lower(*snap, data.eval, est.zy_samples, epoch_seed).value : kNaN;
    p.h_y = h_y;
    p.accuracy = diag.eval_accuracy;
    p.mean_logdet_cov = diag.mean_logdet_cov;
    p.grad_norm = diag.encoder_grad_norm;
    p.beta = config.student.beta;
    p.optimizer = optimizer;
    p.seed = config.seed;
    csv << format_csv_row(p) << '\n';
    csv.flush();
    result.trajectory.push_back(p);
  };

  try {
    const StudentTraining trained = train_student(config.student, data.train, &data.eval, hook);
    csv.close();
    save_teacher(data.teacher, config.teacher, result.directory / "checkpoints" / "teacher.json");
    save_student(trained.model, config.student, result.directory / "checkpoints" / "student.json");
  } catch (const std::exception& e) {
    csv.close();
    std::ofstream(result.directory / "INCOMPLETE")
        << "run aborted after " << result.trajectory.size() << " completed epochs: " << e.what() << '\n';
    throw;
  }
  emit_plots(result.directory);
  return result;
}

SweepResult run_beta_sweep(const RunConfig& config, const std::vector<double>& betas) {
  if (betas.size() < 2) throw ConfigError("beta sweep needs at least 2 betas, got " + std::to_string(betas.size()));
  validate(config);
  const PreparedData data = prepare_data(config);
  SweepResult sweep;
  const std::filesystem::path base = config.output_dir;
  std::filesystem::create_directories(base);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    RunConfig member = config;
    member.student.beta = betas[i];
    char name[64];
    std::snprintf(name, sizeof name, "beta_%02zu_%g", i, betas[i]);
    member.output_dir = (base / name).string();
    RunResult run = run_experiment(member, data);
    SweepRow row;
    row.beta = betas[i];
    if (!run.trajectory.empty()) {
      row.final_i_xz_min = run.trajectory.back().i_xz_min;
      row.final_accuracy = run.trajectory.back().accuracy;
      row.max_i_xz_min = -std::numeric_limits<double>::infinity();
      for (const auto& p : run.trajectory) row.max_i_xz_min = std::max(row.max_i_xz_min, p.i_xz_min);
    }
    sweep.summary.push_back(row);
    sweep.runs.push_back(std::move(run));
  }
  std::ofstream out(base / "sweep_summary.csv", std::ios::binary);
  out << "beta,final_i_xz_min,max_i_xz_min,final_accuracy\n";
  for (const auto& r : sweep.summary) {
    out << fmt(r.beta) << ',' << fmt(r.final_i_xz_min) << ',' << fmt(r.max_i_xz_min) << ',' << fmt(r.final_accuracy)
        << '\n';
  }
  return sweep;
}

CompareReport compare_trajectory(const std::vector<InfoPlanePoint>& trajectory) {
  CompareReport r;
  r.epochs = static_cast<int>(trajectory.size());
  for (const auto& p : trajectory) {
    if (p.i_xz_direct < p.i_xz_teacher) {
      ++r.direct_lower_epochs;
      if (!r.crossover_epoch) r.crossover_epoch = p.epoch;
    }
    if (!(p.i_xz_direct >= 0.0) || !(p.i_xz_teacher >= 0.0)) r.both_nonnegative = false;
  }
  return r;
}

void write_compare_report(const CompareReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  if (report.crossover_epoch) {
    j["crossover_epoch"] = *report.crossover_epoch;
  } else {
    j["crossover_epoch"] = "none";
  }
  j["epochs"] = report.epochs;
  j["direct_lower_epochs"] = report.direct_lower_epochs;
  j["both_nonnegative"] = report.both_nonnegative;
  std::ofstream(path) << j.dump(2) << '\n';
}

std::pair<RunResult, CompareReport> run_estimator_compare(const RunConfig& config) {
  if (!config.estimators.direct || !config.estimators.teacher) {
    throw ConfigError("estimator comparison needs estimators.direct and estimators.teacher enabled");
  }
  RunResult run = run_experiment(config);
  CompareReport report = compare_trajectory(run.trajectory);
  write_compare_report(report, run.directory / "compare_report.json");
  return {std::move(run), report};
}

std::filesystem::path run_train_teacher(const RunConfig& config) {
  RunConfig c = config;
  c.teacher_checkpoint.clear();
  const PreparedData data = prepare_data(c);
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.json") << to_json(config).dump(2) << '\n';
  const auto path = dir / "teacher.json";
  save_teacher(data.teacher, config.teacher, path);
  std::ofstream curve(dir / "teacher_elbo.csv", std::ios::binary);
  curve << "epoch,elbo\n";
  for (std::size_t i = 0; i < data.teacher_elbo_curve.size(); ++i) {
    curve << (i + 1) << ',' << fmt(data.teacher_elbo_curve[i]) << '\n';
  }
  return path;
}

}  // namespace infoplane
