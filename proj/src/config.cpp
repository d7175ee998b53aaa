#include "infoplane/config.hpp"

#include <fstream>

#include "infoplane/checkpoint.hpp"

namespace infoplane {
namespace {

using json = nlohmann::ordered_json;

void check_keys(const json& input, const json& reference, const std::string& path) {
  if (!input.is_object()) throw ConfigError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
  for (const auto& [key, value] : input.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ConfigError("config: unknown key '" + full + "'");
    if (reference.at(key).is_object()) check_keys(value, reference.at(key), full);
  }
}

template <typename T>
T get_or(const json& j, const char* key, const T& fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: '" + section + "." + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::zero_info: return "zero-info";
    case ExperimentKind::estimator_compare: return "estimator-compare";
    case ExperimentKind::ip_trajectory: return "ip-trajectory";
    case ExperimentKind::beta_sweep: return "beta-sweep";
    case ExperimentKind::train_teacher_only: return "train-teacher-only";
  }
  return "ip-trajectory";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::zero_info, ExperimentKind::estimator_compare, ExperimentKind::ip_trajectory,
                 ExperimentKind::beta_sweep, ExperimentKind::train_teacher_only}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("config: unknown experiment '" + name + "'");
}

json to_json(const RunConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;

  json& d = j["dataset"];
  d["source"] = to_string(c.dataset.source);
  d["side"] = c.dataset.side;
  d["per_class"] = c.dataset.per_class;
  d["noise"] = c.dataset.noise;
  d["idx_images"] = c.dataset.idx_images;
  d["idx_labels"] = c.dataset.idx_labels;
  d["downsample"] = c.dataset.downsample;
  d["eval_size"] = c.dataset.eval_size;
  d["eval_split"] = c.dataset.eval_split;
  d["teacher_relabel"] = c.dataset.teacher_relabel;

  j["teacher"] = teacher_config_json(c.teacher);
  j["teacher"]["checkpoint"] = c.teacher_checkpoint;
  j["student"] = student_config_json(c.student);

  json& e = j["estimators"];
  e["direct"] = c.estimators.direct;
  e["teacher"] = c.estimators.teacher;
  e["zy"] = c.estimators.zy;
  e["zy_samples"] = c.estimators.zy_samples;
  e["teacher_outer"] = c.estimators.teacher_bound.n_outer;
  e["teacher_mc"] = c.estimators.teacher_bound.mc_samples;
  e["teacher_steps"] = c.estimators.teacher_bound.opt_steps;
  e["teacher_lr"] = c.estimators.teacher_bound.learning_rate;
  e["resample"] = to_string(c.estimators.teacher_bound.mode);
  e["inference_hidden"] = c.estimators.inference_hidden;
  e["warm_start"] = c.estimators.warm_start;

  j["sweep"]["betas"] = c.betas;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, to_json(RunConfig{}), "");
  RunConfig c;
  try {
    c.experiment = parse_experiment_kind(get_or<std::string>(j, "experiment", to_string(c.experiment), ""));
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "");
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir, "");
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      c.dataset.source = parse_dataset_source(get_or<std::string>(d, "source", to_string(c.dataset.source), "dataset"));
      c.dataset.side = get_or(d, "side", c.dataset.side, "dataset");
      c.dataset.per_class = get_or(d, "per_class", c.dataset.per_class, "dataset");
      c.dataset.noise = get_or(d, "noise", c.dataset.noise, "dataset");
      c.dataset.idx_images = get_or(d, "idx_images", c.dataset.idx_images, "dataset");
      c.dataset.idx_labels = get_or(d, "idx_labels", c.dataset.idx_labels, "dataset");
      c.dataset.downsample = get_or(d, "downsample", c.dataset.downsample, "dataset");
      c.dataset.eval_size = get_or(d, "eval_size", c.dataset.eval_size, "dataset");
      c.dataset.eval_split = get_or(d, "eval_split", c.dataset.eval_split, "dataset");
      c.dataset.teacher_relabel = get_or(d, "teacher_relabel", c.dataset.teacher_relabel, "dataset");
    }
    if (j.contains("teacher")) {
      c.teacher = teacher_config_from_json(j.at("teacher"));
      c.teacher_checkpoint = get_or<std::string>(j.at("teacher"), "checkpoint", "", "teacher");
    }
    if (j.contains("student")) c.student = student_config_from_json(j.at("student"));
    if (j.contains("estimators")) {
      const json& e = j.at("estimators");
      auto& est = c.estimators;
      est.direct = get_or(e, "direct", est.direct, "estimators");
      est.teacher = get_or(e, "teacher", est.teacher, "estimators");
      est.zy = get_or(e, "zy", est.zy, "estimators");
      est.zy_samples = get_or(e, "zy_samples", est.zy_samples, "estimators");
      est.teacher_bound.n_outer = get_or(e, "teacher_outer", est.teacher_bound.n_outer, "estimators");
      est.teacher_bound.mc_samples = get_or(e, "teacher_mc", est.teacher_bound.mc_samples, "estimators");
      est.teacher_bound.opt_steps = get_or(e, "teacher_steps", est.teacher_bound.opt_steps, "estimators");
      est.teacher_bound.learning_rate = get_or(e, "teacher_lr", est.teacher_bound.learning_rate, "estimators");
      est.teacher_bound.mode =
          parse_resample_mode(get_or<std::string>(e, "resample", to_string(est.teacher_bound.mode), "estimators"));
      est.inference_hidden = get_or(e, "inference_hidden", est.inference_hidden, "estimators");
      est.warm_start = get_or(e, "warm_start", est.warm_start, "estimators");
    }
    if (j.contains("sweep")) c.betas = get_or(j.at("sweep"), "betas", c.betas, "sweep");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.teacher.seed = c.seed;
  c.student.seed = c.seed;
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must have the form key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) throw ConfigError("override '" + assignment + "': '" + key + "' is not an object");
    start = dot + 1;
  }
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(c.student.beta >= 0.0, "student.beta must be >= 0");
  require(c.student.epochs >= 0, "student.epochs must be >= 0");
  require(c.student.batch_size > 0, "student.batch_size must be positive");
  require(c.student.bottleneck_dim > 0, "student.bottleneck_dim must be positive");
  require(c.student.optimizer.learning_rate > 0.0, "student.optimizer.learning_rate must be positive");
  require(c.teacher.latent_dim > 0, "teacher.latent_dim must be positive");
  require(c.teacher.epochs >= 0, "teacher.epochs must be >= 0");
  require(c.teacher.batch_size > 0, "teacher.batch_size must be positive");
  require(c.teacher.sigma2 > 0.0, "teacher.sigma2 must be positive");
  require(c.dataset.side >= 8 || c.dataset.source == DatasetSource::idx_file, "dataset.side must be >= 8");
  require(c.dataset.per_class > 0 || c.dataset.source == DatasetSource::idx_file, "dataset.per_class must be positive");
  require(c.dataset.noise >= 0.0, "dataset.noise must be >= 0");
  require(c.dataset.eval_size > 0, "dataset.eval_size must be positive");
  require(c.dataset.eval_split == "heldout" || c.dataset.eval_split == "train",
          "dataset.eval_split must be heldout or train");
  require(c.dataset.downsample >= 1, "dataset.downsample must be >= 1");
  require(c.dataset.source == DatasetSource::synthetic_digits || c.dataset.source == DatasetSource::idx_file,
          "dataset.source must be synthetic-digits or idx-file");
  if (c.dataset.source == DatasetSource::idx_file) {
    require(!c.dataset.idx_images.empty() && !c.dataset.idx_labels.empty(),
            "dataset.idx_images and dataset.idx_labels are required for idx-file");
    require(std::filesystem::exists(c.dataset.idx_images), "dataset.idx_images '" + c.dataset.idx_images + "' does not exist");
    require(std::filesystem::exists(c.dataset.idx_labels), "dataset.idx_labels '" + c.dataset.idx_labels + "' does not exist");
  }
  if (!c.teacher_checkpoint.empty()) {
    require(std::filesystem::exists(c.teacher_checkpoint),
            "teacher.checkpoint '" + c.teacher_checkpoint + "' does not exist");
  }
  require(c.estimators.zy_samples > 0, "estimators.zy_samples must be positive");
  require(c.estimators.teacher_bound.n_outer > 0, "estimators.teacher_outer must be positive");
  require(c.estimators.teacher_bound.mc_samples > 0, "estimators.teacher_mc must be positive");
  require(c.estimators.teacher_bound.opt_steps >= 0, "estimators.teacher_steps must be >= 0");
  require(c.estimators.teacher_bound.learning_rate > 0.0, "estimators.teacher_lr must be positive");
  require(c.output_dir.size() > 0, "output_dir must not be empty");
  for (double b : c.betas) require(b >= 0.0, "sweep.betas entries must be >= 0");
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  RunConfig c = run_config_from_json(j);
  validate(c);
  return c;
}

}  // namespace infoplane
