#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "infoplane/datasets.hpp"
#include "infoplane/mi.hpp"
#include "infoplane/student.hpp"
#include "infoplane/teacher.hpp"

namespace infoplane {

enum class ExperimentKind { zero_info, estimator_compare, ip_trajectory, beta_sweep, train_teacher_only };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct DatasetSpec {
  /// synthetic-digits or idx-file
  DatasetSource source = DatasetSource::synthetic_digits;
  int side = 8;
  int per_class = 100;
  double noise = 0.2;
  std::string idx_images;
  std::string idx_labels;
  /// Block-average factor applied to IDX images.
  int downsample = 1;
  /// Size of the held-out evaluation set used for every per-epoch estimate.
  int eval_size = 1000;
  /// heldout or train
  std::string eval_split = "heldout";
  bool teacher_relabel = true;
};

struct EstimatorSpec {
  bool direct = true;
  bool teacher = true;
  bool zy = true;
  int zy_samples = 8;
  TeacherBoundConfig teacher_bound{};
  std::vector<Eigen::Index> inference_hidden{128};
  bool warm_start = true;
};

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::ip_trajectory;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  DatasetSpec dataset;
  TeacherConfig teacher;
  /// Existing teacher checkpoint to load instead of training.
  std::string teacher_checkpoint;
  StudentConfig student;
  EstimatorSpec estimators;
  std::vector<double> betas{1e-4, 1e-3, 1e-2, 1e-1};
};

/// Fully resolved configuration, every field present.
nlohmann::ordered_json to_json(const RunConfig& config);
/// Missing fields take defaults; unknown keys are a ConfigError.
RunConfig run_config_from_json(const nlohmann::ordered_json& j);

/// Applies `dotted.path=value`; the value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::ordered_json& j, const std::string& assignment);

/// Throws ConfigError describing the first invalid field.
void validate(const RunConfig& config);

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace infoplane
