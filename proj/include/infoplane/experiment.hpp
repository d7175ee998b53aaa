#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "infoplane/config.hpp"

namespace infoplane {

/// One information-plane record per student epoch. MI values in nats; a
/// disabled estimator is NaN.
struct InfoPlanePoint {
  int epoch = 0;
  double i_xz_direct = 0.0;
  double i_xz_teacher = 0.0;
  double i_xz_min = 0.0;
  double i_zy_lower = 0.0;
  double h_y = 0.0;
  double accuracy = 0.0;
  double mean_logdet_cov = 0.0;
  double grad_norm = 0.0;
  double beta = 0.0;
  std::string optimizer;
  std::uint64_t seed = 0;
};

inline constexpr const char* kTrajectoryHeader =
    "epoch,i_xz_direct,i_xz_teacher,i_xz_min,i_zy_lower,h_y,accuracy,mean_logdet_cov,grad_norm,beta,optimizer,seed";

std::string format_csv_row(const InfoPlanePoint& p);
/// Parses a trajectory CSV; FormatError carries the 1-based line number.
std::vector<InfoPlanePoint> read_trajectory(const std::filesystem::path& csv_path);

/// Teacher plus the train / evaluation data the student sees.
struct PreparedData {
  TeacherModel teacher;
  std::vector<double> teacher_elbo_curve;
  LabeledDataset train;
  LabeledDataset eval;
};

/// Builds datasets and trains (or loads) the teacher for `config`.
PreparedData prepare_data(const RunConfig& config);

struct RunResult {
  std::filesystem::path directory;
  std::vector<InfoPlanePoint> trajectory;
};

/// Trains the student with per-epoch estimation and writes trajectory.csv,
/// config.json, checkpoints and plots into config.output_dir.
RunResult run_experiment(const RunConfig& config);
/// Same, reusing already prepared data.
RunResult run_experiment(const RunConfig& config, const PreparedData& data);

struct SweepRow {
  double beta = 0.0;
  double final_i_xz_min = 0.0;
  double max_i_xz_min = 0.0;
  double final_accuracy = 0.0;
};

struct SweepResult {
  std::vector<RunResult> runs;
  std::vector<SweepRow> summary;
};

/// One run per beta with a shared seed and teacher; writes sweep_summary.csv.
SweepResult run_beta_sweep(const RunConfig& config, const std::vector<double>& betas);

struct CompareReport {
  /// First epoch where the direct bound is below the teacher bound.
  std::optional<int> crossover_epoch;
  int epochs = 0;
  int direct_lower_epochs = 0;
  bool both_nonnegative = true;
};

CompareReport compare_trajectory(const std::vector<InfoPlanePoint>& trajectory);
/// Runs with both bounds enabled and writes compare_report.json.
std::pair<RunResult, CompareReport> run_estimator_compare(const RunConfig& config);
void write_compare_report(const CompareReport& report, const std::filesystem::path& path);

/// Trains the teacher only; writes teacher.json/.bin and teacher_elbo.csv.
std::filesystem::path run_train_teacher(const RunConfig& config);

/// info_plane.svg, mi_vs_epoch.svg and diagnostics.svg from trajectory.csv.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir);

}  // namespace infoplane
