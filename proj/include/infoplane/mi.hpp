#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "infoplane/datasets.hpp"
#include "infoplane/student.hpp"
#include "infoplane/teacher.hpp"

namespace infoplane {

enum class EstimateKind { exact, binned, zy_lower, xz_direct_upper, xz_teacher_upper, combined_min };

std::string to_string(EstimateKind kind);

/// Mutual-information estimate in nats.
struct MIEstimate {
  double value = 0.0;
  EstimateKind kind = EstimateKind::exact;
  std::size_t sample_count = 0;
  std::optional<double> std_error;
};

/// Sum p(x,y) ln[p(x,y) / (p(x) p(y))] with 0 ln 0 = 0.
MIEstimate mi_discrete_exact(const DiscreteJoint& joint);

/// Plug-in entropy of the label frequencies.
double label_entropy(const LabeledDataset& data);
double label_entropy(std::span<const int> labels, int num_classes);

/// H(Y) + E log q(y | z), averaged over data and `z_samples` codes per datum.
MIEstimate mi_zy_lower(const StudentModel& student, const LabeledDataset& data, int z_samples, std::uint64_t seed);

/// Mean over inputs of KL(p(z | x) || r).
MIEstimate mi_xz_direct_upper(const StudentModel& student, const LabeledDataset& data);

/// Equal-width bins per coordinate over the observed range; plug-in MI of the
/// binned joint. Rows of `x` and `z` are paired samples.
MIEstimate mi_binned(const Matrix& x, const Matrix& z, int bins = 30);

struct CombinedEstimate {
  MIEstimate estimate;
  /// One input was non-finite and was dropped.
  bool degraded = false;
  /// Both inputs had the same value.
  bool tie = false;
};

/// Smaller of two I(X;Z) upper bounds. Throws ContractError if neither is finite.
CombinedEstimate combine_estimates(const MIEstimate& direct, const MIEstimate& teacher);

/// q(z_v | z): student code to a Gaussian over teacher latents.
class InferenceNet {
 public:
  InferenceNet() = default;
  InferenceNet(Eigen::Index code_dim, Eigen::Index latent_dim, const std::vector<Eigen::Index>& hidden,
               Activation activation, std::uint64_t seed);

  Eigen::Index code_dim() const { return net.input_dim(); }
  Eigen::Index latent_dim() const { return net.output_dim() / 2; }
  std::pair<Matrix, Matrix> posterior(const Matrix& z) const;
  /// Zero final layer: output is exactly N(0, I) for every z.
  void pin_to_prior();

  Mlp net;  // z -> [mean | log_var]
};

/// How x' ~ p(x' | z_v') enters the objective.
enum class ResampleMode {
  /// Actual draws; Bernoulli pixels use a score-function gradient.
  sample,
  /// Decoder mean in place of a draw.
  mean,
};

std::string to_string(ResampleMode mode);
ResampleMode parse_resample_mode(const std::string& name);

struct TeacherBoundGraph {
  /// Per-code mean over draws of log p(z | x') minus KL(q(z_v|z) || N(0, I)), rows x 1.
  Tensor objective;
  /// Scalar whose gradient estimates the gradient of mean(objective).
  Tensor surrogate;
};

/// Builds the log p(z) lower bound for each row of `z`. Teacher and student
/// are frozen constants; only `inf_net` parameters may be leaves.
TeacherBoundGraph teacher_bound_graph(const StudentModel& student, const TeacherModel& teacher,
                                      const BoundMlp& inf_net, const Tensor& z, int mc_samples,
                                      ResampleMode mode, RandomStream& rng);

/// Per-code lower bound on log p(z), evaluated without a gradient.
Vector teacher_bound_objective(const StudentModel& student, const TeacherModel& teacher, const InferenceNet& inf_net,
                               const Matrix& z, int mc_samples, std::uint64_t seed,
                               ResampleMode mode = ResampleMode::sample);

struct TeacherBoundConfig {
  int n_outer = 512;
  int mc_samples = 8;
  int opt_steps = 500;
  double learning_rate = 1e-3;
  ResampleMode mode = ResampleMode::sample;
};

struct TeacherBoundResult {
  MIEstimate estimate;
  /// Bound value at each inner step, before that step's update.
  std::vector<double> step_estimates;
  /// Per-code objective values of the final evaluation.
  Vector final_objective;
};

/// Teacher-student upper bound on I(X;Z). Trains `inf_net` in place.
TeacherBoundResult mi_xz_teacher_upper(const StudentModel& student, const TeacherModel& teacher,
                                       InferenceNet& inf_net, const TeacherBoundConfig& config, std::uint64_t seed);

}  // namespace infoplane
