#pragma once

#include <cstdint>
#include <vector>

#include "infoplane/datasets.hpp"
#include "infoplane/distributions.hpp"
#include "infoplane/mlp.hpp"
#include "infoplane/optimizer.hpp"

namespace infoplane {

enum class ObservationModel { bernoulli, gaussian };

std::string to_string(ObservationModel m);
ObservationModel parse_observation_model(const std::string& name);

struct TeacherConfig {
  Eigen::Index latent_dim = 20;
  std::vector<Eigen::Index> hidden{128};
  Activation activation = Activation::relu;
  ObservationModel observation = ObservationModel::bernoulli;
  double sigma2 = 0.1;  // Gaussian observation variance
  int epochs = 100;
  int batch_size = 64;
  OptimizerConfig optimizer{};
  std::uint64_t seed = 0;
};

/// VAE with amortized posterior q(z_v | x), decoder p(x | z_v) and a fixed
/// N(0, I) prior over z_v.
class TeacherModel {
 public:
  TeacherModel() = default;
  TeacherModel(const TeacherConfig& config, Eigen::Index input_dim);

  Eigen::Index input_dim() const { return encoder.input_dim(); }
  Eigen::Index latent_dim() const { return latent_dim_; }
  DiagGaussiand prior() const { return DiagGaussiand::standard(latent_dim_); }

  /// Posterior parameters, one row per input.
  std::pair<Matrix, Matrix> posterior(const Matrix& x) const;
  /// Decoder mean: Bernoulli probabilities or Gaussian means.
  Matrix decode_mean(const Matrix& z_v) const;
  /// Decoder mean at the posterior mean.
  Matrix reconstruct(const Matrix& x) const;

  std::vector<Matrix*> parameters();

  Mlp encoder;  // x -> [mean | log_var]
  Mlp decoder;  // z_v -> logits (Bernoulli) or means (Gaussian)
  ObservationModel observation = ObservationModel::bernoulli;
  double sigma2 = 0.1;

 private:
  Eigen::Index latent_dim_ = 0;
};

/// Teacher parameters bound onto a tape.
struct TeacherGraph {
  TeacherGraph(const TeacherModel& model, Tape& tape, bool trainable);
  TeacherGraph(const TeacherModel& model, std::span<const Tensor> params);

  std::pair<Tensor, Tensor> posterior(const Tensor& x) const;
  /// Raw decoder output (logits or means).
  Tensor decode(const Tensor& z_v) const;
  /// Per-row log p(x | z_v).
  Tensor decode_log_prob(const Tensor& z_v, const Tensor& x) const;

  const TeacherModel* model;
  BoundMlp encoder;
  BoundMlp decoder;
};

struct ElboTerms {
  double reconstruction = 0.0;
  double kl = 0.0;
  double elbo = 0.0;
};

struct ElboGraph {
  Tensor reconstruction;
  Tensor kl;
  Tensor elbo;
};

/// Batch-mean ELBO with one reparameterized sample per row from `noise`.
ElboTerms elbo(const TeacherModel& teacher, const Matrix& x, const Matrix& noise);
ElboGraph elbo(const TeacherGraph& teacher, const Tensor& x, const Tensor& noise);

struct TeacherTraining {
  TeacherModel model;
  double initial_elbo = 0.0;
  /// Full-data ELBO after each epoch, fixed evaluation noise.
  std::vector<double> elbo_curve;
};

TeacherTraining train_teacher(const TeacherConfig& config, const LabeledDataset& data);

struct TeacherSamples {
  Matrix z_v;
  Matrix x;
};

/// z_v ~ N(0, I), x ~ p(x | z_v).
TeacherSamples teacher_sample(const TeacherModel& teacher, Eigen::Index n, std::uint64_t seed);
/// Draws x ~ p(x | z_v) for given latents using `rng`.
Matrix sample_observation(const TeacherModel& teacher, const Matrix& z_v, RandomStream& rng);

double teacher_decode_logprob(const TeacherModel& teacher, const Vector& z_v, const Vector& x);
/// Row-wise log p(x_i | z_v_i).
Vector teacher_decode_logprob(const TeacherModel& teacher, const Matrix& z_v, const Matrix& x);

}  // namespace infoplane
