#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "infoplane/datasets.hpp"
#include "infoplane/distributions.hpp"
#include "infoplane/mlp.hpp"
#include "infoplane/optimizer.hpp"

namespace infoplane {

struct StudentConfig {
  Eigen::Index bottleneck_dim = 40;
  std::vector<Eigen::Index> encoder_hidden{256};
  std::vector<Eigen::Index> decoder_hidden{64};
  Activation activation = Activation::relu;
  int num_classes = 10;
  double beta = 1e-3;
  OptimizerConfig optimizer{};
  int epochs = 40;
  int batch_size = 100;
  /// Multiplies the Xavier limit; small values give a near-uniform decoder.
  double init_gain = 1.0;
  std::uint64_t seed = 0;
};

/// VIB classifier: stochastic encoder p(z | x), decoder q(y | z), and the
/// variational marginal r(z).
class StudentModel {
 public:
  StudentModel() = default;
  StudentModel(const StudentConfig& config, Eigen::Index input_dim);

  Eigen::Index input_dim() const { return encoder.input_dim(); }
  Eigen::Index bottleneck_dim() const { return bottleneck_dim_; }
  int num_classes() const { return static_cast<int>(decoder.output_dim()); }

  /// Encoder (mean, log-variance), one row per input.
  std::pair<Matrix, Matrix> encode(const Matrix& x) const;
  /// Decoder log-probabilities, one row per code.
  Matrix decode_log_probs(const Matrix& z) const;

  std::vector<Matrix*> parameters();
  std::size_t encoder_parameter_count() const { return 2 * encoder.layers().size(); }

  Mlp encoder;  // x -> [mean | log_var]
  Mlp decoder;  // z -> logits
  double beta = 1e-3;
  DiagGaussiand marginal;

 private:
  Eigen::Index bottleneck_dim_ = 0;
};

struct StudentGraph {
  StudentGraph(const StudentModel& model, Tape& tape, bool trainable);
  StudentGraph(const StudentModel& model, std::span<const Tensor> params);

  std::pair<Tensor, Tensor> encode(const Tensor& x) const;
  Tensor decode_log_probs(const Tensor& z) const;

  const StudentModel* model;
  BoundMlp encoder;
  BoundMlp decoder;
};

struct VibTerms {
  double cross_entropy = 0.0;
  double kl = 0.0;
  double loss = 0.0;
};

struct VibGraph {
  Tensor cross_entropy;
  Tensor kl;
  Tensor loss;
};

/// Batch means of -log q(y | z) at one reparameterized z per row and of
/// KL(p(z | x) || r); loss = ce + beta * kl.
VibTerms vib_loss(const StudentModel& student, const Matrix& x, std::span<const int> y, const Matrix& noise);
VibGraph vib_loss(const StudentGraph& student, const Tensor& x, std::span<const int> y, const Tensor& noise);

struct EpochDiagnostics {
  int epoch = 0;
  /// Mean over inputs of sum_i log_var_i of p(z | x).
  double mean_logdet_cov = 0.0;
  /// L2 norm of encoder gradients, averaged over the epoch's steps.
  double encoder_grad_norm = 0.0;
  double train_accuracy = 0.0;
  double eval_accuracy = 0.0;
  double train_kl = 0.0;
  double train_cross_entropy = 0.0;
};

using StudentSnapshot = std::shared_ptr<const StudentModel>;
using EpochHook = std::function<void(const StudentSnapshot&, const EpochDiagnostics&)>;

struct StudentTraining {
  StudentModel model;
  StudentSnapshot initial;
  std::vector<EpochDiagnostics> history;
};

/// Trains with constant learning rate and a seeded shuffle per epoch.
/// `eval` may be null, in which case eval accuracy and covariance use `train`.
StudentTraining train_student(const StudentConfig& config, const LabeledDataset& train, const LabeledDataset* eval,
                              const EpochHook& hook = {});

/// Decoder log-probabilities at the encoder mean.
Matrix classify(const StudentModel& student, const Matrix& x);
Categoricald classify(const StudentModel& student, const Vector& x);
double accuracy(const StudentModel& student, const LabeledDataset& data);

struct EncoderDiagnostics {
  double mean_logdet_cov = 0.0;
  double grad_norm = 0.0;
};

/// Covariance log-determinant over `batch` and the L2 norm of `encoder_grads`.
EncoderDiagnostics encoder_diagnostics(const StudentModel& student, const Matrix& batch,
                                       std::span<const Matrix> encoder_grads);

}  // namespace infoplane
