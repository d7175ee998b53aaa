#include "infoplane/student.hpp"

#include <cmath>

#include "infoplane/random.hpp"

namespace infoplane {
namespace {

std::vector<Eigen::Index> layer_sizes(Eigen::Index in, const std::vector<Eigen::Index>& hidden, Eigen::Index out) {
  std::vector<Eigen::Index> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

StudentModel::StudentModel(const StudentConfig& config, Eigen::Index input_dim)
    : beta(config.beta),
      marginal(DiagGaussiand::standard(config.bottleneck_dim)),
      bottleneck_dim_(config.bottleneck_dim) {
  if (config.bottleneck_dim <= 0) throw ConfigError("student bottleneck_dim must be positive");
  if (config.beta < 0.0) throw ConfigError("student beta must be non-negative");
  if (config.num_classes < 2) throw ConfigError("student num_classes must be at least 2");
  RandomStream rng(config.seed, "student-init");
  encoder = Mlp(layer_sizes(input_dim, config.encoder_hidden, 2 * config.bottleneck_dim), config.activation, rng,
                config.init_gain);
  decoder = Mlp(layer_sizes(config.bottleneck_dim, config.decoder_hidden, config.num_classes), config.activation,
                rng, config.init_gain);
}

std::pair<Matrix, Matrix> StudentModel::encode(const Matrix& x) const {
  const Matrix out = encoder.forward(x);
  return {out.leftCols(bottleneck_dim_), out.rightCols(bottleneck_dim_)};
}

Matrix StudentModel::decode_log_probs(const Matrix& z) const {
  Matrix logits = decoder.forward(z);
  const Vector m = logits.rowwise().maxCoeff();
  logits.colwise() -= m;
  const Vector lse = logits.array().exp().rowwise().sum().log().matrix();
  logits.colwise() -= lse;
  return logits;
}

std::vector<Matrix*> StudentModel::parameters() {
  auto p = encoder.parameters();
  for (Matrix* m : decoder.parameters()) p.push_back(m);
  return p;
}

StudentGraph::StudentGraph(const StudentModel& m, Tape& tape, bool trainable)
    : model(&m), encoder(m.encoder, tape, trainable), decoder(m.decoder, tape, trainable) {}

StudentGraph::StudentGraph(const StudentModel& m, std::span<const Tensor> params)
    : model(&m),
      encoder(m.encoder, params.subspan(0, m.encoder_parameter_count())),
      decoder(m.decoder, params.subspan(m.encoder_parameter_count())) {}

std::pair<Tensor, Tensor> StudentGraph::encode(const Tensor& x) const {
  const Tensor out = encoder.forward(x);
  const Eigen::Index k = model->bottleneck_dim();
  return {slice_cols(out, 0, k), slice_cols(out, k, k)};
}

Tensor StudentGraph::decode_log_probs(const Tensor& z) const { return log_softmax(decoder.forward(z)); }

VibGraph vib_loss(const StudentGraph& student, const Tensor& x, std::span<const int> y, const Tensor& noise) {
  if (x.rows() == 0) throw ContractError("vib_loss: empty batch");
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw DimensionError("vib_loss: " + std::to_string(y.size()) + " labels for " + std::to_string(x.rows()) +
                         " inputs");
  }
  Tape& tape = x.tape();
  const auto [mean, log_var] = student.encode(x);
  const Tensor z = gauss_sample(mean, log_var, noise);
  const Tensor ce = neg(infoplane::mean(pick_per_row(student.decode_log_probs(z), y)));
  const DiagGaussiand& r = student.model->marginal;
  const Tensor r_mean = tape.constant(Matrix(r.mean.transpose()));
  const Tensor r_log_var = tape.constant(Matrix(r.log_var.transpose()));
  const Tensor kl = infoplane::mean(gauss_kl(mean, log_var, r_mean, r_log_var));
  return {ce, kl, ce + scale(kl, student.model->beta)};
}

VibTerms vib_loss(const StudentModel& student, const Matrix& x, std::span<const int> y, const Matrix& noise) {
  Tape tape;
  const StudentGraph graph(student, tape, false);
  const VibGraph g = vib_loss(graph, tape.constant(x), y, tape.constant(noise));
  return {g.cross_entropy.scalar(), g.kl.scalar(), g.loss.scalar()};
}

Matrix classify(const StudentModel& student, const Matrix& x) {
  return student.decode_log_probs(student.encode(x).first);
}

Categoricald classify(const StudentModel& student, const Vector& x) {
  return {classify(student, Matrix(x.transpose())).row(0).transpose()};
}

double accuracy(const StudentModel& student, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  const Matrix lp = classify(student, data.images);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    Eigen::Index arg = 0;
    lp.row(i).maxCoeff(&arg);
    if (arg == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

EncoderDiagnostics encoder_diagnostics(const StudentModel& student, const Matrix& batch,
                                       std::span<const Matrix> encoder_grads) {
  EncoderDiagnostics d;
  if (batch.rows() > 0) d.mean_logdet_cov = student.encode(batch).second.rowwise().sum().mean();
  double sq = 0.0;
  for (const Matrix& g : encoder_grads) sq += g.squaredNorm();
  d.grad_norm = std::sqrt(sq);
  return d;
}

StudentTraining train_student(const StudentConfig& config, const LabeledDataset& train, const LabeledDataset* eval,
                              const EpochHook& hook) {
  train.validate();
  if (config.batch_size <= 0) throw ConfigError("student batch_size must be positive");
  if (train.num_classes != config.num_classes) {
    throw DimensionError("train_student: dataset has " + std::to_string(train.num_classes) +
                         " classes, student decoder " + std::to_string(config.num_classes));
  }
  StudentTraining result{StudentModel(config, train.dim()), nullptr, {}};
  StudentModel& model = result.model;
  result.initial = std::make_shared<const StudentModel>(model);
  const LabeledDataset& held_out = eval != nullptr ? *eval : train;

  auto params = model.parameters();
  OptimizerState state(config.optimizer, params);
  const auto n = static_cast<std::size_t>(train.size());
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = RandomStream(config.seed, "student-shuffle", static_cast<std::uint64_t>(epoch)).permutation(n);
    double grad_norm_sum = 0.0, kl_sum = 0.0, ce_sum = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size), ++step, ++steps) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> labels;
      labels.reserve(rows.size());
      for (Eigen::Index r : rows) labels.push_back(train.labels[static_cast<std::size_t>(r)]);
      try {
        Tape tape;
        const StudentGraph graph(model, tape, true);
        const Tensor x = tape.constant(train.images(rows, Eigen::all));
        const Tensor noise = tape.constant(
            RandomStream(config.seed, "student-noise", static_cast<std::uint64_t>(step))
                .normal_matrix(static_cast<Eigen::Index>(rows.size()), config.bottleneck_dim));
        const VibGraph g = vib_loss(graph, x, labels, noise);
        const Gradients grads = backward(g.loss);
        std::vector<Matrix> gs;
        for (const Tensor& p : graph.encoder.parameters()) gs.push_back(grads[p]);
        for (const Tensor& p : graph.decoder.parameters()) gs.push_back(grads[p]);
        const auto enc_grads = std::span<const Matrix>(gs).subspan(0, model.encoder_parameter_count());
        grad_norm_sum += encoder_diagnostics(model, Matrix(), enc_grads).grad_norm;
        kl_sum += g.kl.scalar();
        ce_sum += g.cross_entropy.scalar();
        optimizer_step(params, gs, state);
      } catch (const NumericError& e) {
        throw NumericError("train_student: epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                           ": " + e.what());
      }
    }
    EpochDiagnostics d;
    d.epoch = epoch;
    d.encoder_grad_norm = steps > 0 ? grad_norm_sum / steps : 0.0;
    d.train_kl = steps > 0 ? kl_sum / steps : 0.0;
    d.train_cross_entropy = steps > 0 ? ce_sum / steps : 0.0;
    d.mean_logdet_cov = encoder_diagnostics(model, held_out.images, {}).mean_logdet_cov;
    d.train_accuracy = accuracy(model, train);
    d.eval_accuracy = accuracy(model, held_out);
    result.history.push_back(d);
    if (hook) hook(std::make_shared<const StudentModel>(model), d);
  }
  return result;
}

}  // namespace infoplane
