#include "infoplane/teacher.hpp"

#include <cmath>

namespace infoplane {
namespace {

std::vector<Eigen::Index> layer_sizes(Eigen::Index in, const std::vector<Eigen::Index>& hidden, Eigen::Index out) {
  std::vector<Eigen::Index> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Matrix gaussian_log_var_row(const TeacherModel& t) {
  return Matrix::Constant(1, t.input_dim(), std::log(t.sigma2));
}

}  // namespace

std::string to_string(ObservationModel m) { return m == ObservationModel::bernoulli ? "bernoulli" : "gaussian"; }

ObservationModel parse_observation_model(const std::string& name) {
  if (name == "bernoulli") return ObservationModel::bernoulli;
  if (name == "gaussian") return ObservationModel::gaussian;
  throw ConfigError("unknown observation model '" + name + "'");
}

TeacherModel::TeacherModel(const TeacherConfig& config, Eigen::Index input_dim)
    : observation(config.observation), sigma2(config.sigma2), latent_dim_(config.latent_dim) {
  if (config.latent_dim <= 0) throw ConfigError("teacher latent_dim must be positive");
  if (!(config.sigma2 > 0.0)) throw ConfigError("teacher sigma2 must be positive");
  RandomStream rng(config.seed, "teacher-init");
  std::vector<Eigen::Index> reversed(config.hidden.rbegin(), config.hidden.rend());
  const auto enc = layer_sizes(input_dim, config.hidden, 2 * config.latent_dim);
  const auto dec = layer_sizes(config.latent_dim, reversed, input_dim);
  encoder = Mlp(enc, config.activation, rng);
  decoder = Mlp(dec, config.activation, rng);
}

std::pair<Matrix, Matrix> TeacherModel::posterior(const Matrix& x) const {
  const Matrix out = encoder.forward(x);
  return {out.leftCols(latent_dim_), out.rightCols(latent_dim_)};
}

Matrix TeacherModel::decode_mean(const Matrix& z_v) const {
  const Matrix raw = decoder.forward(z_v);
  return observation == ObservationModel::bernoulli ? sigmoid(raw) : raw;
}

Matrix TeacherModel::reconstruct(const Matrix& x) const { return decode_mean(posterior(x).first); }

std::vector<Matrix*> TeacherModel::parameters() {
  auto p = encoder.parameters();
  for (Matrix* m : decoder.parameters()) p.push_back(m);
  return p;
}

TeacherGraph::TeacherGraph(const TeacherModel& m, Tape& tape, bool trainable)
    : model(&m), encoder(m.encoder, tape, trainable), decoder(m.decoder, tape, trainable) {}

TeacherGraph::TeacherGraph(const TeacherModel& m, std::span<const Tensor> params)
    : model(&m),
      encoder(m.encoder, params.subspan(0, 2 * m.encoder.layers().size())),
      decoder(m.decoder, params.subspan(2 * m.encoder.layers().size())) {}

std::pair<Tensor, Tensor> TeacherGraph::posterior(const Tensor& x) const {
  const Tensor out = encoder.forward(x);
  const Eigen::Index l = model->latent_dim();
  return {slice_cols(out, 0, l), slice_cols(out, l, l)};
}

Tensor TeacherGraph::decode(const Tensor& z_v) const { return decoder.forward(z_v); }

Tensor TeacherGraph::decode_log_prob(const Tensor& z_v, const Tensor& x) const {
  const Tensor raw = decode(z_v);
  if (model->observation == ObservationModel::bernoulli) return bernoulli_log_prob_logits(raw, x);
  const Tensor log_var = x.tape().constant(gaussian_log_var_row(*model));
  return gauss_log_prob(raw, log_var, x);
}

ElboGraph elbo(const TeacherGraph& teacher, const Tensor& x, const Tensor& noise) {
  const auto [mean, log_var] = teacher.posterior(x);
  const Tensor z_v = gauss_sample(mean, log_var, noise);
  const Tensor recon = infoplane::mean(teacher.decode_log_prob(z_v, x));
  const Tensor kl = infoplane::mean(gauss_kl_standard(mean, log_var));
  return {recon, kl, recon - kl};
}

ElboTerms elbo(const TeacherModel& teacher, const Matrix& x, const Matrix& noise) {
  if (x.cols() != teacher.input_dim()) {
    throw DimensionError("elbo: input " + shape_string(x) + " but teacher expects " +
                         std::to_string(teacher.input_dim()) + " columns");
  }
  Tape tape;
  const TeacherGraph graph(teacher, tape, false);
  const ElboGraph g = elbo(graph, tape.constant(x), tape.constant(noise));
  return {g.reconstruction.scalar(), g.kl.scalar(), g.elbo.scalar()};
}

TeacherTraining train_teacher(const TeacherConfig& config, const LabeledDataset& data) {
  data.validate();
  if (config.batch_size <= 0) throw ConfigError("teacher batch_size must be positive");
  TeacherTraining result{TeacherModel(config, data.dim()), 0.0, {}};
  TeacherModel& model = result.model;
  const Eigen::Index n = data.images.rows();
  const Matrix eval_noise = RandomStream(config.seed, "teacher-eval-noise").normal_matrix(n, config.latent_dim);
  result.initial_elbo = elbo(model, data.images, eval_noise).elbo;

  auto params = model.parameters();
  OptimizerState state(config.optimizer, params);
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = RandomStream(config.seed, "teacher-shuffle", static_cast<std::uint64_t>(epoch))
                           .permutation(static_cast<std::size_t>(n));
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size), ++step) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      try {
        Tape tape;
        const TeacherGraph graph(model, tape, true);
        const Tensor x = tape.constant(data.images(rows, Eigen::all));
        const Tensor noise = tape.constant(
            RandomStream(config.seed, "teacher-noise", static_cast<std::uint64_t>(step))
                .normal_matrix(static_cast<Eigen::Index>(rows.size()), config.latent_dim));
        const ElboGraph g = elbo(graph, x, noise);
        const Gradients grads = backward(neg(g.elbo));
        std::vector<Matrix> gs;
        for (const Tensor& p : graph.encoder.parameters()) gs.push_back(grads[p]);
        for (const Tensor& p : graph.decoder.parameters()) gs.push_back(grads[p]);
        optimizer_step(params, gs, state);
      } catch (const NumericError& e) {
        throw NumericError("train_teacher: epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                           ": " + e.what());
      }
    }
    result.elbo_curve.push_back(elbo(model, data.images, eval_noise).elbo);
  }
  return result;
}

Matrix sample_observation(const TeacherModel& teacher, const Matrix& z_v, RandomStream& rng) {
  const Matrix mean = teacher.decode_mean(z_v);
  if (teacher.observation == ObservationModel::bernoulli) {
    const Matrix u = rng.uniform_matrix(mean.rows(), mean.cols());
    return (u.array() < mean.array()).cast<double>();
  }
  return mean + std::sqrt(teacher.sigma2) * rng.normal_matrix(mean.rows(), mean.cols());
}

TeacherSamples teacher_sample(const TeacherModel& teacher, Eigen::Index n, std::uint64_t seed) {
  RandomStream latent(seed, "teacher-sample-latent");
  RandomStream obs(seed, "teacher-sample-x");
  TeacherSamples s;
  s.z_v = latent.normal_matrix(n, teacher.latent_dim());
  s.x = sample_observation(teacher, s.z_v, obs);
  return s;
}

Vector teacher_decode_logprob(const TeacherModel& teacher, const Matrix& z_v, const Matrix& x) {
  if (z_v.cols() != teacher.latent_dim() || x.cols() != teacher.input_dim() || z_v.rows() != x.rows()) {
    throw DimensionError("teacher_decode_logprob: z_v " + shape_string(z_v) + ", x " + shape_string(x) +
                         " for teacher with latent " + std::to_string(teacher.latent_dim()) + " and input " +
                         std::to_string(teacher.input_dim()));
  }
  const Matrix mean = teacher.decode_mean(z_v);
  Vector out(x.rows());
  if (teacher.observation == ObservationModel::bernoulli) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = bernoulli_log_prob(mean.row(i), x.row(i));
  } else {
    const DiagGaussiand noise_model(Vector::Zero(x.cols()), Vector::Constant(x.cols(), std::log(teacher.sigma2)));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out(i) = gauss_log_prob(noise_model, (x.row(i) - mean.row(i)).transpose());
    }
  }
  return out;
}

double teacher_decode_logprob(const TeacherModel& teacher, const Vector& z_v, const Vector& x) {
  return teacher_decode_logprob(teacher, Matrix(z_v.transpose()), Matrix(x.transpose()))(0);
}

}  // namespace infoplane
