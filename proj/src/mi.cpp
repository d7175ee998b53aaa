#include "infoplane/mi.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace infoplane {
namespace {

struct MeanAndError {
  double mean;
  double std_error;
};

MeanAndError mean_and_error(const Vector& v) {
  const double n = static_cast<double>(v.size());
  const double m = v.mean();
  if (v.size() < 2) return {m, 0.0};
  const double var = (v.array() - m).square().sum() / (n - 1.0);
  return {m, std::sqrt(var / n)};
}

std::vector<int> bin_rows(const Matrix& m, int bins) {
  std::vector<std::vector<int>> codes(static_cast<std::size_t>(m.rows()), std::vector<int>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double lo = m.col(c).minCoeff();
    const double hi = m.col(c).maxCoeff();
    const double width = (hi - lo) / bins;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      int b = 0;
      if (width > 0.0) b = std::min(bins - 1, static_cast<int>(std::floor((m(r, c) - lo) / width)));
      codes[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = b;
    }
  }
  std::map<std::vector<int>, int> symbols;
  std::vector<int> out;
  out.reserve(codes.size());
  for (const auto& code : codes) {
    auto [it, inserted] = symbols.try_emplace(code, static_cast<int>(symbols.size()));
    out.push_back(it->second);
  }
  return out;
}

std::vector<Eigen::Index> repeat_rows(Eigen::Index n, int times) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(n * times));
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < times; ++j) idx.push_back(i);
  return idx;
}

}  // namespace

std::string to_string(EstimateKind kind) {
  switch (kind) {
    case EstimateKind::exact: return "exact";
    case EstimateKind::binned: return "binned";
    case EstimateKind::zy_lower: return "zy-lower";
    case EstimateKind::xz_direct_upper: return "xz-direct-upper";
    case EstimateKind::xz_teacher_upper: return "xz-teacher-upper";
    case EstimateKind::combined_min: return "combined-min";
  }
  return "exact";
}

std::string to_string(ResampleMode mode) { return mode == ResampleMode::sample ? "sample" : "mean"; }

ResampleMode parse_resample_mode(const std::string& name) {
  if (name == "sample") return ResampleMode::sample;
  if (name == "mean") return ResampleMode::mean;
  throw ConfigError("unknown resample mode '" + name + "' (expected sample or mean)");
}

MIEstimate mi_discrete_exact(const DiscreteJoint& joint) {
  joint.validate();
  const Vector px = joint.marginal_x();
  const RowVector py = joint.marginal_y();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint.table.rows(); ++i) {
    for (Eigen::Index j = 0; j < joint.table.cols(); ++j) {
      const double p = joint.table(i, j);
      if (p > 0.0) mi += p * std::log(p / (px(i) * py(j)));
    }
  }
  // Rounding can leave a tiny negative total for independent tables.
  return {std::max(0.0, mi), EstimateKind::exact, 0, std::nullopt};
}

double label_entropy(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw ContractError("label_entropy: no labels");
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ContractError("label_entropy: label out of range");
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  return h;
}

double label_entropy(const LabeledDataset& data) { return label_entropy(data.labels, data.num_classes); }

MIEstimate mi_zy_lower(const StudentModel& student, const LabeledDataset& data, int z_samples, std::uint64_t seed) {
  if (z_samples <= 0) throw ContractError("mi_zy_lower: z_samples must be positive");
  if (data.num_classes != student.num_classes()) {
    throw DimensionError("mi_zy_lower: dataset has " + std::to_string(data.num_classes) + " classes, decoder " +
                         std::to_string(student.num_classes()));
  }
  const auto [mean, log_var] = student.encode(data.images);
  const Matrix sd = (0.5 * log_var.array()).exp();
  const auto n = static_cast<Eigen::Index>(data.size());
  Vector per_datum = Vector::Zero(n);
  for (int s = 0; s < z_samples; ++s) {
    const Matrix noise = RandomStream(seed, "zy-noise", static_cast<std::uint64_t>(s)).normal_matrix(n, mean.cols());
    const Matrix z = mean.array() + sd.array() * noise.array();
    const Matrix lp = student.decode_log_probs(z);
    for (Eigen::Index i = 0; i < n; ++i) per_datum(i) += lp(i, data.labels[static_cast<std::size_t>(i)]);
  }
  per_datum /= z_samples;
  const auto [m, se] = mean_and_error(per_datum);
  return {label_entropy(data) + m, EstimateKind::zy_lower, data.size() * static_cast<std::size_t>(z_samples), se};
}

MIEstimate mi_xz_direct_upper(const StudentModel& student, const LabeledDataset& data) {
  if (data.size() == 0) throw ContractError("mi_xz_direct_upper: empty dataset");
  const DiagGaussiand& r = student.marginal;
  if (r.dim() != student.bottleneck_dim()) {
    throw DimensionError("mi_xz_direct_upper: marginal has dimension " + std::to_string(r.dim()) +
                         ", bottleneck " + std::to_string(student.bottleneck_dim()));
  }
  const auto [mean, log_var] = student.encode(data.images);
  Vector kl(mean.rows());
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    kl(i) = gauss_kl(DiagGaussiand(mean.row(i).transpose(), log_var.row(i).transpose()), r);
  }
  const auto [m, se] = mean_and_error(kl);
  return {m, EstimateKind::xz_direct_upper, data.size(), se};
}

MIEstimate mi_binned(const Matrix& x, const Matrix& z, int bins) {
  if (x.rows() == 0 || z.rows() == 0) throw ContractError("mi_binned: empty samples");
  if (x.rows() != z.rows()) {
    throw DimensionError("mi_binned: " + std::to_string(x.rows()) + " x-samples vs " + std::to_string(z.rows()) +
                         " z-samples");
  }
  if (bins < 2) throw ContractError("mi_binned: need at least 2 bins");
  const auto xs = bin_rows(x, bins);
  const auto zs = bin_rows(z, bins);
  MIEstimate e = mi_discrete_exact(empirical_joint(xs, zs));
  e.kind = EstimateKind::binned;
  e.sample_count = static_cast<std::size_t>(x.rows());
  return e;
}

CombinedEstimate combine_estimates(const MIEstimate& direct, const MIEstimate& teacher) {
  const bool d_ok = std::isfinite(direct.value);
  const bool t_ok = std::isfinite(teacher.value);
  if (!d_ok && !t_ok) throw ContractError("combine_estimates: both estimates are non-finite");
  CombinedEstimate out;
  out.degraded = !(d_ok && t_ok);
  if (!t_ok || (d_ok && direct.value <= teacher.value)) {
    out.estimate = direct;
  } else {
    out.estimate = teacher;
  }
  out.tie = d_ok && t_ok && direct.value == teacher.value;
  out.estimate.kind = EstimateKind::combined_min;
  return out;
}

InferenceNet::InferenceNet(Eigen::Index code_dim, Eigen::Index latent_dim, const std::vector<Eigen::Index>& hidden,
                           Activation activation, std::uint64_t seed) {
  std::vector<Eigen::Index> sizes{code_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2 * latent_dim);
  RandomStream rng(seed, "inference-net-init");
  net = Mlp(sizes, activation, rng);
}

std::pair<Matrix, Matrix> InferenceNet::posterior(const Matrix& z) const {
  const Matrix out = net.forward(z);
  const Eigen::Index l = latent_dim();
  return {out.leftCols(l), out.rightCols(l)};
}

void InferenceNet::pin_to_prior() {
  Dense& last = net.layers().back();
  last.weight.setZero();
  last.bias.setZero();
}

TeacherBoundGraph teacher_bound_graph(const StudentModel& student, const TeacherModel& teacher,
                                      const BoundMlp& inf_net, const Tensor& z, int mc_samples,
                                      ResampleMode mode, RandomStream& rng) {
  if (mc_samples <= 0) throw ContractError("teacher bound: mc_samples must be positive");
  if (z.cols() != student.bottleneck_dim()) {
    throw DimensionError("teacher bound: codes " + shape_string(z.value()) + " but student bottleneck is " +
                         std::to_string(student.bottleneck_dim()));
  }
  if (teacher.input_dim() != student.input_dim()) {
    throw DimensionError("teacher bound: teacher emits " + std::to_string(teacher.input_dim()) +
                         " pixels, student reads " + std::to_string(student.input_dim()));
  }
  Tape& tape = z.tape();
  const Eigen::Index n = z.rows();
  const Eigen::Index latent = teacher.latent_dim();

  const Tensor q_out = inf_net.forward(z);
  if (q_out.cols() != 2 * latent) {
    throw DimensionError("teacher bound: inference net emits " + std::to_string(q_out.cols()) +
                         " columns, teacher latent needs " + std::to_string(2 * latent));
  }
  const Tensor q_mean = slice_cols(q_out, 0, latent);
  const Tensor q_log_var = slice_cols(q_out, latent, latent);
  const auto idx = repeat_rows(n, mc_samples);
  const Tensor eps = tape.constant(rng.normal_matrix(n * mc_samples, latent));
  const Tensor z_v = gauss_sample(gather_rows(q_mean, idx), gather_rows(q_log_var, idx), eps);

  const BoundMlp decoder(teacher.decoder, tape, false);
  const Tensor raw = decoder.forward(z_v);
  Tensor x_prime;
  std::optional<Tensor> score;
  if (teacher.observation == ObservationModel::bernoulli) {
    if (mode == ResampleMode::sample) {
      const Matrix probs = raw.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      const Matrix u = rng.uniform_matrix(probs.rows(), probs.cols());
      x_prime = tape.constant((u.array() < probs.array()).cast<double>().matrix());
      score = bernoulli_log_prob_logits(raw, x_prime);
    } else {
      x_prime = sigmoid(raw);
    }
  } else {
    if (mode == ResampleMode::sample) {
      x_prime = raw + tape.constant(std::sqrt(teacher.sigma2) * rng.normal_matrix(raw.rows(), raw.cols()));
    } else {
      x_prime = raw;
    }
  }

  const BoundMlp encoder(student.encoder, tape, false);
  const Tensor enc = encoder.forward(x_prime);
  const Eigen::Index k = student.bottleneck_dim();
  const Tensor log_p = gauss_log_prob(slice_cols(enc, 0, k), slice_cols(enc, k, k), gather_rows(z, idx));
  const Tensor mean_log_p = scale(row_sum(reshape(log_p, n, mc_samples)), 1.0 / mc_samples);
  const Tensor objective = mean_log_p - gauss_kl_standard(q_mean, q_log_var);

  Tensor surrogate = mean(objective);
  if (score) {
    // Score-function term for the discrete draw, leave-one-out baseline.
    const Matrix lp = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        log_p.value().data(), n, mc_samples);
    Matrix centered(n * mc_samples, 1);
    const double global = lp.mean();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double row_total = lp.row(i).sum();
      for (int j = 0; j < mc_samples; ++j) {
        const double baseline = mc_samples > 1 ? (row_total - lp(i, j)) / (mc_samples - 1) : global;
        centered(i * mc_samples + j, 0) = lp(i, j) - baseline;
      }
    }
    surrogate = surrogate + mean(tape.constant(centered) * *score);
  }
  return {objective, surrogate};
}

Vector teacher_bound_objective(const StudentModel& student, const TeacherModel& teacher, const InferenceNet& inf_net,
                               const Matrix& z, int mc_samples, std::uint64_t seed, ResampleMode mode) {
  Tape tape;
  const BoundMlp q(inf_net.net, tape, false);
  RandomStream rng(seed, "teacher-bound-objective");
  const TeacherBoundGraph g = teacher_bound_graph(student, teacher, q, tape.constant(z), mc_samples, mode, rng);
  return g.objective.value().col(0);
}

TeacherBoundResult mi_xz_teacher_upper(const StudentModel& student, const TeacherModel& teacher,
                                       InferenceNet& inf_net, const TeacherBoundConfig& config, std::uint64_t seed) {
  if (config.n_outer <= 0) throw ContractError("mi_xz_teacher_upper: n_outer must be positive");
  if (config.opt_steps < 0) throw ContractError("mi_xz_teacher_upper: opt_steps must be non-negative");
  if (inf_net.code_dim() != student.bottleneck_dim() || inf_net.latent_dim() != teacher.latent_dim()) {
    throw DimensionError("mi_xz_teacher_upper: inference net maps " + std::to_string(inf_net.code_dim()) + " -> " +
                         std::to_string(inf_net.latent_dim()) + ", need " +
                         std::to_string(student.bottleneck_dim()) + " -> " + std::to_string(teacher.latent_dim()));
  }
  // Steps 1-3: teacher draws, student encoding, one code per draw.
  const TeacherSamples draws = teacher_sample(teacher, config.n_outer, seed);
  const auto [mean, log_var] = student.encode(draws.x);
  const Matrix noise = RandomStream(seed, "teacher-bound-codes").normal_matrix(mean.rows(), mean.cols());
  const Matrix z = mean.array() + (0.5 * log_var.array()).exp() * noise.array();
  const Vector cond_entropy = (0.5 * (1.0 + 2.0 * kHalfLog2Pi + log_var.array())).rowwise().sum();
  const double neg_cond_entropy = -cond_entropy.mean();

  TeacherBoundResult result;
  auto params = inf_net.net.parameters();
  OptimizerState state(OptimizerConfig{OptimizerKind::adam, config.learning_rate}, params);
  for (int step = 0; step < config.opt_steps; ++step) {
    try {
      Tape tape;
      const BoundMlp q(inf_net.net, tape, true);
      RandomStream rng(seed, "teacher-bound-inner", static_cast<std::uint64_t>(step));
      const TeacherBoundGraph g =
          teacher_bound_graph(student, teacher, q, tape.constant(z), config.mc_samples, config.mode, rng);
      result.step_estimates.push_back(neg_cond_entropy - g.objective.value().mean());
      // Maximize the bound on log p(z), i.e. minimize the I(X;Z) estimate.
      const Gradients grads = backward(neg(g.surrogate));
      std::vector<Matrix> gs;
      for (const Tensor& p : q.parameters()) gs.push_back(grads[p]);
      optimizer_step(params, gs, state);
    } catch (const NumericError& e) {
      throw NumericError("mi_xz_teacher_upper: inner step " + std::to_string(step) + ": " + e.what());
    }
  }
  // Step 7: evaluate the bound with fresh draws.
  try {
    result.final_objective = teacher_bound_objective(student, teacher, inf_net, z, config.mc_samples,
                                                     mix64(seed ^ 0xF1A1ULL), config.mode);
  } catch (const NumericError& e) {
    throw NumericError("mi_xz_teacher_upper: final evaluation after " + std::to_string(config.opt_steps) +
                       " inner steps: " + e.what());
  }
  const Vector per_code = -cond_entropy - result.final_objective;
  const auto [m, se] = mean_and_error(per_code);
  result.estimate = {m, EstimateKind::xz_teacher_upper,
                     static_cast<std::size_t>(config.n_outer) * static_cast<std::size_t>(config.mc_samples), se};
  return result;
}

}  // namespace infoplane
