#include "fixtures.hpp"

#include <cmath>
#include <numbers>

#include "infoplane/random.hpp"

namespace fixture {

using namespace infoplane;

TeacherModel linear_teacher(double s2) {
  TeacherConfig cfg;
  cfg.latent_dim = 1;
  cfg.hidden = {};
  cfg.observation = ObservationModel::gaussian;
  cfg.sigma2 = s2;
  TeacherModel t(cfg, 1);
  const double w = std::sqrt(1.0 - s2);
  t.decoder.layers()[0].weight(0, 0) = w;
  t.decoder.layers()[0].bias(0, 0) = 0.0;
  // p(z_v | x): precision 1 + w^2/s2, mean (w/s2) x / precision.
  const double precision = 1.0 + w * w / s2;
  auto& enc = t.encoder.layers()[0];
  enc.weight << (w / s2) / precision, 0.0;
  enc.bias << 0.0, -std::log(precision);
  return t;
}

StudentModel linear_student(double a, double sigma2) {
  StudentConfig cfg;
  cfg.bottleneck_dim = 1;
  cfg.encoder_hidden = {};
  cfg.decoder_hidden = {};
  cfg.num_classes = 2;
  StudentModel s(cfg, 1);
  auto& enc = s.encoder.layers()[0];
  enc.weight << a, 0.0;
  enc.bias << 0.0, std::log(sigma2);
  return s;
}

InferenceNet linear_inference(std::uint64_t seed) { return InferenceNet(1, 1, {}, Activation::identity, seed); }

void set_exact_posterior(InferenceNet& net, double a, double sigma2, double s2) {
  // z = c z_v + noise with c = a w and noise variance a^2 s2 + sigma2.
  const double w = std::sqrt(1.0 - s2);
  const double c = a * w;
  const double noise = a * a * s2 + sigma2;
  const double precision = 1.0 + c * c / noise;
  auto& layer = net.net.layers()[0];
  layer.weight << (c / noise) / precision, 0.0;
  layer.bias << 0.0, -std::log(precision);
}

double linear_mi(double a, double sigma2, double var_x) { return 0.5 * std::log(1.0 + a * a * var_x / sigma2); }

double linear_log_marginal(double z, double a, double sigma2) {
  const double v = a * a + sigma2;
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * z * z / v;
}

LabeledDataset standard_gaussian_inputs(Eigen::Index n, std::uint64_t seed) {
  RandomStream rng(seed, "fixture-gaussian-x");
  Matrix x = rng.normal_matrix(n, 1);
  x.array() -= x.mean();
  x /= std::sqrt(x.squaredNorm() / static_cast<double>(n));
  LabeledDataset d;
  d.images = x;  // not pixels; only the MI estimators see this set
  d.labels.assign(static_cast<std::size_t>(n), 0);
  d.num_classes = 2;
  return d;
}

RunConfig tiny_run(const std::filesystem::path& dir) {
  RunConfig c;
  c.seed = 5;
  c.output_dir = dir.string();
  c.dataset.per_class = 20;
  c.dataset.eval_size = 100;
  c.teacher.epochs = 2;
  c.teacher.hidden = {32};
  c.teacher.latent_dim = 4;
  c.student.epochs = 2;
  c.student.bottleneck_dim = 6;
  c.student.encoder_hidden = {32};
  c.student.decoder_hidden = {16};
  c.student.batch_size = 50;
  c.estimators.teacher_bound.n_outer = 16;
  c.estimators.teacher_bound.mc_samples = 2;
  c.estimators.teacher_bound.opt_steps = 3;
  c.estimators.inference_hidden = {16};
  c.estimators.zy_samples = 2;
  c.teacher.seed = c.student.seed = c.seed;
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "infoplane-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
