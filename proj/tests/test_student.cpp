#include <doctest.h>

#include <cmath>

#include "infoplane/datasets.hpp"
#include "infoplane/grad_check.hpp"
#include "infoplane/student.hpp"

using namespace infoplane;

namespace {

StudentConfig small_config(std::uint64_t seed) {
  StudentConfig cfg;
  cfg.bottleneck_dim = 4;
  cfg.encoder_hidden = {8};
  cfg.decoder_hidden = {6};
  cfg.seed = seed;
  return cfg;
}

/// Final layer of the encoder set so that p(z | x) = N(0, exp(log_var) I) for every x.
void pin_encoder(StudentModel& s, double log_var) {
  auto& last = s.encoder.layers().back();
  last.weight.setZero();
  last.bias.setZero();
  last.bias.rightCols(s.bottleneck_dim()).setConstant(log_var);
}

}  // namespace

TEST_CASE("vib_loss examples") {
  RandomStream rng(1, "vib");
  const Matrix x = rng.uniform_matrix(6, 10);
  const std::vector<int> y{0, 1, 2, 3, 4, 5};
  const Matrix noise = rng.normal_matrix(6, 4);

  auto cfg = small_config(1);
  cfg.beta = 0.0;
  const StudentModel plain(cfg, 10);
  const auto t0 = vib_loss(plain, x, y, noise);
  CHECK(t0.loss == t0.cross_entropy);
  CHECK(t0.kl > 0.0);

  cfg.beta = 0.5;
  StudentModel pinned(cfg, 10);
  pin_encoder(pinned, 0.0);
  CHECK(vib_loss(pinned, x, y, noise).kl == 0.0);

  StudentModel uniform(cfg, 10);
  uniform.decoder.layers().back().weight.setZero();
  uniform.decoder.layers().back().bias.setZero();
  for (int trial = 0; trial < 3; ++trial) {
    const auto t = vib_loss(uniform, rng.uniform_matrix(6, 10), y, rng.normal_matrix(6, 4));
    CHECK(t.cross_entropy == doctest::Approx(std::log(10.0)).epsilon(1e-14));
    CHECK(t.loss == doctest::Approx(t.cross_entropy + 0.5 * t.kl).epsilon(1e-14));
  }
  CHECK_THROWS_AS(vib_loss(plain, x, std::vector<int>{0, 1}, noise), DimensionError);
}

TEST_CASE("vib_loss terms are non-negative") {
  RandomStream rng(2, "vib-sign");
  const StudentModel s(small_config(2), 10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = vib_loss(s, rng.uniform_matrix(5, 10), std::vector<int>{1, 3, 5, 7, 9}, rng.normal_matrix(5, 4));
    CHECK(t.kl >= 0.0);
    CHECK(t.cross_entropy >= 0.0);
  }
}

TEST_CASE("vib_loss gradient on a 4-sample batch") {
  RandomStream rng(3, "vib-grad");
  auto cfg = small_config(3);
  cfg.activation = Activation::tanh;
  cfg.beta = 0.1;
  StudentModel s(cfg, 10);
  const Matrix x = rng.uniform_matrix(4, 10);
  const std::vector<int> y{2, 7, 7, 0};
  const Matrix noise = rng.normal_matrix(4, 4);
  {
    Tape tape;
    const StudentGraph g(s, tape, false);
    CHECK(vib_loss(g, tape.constant(x), y, tape.constant(noise)).loss.scalar() ==
          doctest::Approx(vib_loss(s, x, y, noise).loss).epsilon(1e-12));
  }
  auto params = s.parameters();
  const double err = grad_check(params, [&](Tape& tape, std::span<const Tensor> p) {
    const StudentGraph g(s, p);
    return vib_loss(g, tape.constant(x), y, tape.constant(noise)).loss;
  }, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("train_student") {
  const auto train = make_synthetic_digits(100, 8, 0.2, 4);
  const auto eval = make_synthetic_digits(50, 8, 0.2, 5);

  SUBCASE("zero epochs gives only the initial snapshot") {
    auto cfg = small_config(4);
    cfg.epochs = 0;
    int calls = 0;
    const auto r = train_student(cfg, train, &eval, [&](const StudentSnapshot&, const EpochDiagnostics&) { ++calls; });
    CHECK(calls == 0);
    CHECK(r.history.empty());
    REQUIRE(r.initial);
    CHECK(r.initial->encoder.layers()[0].weight == r.model.encoder.layers()[0].weight);
  }
  SUBCASE("reference run reaches 0.9 eval accuracy") {
    StudentConfig cfg;
    cfg.beta = 1e-3;
    cfg.epochs = 40;
    cfg.seed = 4;
    std::vector<EpochDiagnostics> seen;
    const auto r = train_student(cfg, train, &eval, [&](const StudentSnapshot&, const EpochDiagnostics& d) { seen.push_back(d); });
    REQUIRE(seen.size() == 40);
    CHECK(seen.back().eval_accuracy >= 0.9);
    CHECK(accuracy(r.model, eval) >= 0.9);
    for (const auto& d : seen) {
      CHECK(d.eval_accuracy >= 0.0);
      CHECK(d.eval_accuracy <= 1.0);
      CHECK(std::isfinite(d.mean_logdet_cov));
      CHECK(d.train_kl >= 0.0);
      CHECK(d.train_cross_entropy >= 0.0);
    }
    for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i].epoch == static_cast<int>(i) + 1);
  }
  SUBCASE("zero-info labels leave the classifier at chance") {
    const auto zi_train = make_zero_info(train, 6);
    const auto zi_eval = make_zero_info(make_synthetic_digits(100, 8, 0.2, 7), 8);
    StudentConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 6;
    const auto r = train_student(cfg, zi_train, &zi_eval);
    CHECK(std::abs(r.history.back().eval_accuracy - 0.1) <= 0.03);
  }
  SUBCASE("snapshots are immutable") {
    auto cfg = small_config(7);
    cfg.epochs = 4;
    std::vector<StudentSnapshot> snaps;
    std::vector<Matrix> copies;
    (void)train_student(cfg, train, &eval, [&](const StudentSnapshot& s, const EpochDiagnostics&) {
      snaps.push_back(s);
      copies.push_back(s->encoder.layers()[0].weight);
    });
    REQUIRE(snaps.size() == 4);
    for (std::size_t i = 0; i < snaps.size(); ++i) CHECK(snaps[i]->encoder.layers()[0].weight == copies[i]);
    CHECK(copies[0] != copies[3]);
  }
  SUBCASE("deterministic in seed") {
    auto cfg = small_config(8);
    cfg.epochs = 3;
    const auto a = train_student(cfg, train, &eval);
    const auto b = train_student(cfg, train, &eval);
    CHECK(a.model.decoder.layers()[0].weight == b.model.decoder.layers()[0].weight);
  }
  SUBCASE("larger beta ends with a smaller KL") {
    StudentConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 9;
    cfg.beta = 1e-3;
    const double kl_small = train_student(cfg, train, &eval).history.back().train_kl;
    cfg.beta = 1e-1;
    const double kl_large = train_student(cfg, train, &eval).history.back().train_kl;
    CHECK(kl_small >= kl_large);
  }
  SUBCASE("class count mismatch") {
    auto cfg = small_config(1);
    cfg.num_classes = 3;
    CHECK_THROWS_AS(train_student(cfg, train, nullptr), DimensionError);
  }
}

TEST_CASE("classify") {
  RandomStream rng(10, "classify");
  auto cfg = small_config(10);
  cfg.init_gain = 1e-3;
  const StudentModel tiny(cfg, 10);
  const Matrix lp = classify(tiny, rng.uniform_matrix(20, 10));
  CHECK((lp.array().exp() - 0.1).abs().maxCoeff() < 0.02);
  const StudentModel s(small_config(11), 10);
  const Matrix lp2 = classify(s, rng.uniform_matrix(20, 10));
  for (Eigen::Index i = 0; i < lp2.rows(); ++i) CHECK(std::abs(std::log(lp2.row(i).array().exp().sum())) < 1e-9);
  const Categoricald c = classify(s, Vector(rng.uniform_matrix(10, 1)));
  CHECK(c.classes() == 10);
  CHECK_THROWS_AS(classify(s, Vector(Vector::Zero(9))), DimensionError);
}

TEST_CASE("encoder_diagnostics") {
  RandomStream rng(12, "diag");
  const Matrix batch = rng.uniform_matrix(7, 10);
  auto cfg = small_config(12);
  StudentModel s(cfg, 10);
  pin_encoder(s, 0.0);
  CHECK(encoder_diagnostics(s, batch, {}).mean_logdet_cov == 0.0);
  cfg.bottleneck_dim = 40;
  StudentModel wide(cfg, 10);
  pin_encoder(wide, std::log(2.0));
  CHECK(encoder_diagnostics(wide, batch, {}).mean_logdet_cov == doctest::Approx(40 * std::log(2.0)).epsilon(1e-14));
  CHECK(encoder_diagnostics(wide, batch, {}).mean_logdet_cov == doctest::Approx(27.726).epsilon(1e-4));
  const std::vector<Matrix> zeros{Matrix::Zero(3, 3), Matrix::Zero(1, 3)};
  CHECK(encoder_diagnostics(s, batch, zeros).grad_norm == 0.0);
  const std::vector<Matrix> g{Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 4.0)};
  CHECK(encoder_diagnostics(s, batch, g).grad_norm == doctest::Approx(5.0));
}
