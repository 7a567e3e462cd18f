#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hybridflow/errors.hpp"
#include "hybridflow/evaluation.hpp"
#include "hybridflow/synthgen.hpp"
#include "hybridflow/training.hpp"
#include "support.hpp"

using namespace hybridflow;
using hybridflow::testing::random_tensor;

namespace {

// 2 * n_d + h == n keeps every stream the same width.
const data::WindowConfig kSmallWindow{6, 2, 2, 2};

PreparedData small_data(std::size_t p = 3, std::size_t days = 20, std::uint64_t seed = 4) {
  synth::SynthConfig cfg;
  cfg.p = p;
  cfg.days = days;
  cfg.seed = seed;
  return prepare(synth::generate(cfg), impute::Method::Mean, kSmallWindow);
}

train::TrainConfig quick(std::size_t epochs, double lr = 1e-3) {
  train::TrainConfig cfg;
  cfg.max_epochs = epochs;
  cfg.learning_rate = lr;
  cfg.runs = 1;
  return cfg;
}

double squared_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.storage()) s += v * v;
  return s;
}

ad::Parameter scalar(double value, double grad) {
  ad::Parameter p("x", Tensor::vector({value}));
  p.grad = Tensor::vector({grad});
  return p;
}

}  // namespace

TEST_CASE("mse loss: zero on equality, four for a constant residual of two") {
  ad::Graph g;
  std::mt19937_64 rng(1);
  const Tensor t = random_tensor({4, 3}, rng);
  CHECK(train::mse_loss(g.constant(t), g.constant(t)).value()[0] == 0.0);
  Tensor shifted = t;
  for (auto& v : shifted.storage()) v += 2.0;
  CHECK(train::mse_loss(g.constant(shifted), g.constant(t)).value()[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(train::mse_loss(g.constant(Tensor({2, 3})), g.constant(Tensor({3, 2}))), DimensionError);
}

TEST_CASE("mse gradient is 2 (pred - target) / size") {
  std::mt19937_64 rng(2);
  const Tensor p = random_tensor({3, 2}, rng), t = random_tensor({3, 2}, rng);
  ad::Graph g;
  ad::Var pred = g.variable(p);
  g.backward(train::mse_loss(pred, g.constant(t)));
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(pred.grad()[i] == doctest::Approx(2.0 * (p[i] - t[i]) / 6.0).epsilon(1e-14));
}

TEST_CASE("adam: one step from zero moments") {
  train::TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.l2 = 0.0;
  for (double g : {0.3, -2.0, 1e-9}) {
    auto p = scalar(1.0, g);
    ad::Parameter* ptr = &p;
    train::AdamState state;
    train::adam_step({&ptr, 1}, state, cfg);
    // m_hat = g and v_hat = g^2 after bias correction.
    const double want = 1.0 - cfg.learning_rate * g / (std::abs(g) + cfg.eps);
    CHECK(p.value[0] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("adam: zero gradient leaves parameters; constant gradient steps by lr") {
  train::TrainConfig cfg;
  cfg.l2 = 0.0;
  cfg.learning_rate = 0.001;
  auto still = scalar(3.0, 0.0);
  ad::Parameter* ptr = &still;
  train::AdamState state;
  for (int i = 0; i < 5; ++i) train::adam_step({&ptr, 1}, state, cfg);
  CHECK(still.value[0] == 3.0);

  auto moving = scalar(0.0, 0.5);
  ptr = &moving;
  train::AdamState s2;
  double previous = 0.0;
  for (int i = 0; i < 200; ++i) {
    previous = moving.value[0];
    train::adam_step({&ptr, 1}, s2, cfg);
  }
  CHECK(previous - moving.value[0] == doctest::Approx(cfg.learning_rate).epsilon(1e-6));
}

TEST_CASE("adam: l2 shrinks parameters under a zero data gradient") {
  train::TrainConfig cfg;
  cfg.l2 = 0.1;
  std::mt19937_64 rng(3);
  ad::Parameter p("w", random_tensor({4, 4}, rng, 0.5, 1.0));
  ad::Parameter* ptr = &p;
  train::AdamState state;
  double norm = squared_norm(p.value);
  for (int i = 0; i < 10; ++i) {
    p.grad = Tensor(p.value.shape());
    train::adam_step({&ptr, 1}, state, cfg);
    const double next = squared_norm(p.value);
    CHECK(next < norm);
    norm = next;
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  train::TrainConfig cfg;
  auto p = scalar(1.0, std::numeric_limits<double>::quiet_NaN());
  ad::Parameter* ptr = &p;
  train::AdamState state;
  CHECK_THROWS_AS(train::adam_step({&ptr, 1}, state, cfg), NumericError);
  CHECK(p.value[0] == 1.0);
}

TEST_CASE("train config validation and seeds") {
  train::TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.run_seeds() == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  auto bad = cfg;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = cfg;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = cfg;
  bad.max_epochs = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = cfg;
  bad.seeds = {7, 8};
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad.runs = 2;
  CHECK(bad.run_seeds() == std::vector<std::uint64_t>{7, 8});
}

TEST_CASE("mean_sd uses the sample standard deviation") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const auto r = train::mean_sd(v);
  CHECK(r.mean == 5.0);
  CHECK(r.sd == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-15));
  CHECK(train::mean_sd(std::vector<double>{0.25}).sd == 0.0);
  CHECK_THROWS_AS(train::mean_sd(std::vector<double>{}), UsageError);
}

TEST_CASE("lr = 0 keeps every parameter") {
  const auto data = small_data();
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1", 3, 6, 2), 5);
  const auto before = model.parameters();
  std::vector<Tensor> values;
  for (auto* p : before) values.push_back(p->value);
  auto cfg = quick(1, 0.0);
  cfg.l2 = 0.0;
  train::train(model, data, cfg);
  const auto after = model.parameters();
  for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i]->value == values[i]);
}

TEST_CASE("training log: one entry per epoch, best epoch restored, deterministic") {
  const auto data = small_data(4);
  const auto spec = hybrid::ModelSpec::make("LSTM1-S-CNN1", 4, 6, 2);
  auto a = hybrid::Model::build(spec, 2);
  auto b = hybrid::Model::build(spec, 2);
  const auto cfg = quick(4, 3e-3);
  std::size_t callbacks = 0;
  const auto log = train::train(a, data, cfg, [&](const train::EpochLog&) { ++callbacks; });
  const auto again = train::train(b, data, cfg);
  REQUIRE(log.epochs.size() == 4);
  CHECK(callbacks == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(log.epochs[i].epoch == i + 1);
    CHECK(log.epochs[i].train_loss == again.epochs[i].train_loss);
    CHECK(log.epochs[i].val_mae == again.epochs[i].val_mae);
  }
  double best = log.epochs[0].val_mae;
  for (const auto& e : log.epochs) best = std::min(best, e.val_mae);
  CHECK(log.epochs[log.best_epoch - 1].val_mae == best);
  // The returned model holds the best epoch's parameters.
  CHECK(eval::evaluate(a, data, data.val_days()).overall.mae() == doctest::Approx(best).epsilon(1e-12));
  CHECK(log.to_jsonl().find("\"best\":true") != std::string::npos);
}

TEST_CASE("training loss falls over the first epochs") {
  const auto data = small_data(4, 24, 7);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1", 4, 6, 2), 1);
  const auto log = train::train(model, data, quick(3));
  CHECK(log.epochs[1].train_loss < log.epochs[0].train_loss);
  CHECK(log.epochs[2].train_loss < log.epochs[1].train_loss);
}

TEST_CASE("run_experiment aggregates run metrics") {
  const auto data = small_data();
  auto cfg = quick(2);
  cfg.runs = 3;
  const auto r = train::run_experiment("LSTM1", data, cfg);
  REQUIRE(r.runs.size() == 3);
  CHECK(r.runs[2].seed == 3);
  double sum = 0.0;
  for (const auto& run : r.runs) sum += run.test_mae;
  const double mean = sum / 3.0;
  double sq = 0.0;
  for (const auto& run : r.runs) sq += (run.test_mae - mean) * (run.test_mae - mean);
  CHECK(r.test_mae.mean == doctest::Approx(mean).epsilon(1e-14));
  CHECK(r.test_mae.sd == doctest::Approx(std::sqrt(sq / 2.0)).epsilon(1e-12));

  cfg.runs = 1;
  const auto single = train::run_experiment("LSTM1", data, cfg);
  CHECK(single.val_mae.sd == 0.0);
  CHECK(single.test_rmse.sd == 0.0);
  CHECK(single.runs[0].test_mae == r.runs[0].test_mae);
}

TEST_CASE("training needs eligible days") {
  auto data = small_data(3, 10);
  // 10 days split 8/1/1: only day 7 is eligible, which still trains.
  CHECK(data.train_days().size() == 1);
  data.split.train.end = 7;
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1", 3, 6, 2), 1);
  CHECK_THROWS_AS(train::train(model, data, quick(1)), DataError);
}
