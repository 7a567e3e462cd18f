#include <doctest.h>

#include <map>
#include <random>

#include "hybridflow/errors.hpp"
#include "hybridflow/hybrid.hpp"
#include "support.hpp"

using namespace hybridflow;
using hybridflow::testing::max_param_gradient_error;
using hybridflow::testing::random_tensor;

namespace {

data::WindowSample random_sample(std::size_t p, std::size_t n, std::size_t h, std::mt19937_64& rng) {
  data::WindowSample w;
  w.s = random_tensor({p, n}, rng);
  w.s_d = random_tensor({p, n}, rng);
  w.s_w = random_tensor({p, n}, rng);
  w.target = random_tensor({p, h}, rng);
  w.target_mask.assign(p * h, 1);
  return w;
}

// Frozen from tests/oracles/param_count.py (p=8, n=21, h=9).
const std::map<std::string, std::size_t> kGoldenCounts = {
    {"LSTM1", 37992},         {"LSTM2", 39624},         {"LSTM1-S-CNN1", 38007},
    {"LSTM2-S-CNN3", 39660},  {"CNN1-S-LSTM1", 38007},  {"CNN3-S-LSTM2", 39660},
    {"LSTM1-P-CNN1", 74295},  {"LSTM2-P-CNN3", 75948},  {"LSTM1-SP-CNN1", 74295},
    {"LSTM2-SP-CNN3", 75948}, {"CNN1-SP-LSTM1", 74295}, {"CNN3-SP-LSTM2", 75948},
};

}  // namespace

TEST_CASE("architecture names round-trip and unknown names are rejected") {
  for (auto name : hybrid::kArchitectures)
    CHECK(hybrid::architecture_name(hybrid::parse_architecture(name)) == name);
  try {
    hybrid::parse_architecture("LSTM3");
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("LSTM2-SP-CNN3") != std::string::npos);
  }
  CHECK_THROWS_AS(hybrid::validate({hybrid::TopologyKind::Parallel, 1, 3}), UsageError);
  CHECK_THROWS_AS(hybrid::validate({hybrid::TopologyKind::LstmOnly, 3, 0}), UsageError);
}

TEST_CASE("parameter counts match the shape-walking oracle") {
  for (auto name : hybrid::kArchitectures) {
    CAPTURE(name);
    const auto spec = hybrid::ModelSpec::make(name, 8, 21, 9);
    CHECK(hybrid::Model::build(spec, 1).parameter_count() == kGoldenCounts.at(std::string(name)));
  }
}

TEST_CASE("head widths follow the topology") {
  const std::size_t p = 8, n = 21, h = 9;
  auto lstm1 = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1", p, n, h), 1);
  CHECK(lstm1.head().weights.value.shape() == Shape{p * h, 3 * p * n});
  auto par = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1-P-CNN1", p, n, h), 1);
  CHECK(par.head().weights.value.shape() == Shape{p * h, 3 * 2 * p * n});
  CHECK(lstm1.stream(0).lstm.size() == 1);
  CHECK_FALSE(lstm1.stream(0).conv.has_value());
  auto deep = hybrid::Model::build(hybrid::ModelSpec::make("LSTM2-SP-CNN3", p, n, h), 1);
  CHECK(deep.stream(2).lstm.size() == 2);
  CHECK(deep.stream(2).conv->layers.size() == 3);
}

TEST_CASE("forward emits p x h for every architecture and station count") {
  std::mt19937_64 rng(1);
  for (std::size_t p : {8, 25, 65}) {
    const auto sample = random_sample(p, 21, 9, rng);
    for (auto name : hybrid::kArchitectures) {
      CAPTURE(name);
      CAPTURE(p);
      auto model = hybrid::Model::build(hybrid::ModelSpec::make(name, p, 21, 9), 3);
      const Tensor y = model.predict(sample);
      CHECK(y.shape() == Shape{p, 9});
      CHECK(y.all_finite());
    }
  }
}

TEST_CASE("build is deterministic per seed") {
  const auto spec = hybrid::ModelSpec::make("CNN3-SP-LSTM2", 5, 7, 2);
  auto a = hybrid::Model::build(spec, 42);
  auto b = hybrid::Model::build(spec, 42);
  auto c = hybrid::Model::build(spec, 43);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value == pb[i]->value);
    any_diff = any_diff || !(pa[i]->value == pc[i]->value);
  }
  CHECK(any_diff);
}

TEST_CASE("streams are unshared by default and share one block set when asked") {
  auto spec = hybrid::ModelSpec::make("LSTM1", 4, 5, 1);
  auto unshared = hybrid::Model::build(spec, 1);
  spec.share_weights = true;
  auto shared = hybrid::Model::build(spec, 1);
  const std::size_t lstm = 4 * (16 + 16 + 4);
  CHECK(unshared.parameter_count() - shared.parameter_count() == 2 * lstm);
  CHECK(&shared.stream(0) == &shared.stream(2));
  CHECK(shared.parameters().front()->name.rfind("shared.", 0) == 0);
}

TEST_CASE("a zero head predicts zero") {
  std::mt19937_64 rng(5);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM2-SP-CNN3", 6, 9, 3), 7);
  model.head().weights.value.fill(0.0);
  model.head().bias.value.fill(0.0);
  const Tensor y = model.predict(random_sample(6, 9, 3, rng));
  for (double v : y.storage()) CHECK(v == 0.0);
}

TEST_CASE("series LSTM->CNN stream equals manual composition") {
  std::mt19937_64 rng(6);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1-S-CNN1", 6, 9, 3), 7);
  const Tensor x = random_tensor({6, 9}, rng);
  ad::Graph g;
  layers::Binder bind(g, layers::Mode::Infer);
  const Tensor got = model.stream_features(bind, 1, g.constant(x)).value();
  const Tensor want = layers::conv_stack(*model.stream(1).conv,
                                         layers::lstm_layer(model.stream(1).lstm[0], x));
  CHECK(got == want);

  auto cnn_first = hybrid::Model::build(hybrid::ModelSpec::make("CNN1-S-LSTM1", 6, 9, 3), 7);
  ad::Graph g2;
  layers::Binder bind2(g2, layers::Mode::Infer);
  const Tensor got2 = cnn_first.stream_features(bind2, 0, g2.constant(x)).value();
  const Tensor want2 = layers::lstm_layer(cnn_first.stream(0).lstm[0],
                                          layers::conv_stack(*cnn_first.stream(0).conv, x));
  CHECK(got2 == want2);
}

TEST_CASE("SP-D and SP-E are distinguishable with identical parameters") {
  std::mt19937_64 rng(12);
  auto d = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1-SP-CNN1", 5, 7, 2), 3);
  auto e = hybrid::Model::build(hybrid::ModelSpec::make("CNN1-SP-LSTM1", 5, 7, 2), 3);
  const auto pd = d.parameters(), pe = e.parameters();
  REQUIRE(pd.size() == pe.size());
  for (std::size_t i = 0; i < pd.size(); ++i) CHECK(pd[i]->value == pe[i]->value);
  const auto sample = random_sample(5, 7, 2, rng);
  const Tensor yd = d.predict(sample), ye = e.predict(sample);
  double diff = 0.0;
  for (std::size_t i = 0; i < yd.size(); ++i) diff = std::max(diff, std::abs(yd[i] - ye[i]));
  CHECK(diff > 1e-6);
}

TEST_CASE("batched prediction equals one sample at a time") {
  std::mt19937_64 rng(13);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM2-P-CNN3", 5, 7, 2), 3);
  std::vector<data::WindowSample> samples;
  for (int i = 0; i < 4; ++i) samples.push_back(random_sample(5, 7, 2, rng));
  const Tensor batch = model.predict(hybrid::make_batch(samples));
  REQUIRE(batch.shape() == Shape{10, 4});
  for (std::size_t b = 0; b < 4; ++b) {
    const Tensor one = model.predict(samples[b]);
    for (std::size_t s = 0; s < 5; ++s)
      for (std::size_t k = 0; k < 2; ++k)
        CHECK(batch.at(s * 2 + k, b) == doctest::Approx(one.at(s, k)).epsilon(1e-13));
  }
  const auto targets = hybrid::make_targets(samples);
  CHECK(targets.values.at(3 * 2 + 1, 2) == samples[2].target.at(3, 1));
}

TEST_CASE("end-to-end gradients match finite differences on a series model") {
  std::mt19937_64 rng(14);
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("CNN1-S-LSTM1", 5, 7, 2), 3);
  std::vector<data::WindowSample> samples{random_sample(5, 7, 2, rng), random_sample(5, 7, 2, rng)};
  const auto batch = hybrid::make_batch(samples);
  const auto targets = hybrid::make_targets(samples);
  auto run = [&] {
    ad::Graph g;
    model.zero_grad();
    ad::Var d = ad::sub(model.forward(g, batch, layers::Mode::Train), g.constant(targets.values));
    ad::Var loss = ad::mean(ad::mul(d, d));
    g.backward(loss);
    return loss.value()[0];
  };
  CHECK(max_param_gradient_error(model.parameters(), run, 1e-5, 40) < 1e-5);
}

TEST_CASE("forward rejects inputs of the wrong shape") {
  auto model = hybrid::Model::build(hybrid::ModelSpec::make("LSTM1", 5, 7, 2), 3);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(model.predict(random_sample(4, 7, 2, rng)), DimensionError);
}
