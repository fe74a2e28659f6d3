#include <gtest/gtest.h>

#include <cmath>

#include "swdrso/error.hpp"
#include "swdrso/trainer.hpp"

using namespace swdrso;

namespace {

Dataset small_data(std::uint64_t seed, std::size_t n = 64, std::size_t classes = 3) {
  SyntheticSpec s;
  s.n_sets = n;
  s.classes = classes;
  s.n_min = 4;
  s.n_max = 8;
  s.dim = 4;
  s.seed = seed;
  return gen_classification(s);
}

TrainConfig small_config(std::uint64_t seed = 1) {
  TrainConfig c;
  c.input_dim = 4;
  c.d = 5;
  c.hidden = 6;
  c.H = 5;
  c.R = 4;
  c.num_classes = 3;
  c.batch_size = 16;
  c.epochs = 2;
  c.lr = 0.01;
  c.seed = seed;
  c.adversary.rho = 2.0;
  return c;
}

std::vector<Vector> snapshot(const Model& m) {
  std::vector<Vector> out;
  for (auto t : m.tensors()) out.emplace_back(t.begin(), t.end());
  return out;
}

std::vector<Vector> train(const Dataset& data, const TrainConfig& c,
                          std::vector<EpochMetrics>* trace = nullptr) {
  Model m = Model::init(c);
  AdamState adam = AdamState::for_tensors(m.tensors());
  for (std::size_t e = 0; e < c.epochs; ++e) {
    auto metrics = train_epoch(data, m, c, adam, e);
    if (trace) trace->push_back(metrics);
  }
  return snapshot(m);
}

}  // namespace

TEST(TrainConfig, JsonRoundTripAndDefaults) {
  auto c = small_config();
  c.adversary.mode = AdversaryMode::rcs;
  c.encoder_mode = EncoderMode::meanpool;
  const auto back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  const auto defaults = train_config_from_json(nlohmann::json::object());
  EXPECT_EQ(defaults.H, 128u);
  EXPECT_EQ(defaults.R, 32u);
  EXPECT_EQ(defaults.adversary.K, 4u);
  EXPECT_DOUBLE_EQ(defaults.adversary.rho, 0.1);
  EXPECT_DOUBLE_EQ(defaults.alpha, 0.5);
  EXPECT_DOUBLE_EQ(defaults.lr, 1e-3);
}

TEST(TrainConfig, RejectsUnknownAndInvalidFields) {
  try {
    train_config_from_json({{"alpah", 0.5}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("alpah"), std::string::npos);
  }
  try {
    train_config_from_json({{"adversary", {{"KK", 2}}}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("adversary.KK"), std::string::npos);
  }
  EXPECT_THROW(train_config_from_json({{"alpha", -1.0}}), ValidationError);
  EXPECT_THROW(train_config_from_json({{"alpha", "big"}}), ValidationError);
  EXPECT_THROW(train_config_from_json({{"task", "regression"}}), ValidationError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Vector p{1.0, -2.0}, g{0.0, 0.0};
  std::vector<std::span<double>> params{p};
  std::vector<std::span<const double>> grads{g};
  auto state = AdamState::for_tensors(params);
  adam_step(params, grads, state, 0.1);
  EXPECT_EQ(p, (Vector{1.0, -2.0}));
}

TEST(Adam, FirstStepIsSignStep) {
  Vector p{0.0, 0.0, 0.0}, g{3.0, -0.5, 1e-3};
  std::vector<std::span<double>> params{p};
  std::vector<std::span<const double>> grads{g};
  auto state = AdamState::for_tensors(params);
  adam_step(params, grads, state, 0.01);
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-9);
  EXPECT_NEAR(p[2], -0.01, 1e-7);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ConstantGradientSteadyStep) {
  Vector p{0.0}, g{0.2};
  std::vector<std::span<double>> params{p};
  std::vector<std::span<const double>> grads{g};
  auto state = AdamState::for_tensors(params);
  double prev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    prev = p[0];
    adam_step(params, grads, state, 0.001);
  }
  EXPECT_NEAR(prev - p[0], 0.001, 1e-8);
}

TEST(Adam, ShapeMismatchThrows) {
  Vector p{0.0, 1.0}, g{0.2};
  std::vector<std::span<double>> params{p};
  std::vector<std::span<const double>> grads{g};
  auto state = AdamState::for_tensors(params);
  EXPECT_THROW(adam_step(params, grads, state, 0.1), ValidationError);
}

TEST(MakeBatches, DeterministicPartition) {
  const auto data = small_data(1, 50);
  auto c = small_config();
  const auto b0 = make_batches(data, c, 0);
  EXPECT_EQ(b0, make_batches(data, c, 0));
  EXPECT_NE(b0, make_batches(data, c, 1));
  std::vector<std::size_t> all;
  for (const auto& b : b0) {
    EXPECT_LE(b.size(), c.batch_size);
    all.insert(all.end(), b.begin(), b.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(all[i], i);
}

TEST(MakeBatches, RankingKeepsGroupsTogether) {
  Dataset data = small_data(2, 30);
  for (std::size_t i = 0; i < data.size(); ++i) data[i].label = static_cast<int>(i / 3);
  auto c = small_config();
  c.task = Task::ranking;
  c.batch_size = 8;
  std::map<int, int> seen_in;
  const auto batches = make_batches(data, c, 0);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    for (auto i : batches[b]) {
      const int g = *data[i].label;
      if (seen_in.count(g)) EXPECT_EQ(seen_in[g], static_cast<int>(b));
      seen_in[g] = static_cast<int>(b);
    }
  }
  EXPECT_EQ(seen_in.size(), 10u);
}

TEST(TrainStep, DecompositionHolds) {
  const auto data = small_data(3);
  auto c = small_config();
  std::vector<EpochMetrics> trace;
  train(data, c, &trace);
  for (const auto& e : trace) {
    for (const auto& s : e.steps) {
      EXPECT_NEAR(s.total_loss, s.clean_loss + c.alpha * s.robust_loss, 1e-12);
    }
    EXPECT_NEAR(e.total_loss, e.clean_loss + c.alpha * e.robust_loss, 1e-12);
  }
}

TEST(TrainStep, SingletonBatchFallsBackToClean) {
  const auto data = small_data(4, 4);
  auto c = small_config();
  Model m = Model::init(c);
  AdamState adam = AdamState::for_tensors(m.tensors());
  const std::vector<std::size_t> batch{2};
  const auto s = train_step(data, batch, m, c, adam, 0, 0);
  EXPECT_EQ(s.fallback_pools, 1u);
  EXPECT_EQ(s.robust_loss, s.clean_loss);
  EXPECT_DOUBLE_EQ(s.total_loss, (1 + c.alpha) * s.clean_loss);
}

TEST(TrainStep, RejectsNonTrainingInstances) {
  auto data = small_data(5, 8);
  data[3].split_tag = SplitTag::severe;
  auto c = small_config();
  Model m = Model::init(c);
  AdamState adam = AdamState::for_tensors(m.tensors());
  const std::vector<std::size_t> batch{0, 1, 2, 3};
  EXPECT_THROW(train_step(data, batch, m, c, adam, 0, 0), ValidationError);
  data[3].split_tag = SplitTag::train;
  data[2].label.reset();
  EXPECT_THROW(train_step(data, batch, m, c, adam, 0, 0), ValidationError);
}

TEST(TrainStep, NanLossDumpsState) {
  const auto data = small_data(6, 8);
  auto c = small_config();
  Model m = Model::init(c);
  m.head.bias[0] = NAN;
  AdamState adam = AdamState::for_tensors(m.tensors());
  const std::vector<std::size_t> batch{0, 1, 2};
  try {
    train_step(data, batch, m, c, adam, 0, 0);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_TRUE(e.state().is_object());
    EXPECT_FALSE(e.state().empty());
  }
}

TEST(Train, AlphaZeroIgnoresAdversary) {
  const auto data = small_data(7);
  auto a = small_config();
  a.alpha = 0.0;
  auto b = a;
  b.adversary.K = 1;
  b.adversary.rho = 0.01;
  b.adversary.T = 5;
  std::vector<EpochMetrics> ta, tb;
  EXPECT_EQ(train(data, a, &ta), train(data, b, &tb));
  for (std::size_t e = 0; e < ta.size(); ++e) EXPECT_EQ(ta[e].clean_loss, tb[e].clean_loss);
}

TEST(Train, AlphaChangesResult) {
  const auto data = small_data(8);
  auto a = small_config();
  auto b = a;
  b.alpha = 0.0;
  EXPECT_NE(train(data, a), train(data, b));
}

TEST(Train, IndependentOfWorkerCount) {
  const auto data = small_data(9);
  for (auto mode : {AdversaryMode::barycentric, AdversaryMode::rcs, AdversaryMode::random_inbatch}) {
    auto a = small_config();
    a.adversary.mode = mode;
    auto b = a;
    b.workers = 4;
    std::vector<EpochMetrics> ta, tb;
    EXPECT_EQ(train(data, a, &ta), train(data, b, &tb)) << to_string(mode);
    for (std::size_t e = 0; e < ta.size(); ++e) EXPECT_EQ(ta[e].total_loss, tb[e].total_loss);
  }
}

TEST(Train, AllModesRun) {
  const auto data = small_data(10, 32);
  for (auto mode : {AdversaryMode::barycentric, AdversaryMode::discrete,
                    AdversaryMode::random_inbatch, AdversaryMode::rcs}) {
    for (auto enc : {EncoderMode::sw, EncoderMode::meanpool}) {
      auto c = small_config();
      c.epochs = 1;
      c.adversary.mode = mode;
      c.adversary.rcs_sw_filter = mode == AdversaryMode::rcs;
      c.encoder_mode = enc;
      std::vector<EpochMetrics> trace;
      train(data, c, &trace);
      EXPECT_TRUE(std::isfinite(trace[0].total_loss));
    }
  }
}

TEST(Train, RankingTaskRuns) {
  Dataset data = small_data(11, 36);
  for (std::size_t i = 0; i < data.size(); ++i) data[i].label = static_cast<int>(i / 3);
  auto c = small_config();
  c.task = Task::ranking;
  c.batch_size = 9;
  std::vector<EpochMetrics> trace;
  train(data, c, &trace);
  EXPECT_TRUE(std::isfinite(trace.back().total_loss));
  EXPECT_GT(trace[0].robust_loss, 0.0);
}

TEST(Train, SmokeLossDecreases) {
  int decreasing = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec s;
    s.n_sets = 200;
    s.dim = 8;
    s.seed = seed;
    auto c = small_config(seed);
    c.input_dim = 8;
    c.num_classes = 4;
    c.epochs = 5;
    c.batch_size = 32;
    std::vector<EpochMetrics> trace;
    train(gen_classification(s), c, &trace);
    bool ok = true;
    for (std::size_t e = 1; e < trace.size(); ++e) ok = ok && trace[e].total_loss < trace[e - 1].total_loss;
    decreasing += ok;
  }
  EXPECT_GE(decreasing, 4);
}
