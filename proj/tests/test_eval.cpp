#include <gtest/gtest.h>

#include <cmath>

#include "swdrso/error.hpp"
#include "swdrso/eval.hpp"
#include "swdrso/trainer.hpp"
#include "test_util.hpp"

using namespace swdrso;

namespace {
std::vector<std::string> strs(std::initializer_list<const char*> v) {
  return {v.begin(), v.end()};
}
}  // namespace

TEST(RecallAtK, Examples) {
  const auto ranked = strs({"a", "b", "c", "d"});
  EXPECT_EQ(recall_at_k(ranked, strs({"a", "b"}), 2), 1.0);
  EXPECT_EQ(recall_at_k(ranked, strs({"d"}), 2), 0.0);
  EXPECT_EQ(recall_at_k(ranked, strs({"a", "d"}), 2), 0.5);
  EXPECT_EQ(recall_at_k(ranked, strs({"a", "d"}), 10), 1.0);
  EXPECT_THROW(recall_at_k(ranked, {}, 1), ValidationError);
  EXPECT_THROW(recall_at_k(ranked, strs({"a"}), 0), ValidationError);
}

TEST(RecallAtK, MonotoneInK) {
  RandomStream rng(1, "recall");
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> ranked;
    for (int i = 0; i < 10; ++i) ranked.push_back(std::to_string(i));
    rng.shuffle(ranked.begin(), ranked.end());
    const auto rel = strs({"1", "4", "7"});
    double prev = 0.0;
    for (std::size_t k = 1; k <= 12; ++k) {
      const double r = recall_at_k(ranked, rel, k);
      EXPECT_GE(r, prev);
      EXPECT_LE(r, 1.0);
      prev = r;
    }
  }
}

TEST(NdcgAtK, Examples) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(strs({"a", "b"}), strs({"a"}), 1), 1.0);
  EXPECT_NEAR(ndcg_at_k(strs({"b", "a"}), strs({"a"}), 2), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_NEAR(ndcg_at_k(strs({"b", "a"}), strs({"a"}), 2), 0.63093, 1e-5);
  EXPECT_EQ(ndcg_at_k(strs({"b", "c", "a"}), strs({"a"}), 2), 0.0);
  EXPECT_THROW(ndcg_at_k(strs({"a"}), {}, 1), ValidationError);
}

TEST(NdcgAtK, OneIffRelevantOnTop) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(strs({"x", "y", "z", "w"}), strs({"y", "x"}), 3), 1.0);
  EXPECT_LT(ndcg_at_k(strs({"x", "z", "y", "w"}), strs({"y", "x"}), 3), 1.0);
}

TEST(RocAuc, Examples) {
  const std::vector<int> labels{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.1, 0.8, 0.2}, labels), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, labels), 0.5);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.4, 0.3}, labels), 0.75);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ValidationError);
}

TEST(RocAuc, InvariantUnderMonotoneTransform) {
  RandomStream rng(2, "auc");
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(20), e(20);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) {
      s[i] = std::round(rng.normal() * 4) / 4;  // ties included
      e[i] = std::exp(3 * s[i]) + 1;
      y[i] = i % 2;
    }
    EXPECT_DOUBLE_EQ(roc_auc(s, y), roc_auc(e, y));
  }
}

TEST(AggregateSplits, InstanceWeighted) {
  const auto v = aggregate_splits({1.0, 0.5, 0.0}, {5, 3, 2});
  EXPECT_DOUBLE_EQ(v.overall, 0.65);
  const auto same = aggregate_splits({0.7, 0.7, 0.7}, {4, 9, 1});
  EXPECT_DOUBLE_EQ(same.overall, 0.7);
  try {
    aggregate_splits({1, 1, 1}, {5, 3, 0});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing splits"), std::string::npos);
  }
}

namespace {

TrainConfig tiny_config(Task task) {
  TrainConfig c;
  c.task = task;
  c.input_dim = c.d = 3;
  c.hidden = 0;
  c.H = 4;
  c.R = 3;
  c.num_classes = 2;
  c.seed = 1;
  return c;
}

Dataset tagged(Dataset d) {
  const SplitTag tags[] = {SplitTag::clean, SplitTag::mild, SplitTag::severe};
  for (std::size_t i = 0; i < d.size(); ++i) d[i].split_tag = tags[i % 3];
  return d;
}

}  // namespace

TEST(EvaluateClassification, ReportsAccuracyAndAuc) {
  SyntheticSpec spec;
  spec.n_sets = 30;
  spec.classes = 2;
  spec.dim = 3;
  spec.n_min = 3;
  spec.n_max = 5;
  const auto data = tagged(gen_classification(spec));
  const auto model = Model::init(tiny_config(Task::classification));
  const auto report = evaluate_classification(model, data, 2);
  EXPECT_EQ(report.n_clean + report.n_mild + report.n_severe, 30u);
  ASSERT_GE(report.metrics.size(), 2u);
  EXPECT_EQ(report.metrics[0].name, "accuracy");
  EXPECT_EQ(report.metrics[1].name, "roc_auc");
  for (const auto& m : report.metrics) {
    for (double v : {m.values.overall, m.values.clean, m.values.mild, m.values.severe}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const auto again = evaluate_classification(model, data, 1);
  EXPECT_EQ(report.to_json(), again.to_json());
  EXPECT_NE(report.table().find("accuracy"), std::string::npos);
}

TEST(EvaluateClassification, MissingSplitThrows) {
  SyntheticSpec spec;
  spec.n_sets = 6;
  spec.dim = 3;
  auto data = gen_classification(spec);
  for (auto& s : data) s.split_tag = SplitTag::clean;
  const auto model = Model::init(tiny_config(Task::classification));
  EXPECT_THROW(evaluate_classification(model, data), ValidationError);
}

TEST(EvaluateRanking, PerfectRetrievalOfDuplicates) {
  SyntheticSpec spec;
  spec.n_sets = 9;
  spec.dim = 3;
  auto queries = tagged(gen_classification(spec));
  Dataset candidates;
  std::map<std::string, std::vector<std::string>> rel;
  for (const auto& q : queries) {
    auto c = q;
    c.id = q.id + "_copy";
    c.split_tag = SplitTag::clean;
    candidates.push_back(c);
    rel[q.id] = {c.id};
  }
  const auto model = Model::init(tiny_config(Task::ranking));
  const std::vector<std::size_t> ks{1, 3};
  const auto report = evaluate_ranking(model, queries, candidates, rel, ks);
  for (const auto& m : report.metrics) EXPECT_DOUBLE_EQ(m.values.overall, 1.0) << m.name;
}
