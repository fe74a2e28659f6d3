#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "swdrso/data.hpp"
#include "swdrso/trainer.hpp"

namespace swdrso {

double recall_at_k(std::span<const std::string> ranked_ids,
                   std::span<const std::string> relevant_ids, std::size_t k);

// Binary gains, log2(rank + 1) discount, normalized by the ideal DCG at k.
double ndcg_at_k(std::span<const std::string> ranked_ids,
                 std::span<const std::string> relevant_ids, std::size_t k);

// Mann-Whitney U / (n_pos * n_neg); tied scores count one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct SplitValues {
  double overall = 0.0;
  double clean = 0.0;
  double mild = 0.0;
  double severe = 0.0;
};

struct MetricEntry {
  std::string name;
  std::optional<std::size_t> k;
  SplitValues values;
};

struct EvalReport {
  std::string task;
  std::vector<MetricEntry> metrics;
  std::size_t n_clean = 0;
  std::size_t n_mild = 0;
  std::size_t n_severe = 0;

  nlohmann::json to_json() const;
  // Plot-ready rows: metric, k, clean, mild, severe, overall (tab separated).
  std::string table() const;
};

// Instance-weighted overall from per-split means. Throws ValidationError
// ("missing splits") when any split is empty.
SplitValues aggregate_splits(const std::array<double, 3>& split_means,
                             const std::array<std::size_t, 3>& split_counts);

// Accuracy per split (and ROC-AUC of class 1 for binary problems when every
// split contains both classes).
EvalReport evaluate_classification(const Model& model, const Dataset& data,
                                   std::size_t workers = 1);

// Candidates are ranked per query by Euclidean embedding distance.
EvalReport evaluate_ranking(const Model& model, const Dataset& queries, const Dataset& candidates,
                            const std::map<std::string, std::vector<std::string>>& relevance,
                            std::span<const std::size_t> ks, std::size_t workers = 1);

}  // namespace swdrso
