#include "swdrso/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "swdrso/error.hpp"
#include "swdrso/parallel.hpp"

namespace swdrso {

using nlohmann::json;

namespace {

void check_k_and_relevant(std::size_t k, std::span<const std::string> relevant) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (relevant.empty()) throw ValidationError("empty relevant set");
}

int split_slot(SplitTag tag) {
  switch (tag) {
    case SplitTag::clean: return 0;
    case SplitTag::mild: return 1;
    case SplitTag::severe: return 2;
    case SplitTag::train: return -1;
  }
  return -1;
}

}  // namespace

double recall_at_k(std::span<const std::string> ranked, std::span<const std::string> relevant,
                   std::size_t k) {
  check_k_and_relevant(k, relevant);
  const std::set<std::string> rel(relevant.begin(), relevant.end());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hits += rel.count(ranked[i]);
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

double ndcg_at_k(std::span<const std::string> ranked, std::span<const std::string> relevant,
                 std::size_t k) {
  check_k_and_relevant(k, relevant);
  const std::set<std::string> rel(relevant.begin(), relevant.end());
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (rel.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) {
    ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  // Rank-sum form with midranks for ties.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("roc_auc needs both classes present");
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]]) pos_rank_sum += midrank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

SplitValues aggregate_splits(const std::array<double, 3>& means,
                             const std::array<std::size_t, 3>& counts) {
  static constexpr const char* kNames[] = {"clean", "mild", "severe"};
  std::string missing;
  for (std::size_t s = 0; s < 3; ++s) {
    if (counts[s] == 0) missing += std::string(missing.empty() ? "" : ", ") + kNames[s];
  }
  if (!missing.empty()) throw ValidationError("missing splits: " + missing);
  const double total = static_cast<double>(counts[0] + counts[1] + counts[2]);
  SplitValues v;
  v.clean = means[0];
  v.mild = means[1];
  v.severe = means[2];
  v.overall = (means[0] * static_cast<double>(counts[0]) + means[1] * static_cast<double>(counts[1]) +
               means[2] * static_cast<double>(counts[2])) /
              total;
  return v;
}

json EvalReport::to_json() const {
  json metrics_json = json::array();
  for (const auto& m : metrics) {
    json e{{"name", m.name},
           {"overall", m.values.overall},
           {"clean", m.values.clean},
           {"mild", m.values.mild},
           {"severe", m.values.severe}};
    if (m.k) e["k"] = *m.k;
    metrics_json.push_back(e);
  }
  return json{{"task", task},
              {"n_instances", {{"clean", n_clean}, {"mild", n_mild}, {"severe", n_severe}}},
              {"metrics", metrics_json}};
}

std::string EvalReport::table() const {
  std::ostringstream out;
  out.precision(6);
  out << "metric\tk\tclean\tmild\tsevere\toverall\n";
  for (const auto& m : metrics) {
    out << m.name << '\t' << (m.k ? std::to_string(*m.k) : "-") << '\t' << m.values.clean << '\t'
        << m.values.mild << '\t' << m.values.severe << '\t' << m.values.overall << '\n';
  }
  return out.str();
}

EvalReport evaluate_classification(const Model& model, const Dataset& data, std::size_t workers) {
  if (model.task != Task::classification) throw ValidationError("model is not a classifier");
  std::vector<int> predicted(data.size());
  std::vector<double> score(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    const SetEmbedding v = model.embed(data[i]);
    predicted[i] = model.head.predict(v.values);
    if (model.head.num_classes() == 2) score[i] = model.head.probabilities(v.values)[1];
  });

  std::array<double, 3> correct{};
  std::array<std::size_t, 3> counts{};
  std::array<std::vector<double>, 3> split_scores;
  std::array<std::vector<int>, 3> split_labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int s = split_slot(data[i].split_tag);
    if (s < 0) throw ValidationError("evaluation set '" + data[i].id + "' is tagged 'train'");
    if (!data[i].label) throw ValidationError("evaluation set '" + data[i].id + "' has no label");
    ++counts[static_cast<std::size_t>(s)];
    if (predicted[i] == *data[i].label) correct[static_cast<std::size_t>(s)] += 1.0;
    split_scores[static_cast<std::size_t>(s)].push_back(score[i]);
    split_labels[static_cast<std::size_t>(s)].push_back(*data[i].label == 1 ? 1 : 0);
  }
  std::array<double, 3> accuracy{};
  for (std::size_t s = 0; s < 3; ++s) {
    accuracy[s] = counts[s] ? correct[s] / static_cast<double>(counts[s]) : 0.0;
  }
  EvalReport report;
  report.task = "classification";
  report.n_clean = counts[0];
  report.n_mild = counts[1];
  report.n_severe = counts[2];
  report.metrics.push_back({"accuracy", std::nullopt, aggregate_splits(accuracy, counts)});

  if (model.head.num_classes() == 2) {
    bool both = true;
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& l = split_labels[s];
      both = both && std::count(l.begin(), l.end(), 1) > 0 && std::count(l.begin(), l.end(), 0) > 0;
    }
    if (both) {
      std::array<double, 3> auc{};
      for (std::size_t s = 0; s < 3; ++s) auc[s] = roc_auc(split_scores[s], split_labels[s]);
      report.metrics.push_back({"roc_auc", std::nullopt, aggregate_splits(auc, counts)});
    }
  }
  return report;
}

EvalReport evaluate_ranking(const Model& model, const Dataset& queries, const Dataset& candidates,
                            const std::map<std::string, std::vector<std::string>>& relevance,
                            std::span<const std::size_t> ks, std::size_t workers) {
  if (ks.empty()) throw ValidationError("no k values given");
  std::vector<SetEmbedding> cand(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) { cand[i] = model.embed(candidates[i]); });

  // recall[q][ki], ndcg[q][ki]
  std::vector<std::vector<double>> recall(queries.size()), ndcg(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t q) {
    const auto it = relevance.find(queries[q].id);
    if (it == relevance.end()) {
      throw ValidationError("query '" + queries[q].id + "' has no relevance entry");
    }
    const SetEmbedding v = model.embed(queries[q]);
    std::vector<std::pair<double, std::size_t>> dist(cand.size());
    for (std::size_t c = 0; c < cand.size(); ++c) dist[c] = {squared_distance(v.values, cand[c].values), c};
    std::sort(dist.begin(), dist.end());
    std::vector<std::string> ranked(dist.size());
    for (std::size_t c = 0; c < dist.size(); ++c) ranked[c] = candidates[dist[c].second].id;
    for (std::size_t k : ks) {
      recall[q].push_back(recall_at_k(ranked, it->second, k));
      ndcg[q].push_back(ndcg_at_k(ranked, it->second, k));
    }
  });

  std::array<std::size_t, 3> counts{};
  for (const auto& q : queries) {
    const int s = split_slot(q.split_tag);
    if (s < 0) throw ValidationError("query '" + q.id + "' is tagged 'train'");
    ++counts[static_cast<std::size_t>(s)];
  }
  EvalReport report;
  report.task = "ranking";
  report.n_clean = counts[0];
  report.n_mild = counts[1];
  report.n_severe = counts[2];
  for (const auto& [name, table] : {std::pair{"recall", &recall}, std::pair{"ndcg", &ndcg}}) {
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      std::array<double, 3> sums{};
      for (std::size_t q = 0; q < queries.size(); ++q) {
        sums[static_cast<std::size_t>(split_slot(queries[q].split_tag))] += (*table)[q][ki];
      }
      for (std::size_t s = 0; s < 3; ++s) {
        if (counts[s]) sums[s] /= static_cast<double>(counts[s]);
      }
      report.metrics.push_back({name, ks[ki], aggregate_splits(sums, counts)});
    }
  }
  return report;
}

}  // namespace swdrso
