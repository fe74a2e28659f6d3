#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "swdrso/measures.hpp"

namespace swdrso {

using Dataset = std::vector<SetInstance>;

struct SyntheticSpec {
  std::size_t n_sets = 1000;
  std::size_t classes = 4;
  std::size_t n_min = 16;
  std::size_t n_max = 32;
  std::size_t dim = 16;
  // Spread of each class's prototypes around the class center.
  double dispersion = 1.0;
  // Spread of elements around their prototype.
  double noise = 0.5;
  // Scale of a random translation applied to a whole set (0 disables).
  double shift = 0.0;
  // Prototypes per class.
  std::size_t prototypes = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

// Labels are assigned round-robin (set i has class i mod C) so class counts are
// balanced; every set draws its elements from its class's prototypes.
Dataset gen_classification(const SyntheticSpec& spec);

struct RankingSpec {
  SyntheticSpec base;  // base.n_sets is the number of queries
  std::size_t relevant = 1;
  std::size_t distractors_per_query = 4;
  std::size_t train_groups = 200;
  std::size_t train_group_size = 3;
};

struct RankingData {
  Dataset train;  // labels are group ids
  Dataset queries;
  Dataset candidates;
  std::map<std::string, std::vector<std::string>> relevance;
};

// Each query's relevant candidates are light (p = 0.05) delete/add corruptions
// of it; distractors come from prototypes of the other classes.
RankingData gen_ranking(const RankingSpec& spec);

// One JSON object per line: {"id", "label"?, "split"?, "elements": [[...], ...]}
// with 17-significant-digit decimals.
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
std::string format_record(const SetInstance& set);
SetInstance parse_record(const std::string& line, std::size_t line_number);

void write_relevance(const std::map<std::string, std::vector<std::string>>& relevance,
                     const std::filesystem::path& path);
std::map<std::string, std::vector<std::string>> read_relevance(const std::filesystem::path& path);

}  // namespace swdrso
