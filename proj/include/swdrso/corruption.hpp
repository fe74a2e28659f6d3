#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swdrso/linalg.hpp"
#include "swdrso/measures.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

enum class CorruptionOp { erase, add, replace };
enum class BBoxSource { per_set, dataset };

std::string_view to_string(CorruptionOp op);
CorruptionOp corruption_op_from_string(std::string_view name);

struct BoundingBox {
  Vector lo;
  Vector hi;

  static BoundingBox of(const Matrix& points);
  void extend(const Matrix& points);
  bool contains(std::span<const double> x) const;
};

struct CorruptionSpec {
  std::vector<CorruptionOp> ops{CorruptionOp::erase, CorruptionOp::add, CorruptionOp::replace};
  double p = 0.0;
  BBoxSource bbox_source = BBoxSource::per_set;
  // Required when bbox_source == dataset.
  std::optional<BoundingBox> dataset_bbox;
  std::uint64_t seed = 0;

  void validate() const;
};

// Number of corruption steps: 0 for p == 0, else max(1, round_half_up(p * n)).
std::size_t corruption_steps(double p, std::size_t n);

// Applies the corruption steps with a stream derived from (spec.seed, set.id),
// so the result does not depend on the order sets are processed in.
SetInstance corrupt(const SetInstance& set, const CorruptionSpec& spec);
SetInstance corrupt(const SetInstance& set, const CorruptionSpec& spec, RandomStream& rng);

struct SplitPlan {
  double clean = 0.5;
  double mild = 0.3;
  double severe = 0.2;
  std::uint64_t seed = 0;
};

// Seeded assignment with exact counts floor(ratio * N) for mild and severe;
// the remainder goes to clean.
std::map<std::string, SplitTag> assign_splits(std::span<const std::string> eval_ids,
                                              const SplitPlan& plan);

}  // namespace swdrso
