#include "swdrso/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "swdrso/error.hpp"

namespace swdrso {

std::string_view to_string(CorruptionOp op) {
  switch (op) {
    case CorruptionOp::erase: return "delete";
    case CorruptionOp::add: return "add";
    case CorruptionOp::replace: return "replace";
  }
  return "delete";
}

CorruptionOp corruption_op_from_string(std::string_view name) {
  if (name == "delete") return CorruptionOp::erase;
  if (name == "add") return CorruptionOp::add;
  if (name == "replace") return CorruptionOp::replace;
  throw ValidationError("unknown corruption op '" + std::string(name) + "'");
}

BoundingBox BoundingBox::of(const Matrix& points) {
  if (points.rows() == 0) throw ValidationError("bounding box of an empty set");
  BoundingBox box{Vector(points.row(0).begin(), points.row(0).end()),
                  Vector(points.row(0).begin(), points.row(0).end())};
  box.extend(points);
  return box;
}

void BoundingBox::extend(const Matrix& points) {
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto x = points.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      lo[j] = std::min(lo[j], x[j]);
      hi[j] = std::max(hi[j], x[j]);
    }
  }
}

bool BoundingBox::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lo[j] || x[j] > hi[j]) return false;
  }
  return true;
}

void CorruptionSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("corruption ratio p must lie in [0, 1]");
  if (p > 0.0 && ops.empty()) throw ValidationError("corruption ops must be non-empty when p > 0");
  if (bbox_source == BBoxSource::dataset && !dataset_bbox) {
    throw ValidationError("bbox_source=dataset requires a dataset bounding box");
  }
}

std::size_t corruption_steps(double p, std::size_t n) {
  if (p <= 0.0) return 0;
  const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 0.5));
  return std::max<std::size_t>(1, k);
}

SetInstance corrupt(const SetInstance& set, const CorruptionSpec& spec) {
  RandomStream rng(spec.seed, "corrupt", {fnv1a64(set.id)});
  return corrupt(set, spec, rng);
}

SetInstance corrupt(const SetInstance& set, const CorruptionSpec& spec, RandomStream& rng) {
  spec.validate();
  validate_set(set);
  SetInstance out = set;
  const std::size_t steps = corruption_steps(spec.p, set.size());
  if (steps == 0) return out;

  const BoundingBox box =
      spec.bbox_source == BBoxSource::dataset ? *spec.dataset_bbox : BoundingBox::of(set.elements);
  if (box.lo.size() != set.dim()) throw ValidationError("bounding box dimension mismatch");
  Vector sample(set.dim());
  auto draw = [&] {
    for (std::size_t j = 0; j < sample.size(); ++j) sample[j] = rng.uniform(box.lo[j], box.hi[j]);
  };

  for (std::size_t s = 0; s < steps; ++s) {
    const CorruptionOp op = spec.ops[rng.below(spec.ops.size())];
    switch (op) {
      case CorruptionOp::erase:
        if (out.size() > 1) out.elements.erase_row(rng.below(out.size()));
        break;
      case CorruptionOp::add:
        draw();
        out.elements.append_row(sample);
        break;
      case CorruptionOp::replace: {
        // Delete then add, applied in place so the cardinality never dips.
        const std::size_t victim = rng.below(out.size());
        draw();
        std::copy(sample.begin(), sample.end(), out.elements.row(victim).begin());
        break;
      }
    }
  }
  return out;
}

std::map<std::string, SplitTag> assign_splits(std::span<const std::string> eval_ids,
                                              const SplitPlan& plan) {
  if (std::abs(plan.clean + plan.mild + plan.severe - 1.0) > 1e-9 || plan.clean < 0 ||
      plan.mild < 0 || plan.severe < 0) {
    throw ValidationError("split ratios must be non-negative and sum to 1");
  }
  std::set<std::string> seen;
  for (const auto& id : eval_ids) {
    if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "' in split assignment");
  }
  const auto total = static_cast<double>(eval_ids.size());
  // The epsilon absorbs representation error such as 0.3 * 10 = 2.9999...
  const auto n_mild = static_cast<std::size_t>(std::floor(plan.mild * total + 1e-9));
  const auto n_severe = static_cast<std::size_t>(std::floor(plan.severe * total + 1e-9));

  std::vector<std::string> order(eval_ids.begin(), eval_ids.end());
  std::sort(order.begin(), order.end());
  RandomStream rng(plan.seed, "splits");
  rng.shuffle(order.begin(), order.end());

  std::map<std::string, SplitTag> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    SplitTag tag = SplitTag::clean;
    if (i < n_mild) tag = SplitTag::mild;
    else if (i < n_mild + n_severe) tag = SplitTag::severe;
    out.emplace(order[i], tag);
  }
  return out;
}

}  // namespace swdrso
