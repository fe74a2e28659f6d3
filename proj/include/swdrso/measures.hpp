#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swdrso/linalg.hpp"

namespace swdrso {

enum class SplitTag { train, clean, mild, severe };

std::string_view to_string(SplitTag tag);
SplitTag split_tag_from_string(std::string_view name);

// One unordered set of element vectors. Element i is row i of `elements`.
struct SetInstance {
  std::string id;
  Matrix elements;
  std::optional<int> label;
  SplitTag split_tag = SplitTag::train;

  std::size_t size() const { return elements.rows(); }
  std::size_t dim() const { return elements.cols(); }
};

// Throws ValidationError unless the set is non-empty and all values are finite.
void validate_set(const SetInstance& set);

// A set projected onto a unit direction: the sorted scalars w^T x_i.
struct ProjectedMeasure {
  Vector direction;
  Vector sorted_values;
};

// R unit directions drawn from a seeded standard-normal stream and normalized.
class DirectionSet {
 public:
  DirectionSet() = default;
  // Takes ownership of explicit directions (each row is normalized here).
  explicit DirectionSet(Matrix directions, std::uint64_t seed = 0);

  static DirectionSet sample(std::size_t count, std::size_t dim, std::uint64_t seed);
  // Adopts rows that are already unit length (within 1e-12) without touching
  // their bits; used when restoring saved directions.
  static DirectionSet from_unit_rows(Matrix directions, std::uint64_t seed);

  std::size_t size() const { return directions_.rows(); }
  std::size_t dim() const { return directions_.cols(); }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> operator[](std::size_t r) const { return directions_.row(r); }
  const Matrix& matrix() const { return directions_; }

 private:
  Matrix directions_;
  std::uint64_t seed_ = 0;
};

// Projections of every row of `points` onto `direction`, unsorted.
Vector project_values(const Matrix& points, std::span<const double> direction);

// Stable argsort: ties keep ascending original index.
std::vector<std::size_t> stable_argsort(std::span<const double> values);

ProjectedMeasure project(const SetInstance& set, std::span<const double> direction);

// 2-Wasserstein distance between two uniform empirical measures on the line,
// given their sorted atoms. Unequal sizes integrate the squared difference of
// the two quantile functions exactly over the merged breakpoints.
double wasserstein_1d(std::span<const double> a_sorted, std::span<const double> b_sorted);
double wasserstein_1d(const ProjectedMeasure& a, const ProjectedMeasure& b);

// Monte-Carlo sliced 2-Wasserstein distance over a fixed direction set.
double sliced_wasserstein(const SetInstance& s1, const SetInstance& s2, const DirectionSet& dirs);

}  // namespace swdrso
