#include "swdrso/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swdrso/error.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::clean: return "clean";
    case SplitTag::mild: return "mild";
    case SplitTag::severe: return "severe";
  }
  return "train";
}

SplitTag split_tag_from_string(std::string_view name) {
  if (name == "train") return SplitTag::train;
  if (name == "clean") return SplitTag::clean;
  if (name == "mild") return SplitTag::mild;
  if (name == "severe") return SplitTag::severe;
  throw ValidationError("unknown split tag '" + std::string(name) + "'");
}

void validate_set(const SetInstance& set) {
  if (set.size() == 0) throw ValidationError("set '" + set.id + "' is empty");
  for (double v : set.elements.data()) {
    if (!std::isfinite(v)) throw ValidationError("set '" + set.id + "' has non-finite values");
  }
}

DirectionSet::DirectionSet(Matrix directions, std::uint64_t seed)
    : directions_(std::move(directions)), seed_(seed) {
  for (std::size_t r = 0; r < directions_.rows(); ++r) {
    auto row = directions_.row(r);
    const double len = norm(row);
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw ValidationError("direction " + std::to_string(r) + " has zero or non-finite norm");
    }
    for (double& x : row) x /= len;
  }
}

DirectionSet DirectionSet::sample(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("direction dimension must be positive");
  RandomStream rng(seed, "directions");
  Matrix m(count, dim);
  for (std::size_t r = 0; r < count; ++r) {
    double len = 0.0;
    do {
      for (double& x : m.row(r)) x = rng.normal();
      len = norm(m.row(r));
    } while (len == 0.0);
  }
  return DirectionSet(std::move(m), seed);
}

DirectionSet DirectionSet::from_unit_rows(Matrix directions, std::uint64_t seed) {
  for (std::size_t r = 0; r < directions.rows(); ++r) {
    if (std::abs(norm(directions.row(r)) - 1.0) > 1e-12) {
      throw ValidationError("direction " + std::to_string(r) + " is not unit length");
    }
  }
  DirectionSet out;
  out.directions_ = std::move(directions);
  out.seed_ = seed;
  return out;
}

Vector project_values(const Matrix& points, std::span<const double> direction) {
  if (points.cols() != direction.size()) {
    throw ValidationError("dimension mismatch: elements have dim " + std::to_string(points.cols()) +
                          ", direction has dim " + std::to_string(direction.size()));
  }
  Vector out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) out[i] = dot(points.row(i), direction);
  return out;
}

std::vector<std::size_t> stable_argsort(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

ProjectedMeasure project(const SetInstance& set, std::span<const double> direction) {
  if (set.size() == 0) throw ValidationError("cannot project an empty set");
  Vector values = project_values(set.elements, direction);
  std::stable_sort(values.begin(), values.end());
  return {Vector(direction.begin(), direction.end()), std::move(values)};
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("wasserstein_1d needs non-empty measures");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = a[i] - b[i];
      s += t * t;
    }
    return std::sqrt(s / static_cast<double>(n));
  }
  // Quantile of a is a[i] on (i/n, (i+1)/n]; of b is b[j] on (j/m, (j+1)/m].
  // Walk the merged breakpoints on the common grid 1/(n*m).
  std::size_t i = 0, j = 0;
  std::size_t pos = 0;
  const std::size_t total = n * m;
  double s = 0.0;
  while (pos < total) {
    const std::size_t next = std::min((i + 1) * m, (j + 1) * n);
    const double t = a[i] - b[j];
    s += t * t * static_cast<double>(next - pos);
    pos = next;
    if (pos == (i + 1) * m) ++i;
    if (pos == (j + 1) * n) ++j;
  }
  return std::sqrt(s / static_cast<double>(total));
}

double wasserstein_1d(const ProjectedMeasure& a, const ProjectedMeasure& b) {
  return wasserstein_1d(a.sorted_values, b.sorted_values);
}

double sliced_wasserstein(const SetInstance& s1, const SetInstance& s2, const DirectionSet& dirs) {
  if (dirs.size() == 0) throw ValidationError("sliced_wasserstein needs at least one direction");
  if (s1.dim() != s2.dim()) throw ValidationError("sets have different element dimensions");
  double total = 0.0;
  for (std::size_t r = 0; r < dirs.size(); ++r) {
    const double w = wasserstein_1d(project(s1, dirs[r]), project(s2, dirs[r]));
    total += w * w;
  }
  return std::sqrt(total / static_cast<double>(dirs.size()));
}

}  // namespace swdrso
