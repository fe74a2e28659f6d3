#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swdrso/adversary.hpp"
#include "swdrso/head.hpp"
#include "swdrso/linalg.hpp"

// Brute-force references used to validate the fast paths. None of these call
// the code they check.
namespace swdrso::oracle {

// Minimum over all n! matchings of sqrt(mean squared gap). n <= 6.
double brute_wasserstein_1d(std::span<const double> a, std::span<const double> b);

struct GridMax {
  SimplexWeights weights;
  double value = 0.0;
};

// Evaluates f on the regular grid of the K-simplex (vertices included), K <= 3.
GridMax grid_simplex_max(const std::function<double(const SimplexWeights&)>& f, std::size_t K,
                         double step);

// Nearest point of the K-simplex (K <= 3) to v by grid search at `step`,
// followed by successively finer local grids down to `tolerance`.
SimplexWeights grid_simplex_projection(std::span<const double> v, double step = 1e-3,
                                       double tolerance = 1e-10);

// Central differences, one coordinate at a time.
Vector finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                        std::span<const double> point, double h = 1e-5);

// ||a - b|| / max(||a||, ||b||, floor).
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

// Uniform draw from the simplex (normalized exponentials).
SimplexWeights random_simplex_point(std::size_t K, RandomStream& rng);

struct GapReport {
  double l_disc = 0.0;
  double l_bar_grid = 0.0;
  double lipschitz = 0.0;
  double rho = 0.0;
  double bound = 0.0;  // 2 * L * rho
  bool satisfied = false;
};

// Largest observed slope |phi(u) - phi(w)| / |u - w| over random pairs in the
// convex hull of the pool. An empirical (lower) estimate of the Lipschitz
// constant.
double lipschitz_estimate(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                          std::size_t samples, RandomStream& rng);

GapReport check_gap_bound(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                          double grid_step = 0.01, std::size_t samples = 10000,
                          std::uint64_t seed = 0);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Each check runs its trial count on random instances drawn from `seed`.
CheckResult check_embedding_distance_identity(std::size_t trials, std::uint64_t seed);
CheckResult check_wasserstein_brute_force(std::size_t trials, std::uint64_t seed);
CheckResult check_simplex_projection(std::size_t trials, std::uint64_t seed);
CheckResult check_jensen_locality(std::size_t trials, std::uint64_t seed);
CheckResult check_subset_inequality(std::size_t trials, std::uint64_t seed);
CheckResult check_gap_bounds(std::size_t trials, std::uint64_t seed);
CheckResult check_quantile_linearity(std::size_t trials, std::uint64_t seed);
CheckResult check_gradients(std::size_t trials, std::uint64_t seed);

// All of the above at their default trial counts.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed);

}  // namespace swdrso::oracle
