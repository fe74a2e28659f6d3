#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace swdrso::cli {

// Entry point for the swdrso tool. Returns 0 on success, 1 on invalid input
// (flags, config fields, dataset contents), 2 on runtime failure.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

struct BenchOptions {
  std::vector<std::size_t> T_values{1, 2, 4, 8};
  std::vector<std::size_t> K_values{2, 4, 8, 16};
  std::size_t T_fixed = 2;  // while sweeping K
  std::size_t K_fixed = 4;  // while sweeping T
  std::size_t batch_size = 32;
  std::size_t set_size = 24;
  std::size_t dim = 16;
  std::size_t H = 64;
  std::size_t R = 32;
  std::size_t classes = 4;
  std::size_t repeats = 7;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::size_t T = 0;
  std::size_t K = 0;
  double seconds = 0.0;  // median per-minibatch wall time
};

struct BenchReport {
  std::vector<BenchRow> T_sweep;
  std::vector<BenchRow> K_sweep;
  double r2_T = 0.0;
  double r2_K = 0.0;
};

// Times one training minibatch while sweeping T (K fixed) and K (T fixed).
BenchReport run_bench(const BenchOptions& options);

// Coefficient of determination of the least-squares line through (x, y).
double r_squared(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace swdrso::cli
