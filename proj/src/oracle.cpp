#include "swdrso/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "swdrso/encoder.hpp"
#include "swdrso/error.hpp"
#include "swdrso/measures.hpp"

namespace swdrso::oracle {

double brute_wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("brute_wasserstein_1d needs equal sizes");
  if (a.empty()) throw ValidationError("brute_wasserstein_1d needs non-empty inputs");
  if (a.size() > 6) throw ValidationError("brute_wasserstein_1d supports n <= 6");
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double t = a[i] - b[perm[i]];
      cost += t * t;
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(a.size()));
}

namespace {

std::size_t grid_divisions(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ValidationError("grid step must lie in (0, 1]");
  return static_cast<std::size_t>(std::llround(1.0 / step));
}

}  // namespace

GridMax grid_simplex_max(const std::function<double(const SimplexWeights&)>& f, std::size_t K,
                         double step) {
  if (K == 0 || K > 3) throw ValidationError("grid_simplex_max supports 1 <= K <= 3");
  const std::size_t N = grid_divisions(step);
  const double inv = 1.0 / static_cast<double>(N);
  GridMax best;
  bool first = true;
  auto consider = [&](SimplexWeights w) {
    const double v = f(w);
    if (first || v > best.value) {
      best.value = v;
      best.weights = std::move(w);
      first = false;
    }
  };
  if (K == 1) {
    consider(SimplexWeights{{1.0}});
  } else if (K == 2) {
    for (std::size_t i = 0; i <= N; ++i) {
      consider(SimplexWeights{{static_cast<double>(i) * inv, static_cast<double>(N - i) * inv}});
    }
  } else {
    for (std::size_t i = 0; i <= N; ++i) {
      for (std::size_t j = 0; i + j <= N; ++j) {
        consider(SimplexWeights{{static_cast<double>(i) * inv, static_cast<double>(j) * inv,
                                 static_cast<double>(N - i - j) * inv}});
      }
    }
  }
  return best;
}

SimplexWeights grid_simplex_projection(std::span<const double> v, double step, double tolerance) {
  const std::size_t K = v.size();
  if (K == 0 || K > 3) throw ValidationError("grid_simplex_projection supports 1 <= K <= 3");
  if (K == 1) return SimplexWeights{{1.0}};
  auto cost = [&](double l1, double l2) {
    const double l3 = 1.0 - l1 - l2;
    double c = (l1 - v[0]) * (l1 - v[0]);
    if (K == 2) return c + (1.0 - l1 - v[1]) * (1.0 - l1 - v[1]);
    c += (l2 - v[1]) * (l2 - v[1]);
    return c + (l3 - v[2]) * (l3 - v[2]);
  };
  // Coarse pass over the whole simplex.
  const std::size_t N = grid_divisions(step);
  double b1 = 0, b2 = 0, best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= N; ++i) {
    const double l1 = static_cast<double>(i) / static_cast<double>(N);
    const std::size_t jmax = K == 2 ? 0 : N - i;
    for (std::size_t j = 0; j <= jmax; ++j) {
      const double l2 = static_cast<double>(j) / static_cast<double>(N);
      const double c = cost(l1, l2);
      if (c < best) {
        best = c;
        b1 = l1;
        b2 = l2;
      }
    }
  }
  // Zoom: the objective is strictly convex, so the optimum stays within a few
  // coarse steps of the best grid point.
  for (double s = step; s > tolerance; s /= 10.0) {
    const double fine = s / 10.0;
    const double c1 = b1, c2 = b2;
    for (int i = -30; i <= 30; ++i) {
      const double l1 = std::clamp(c1 + i * fine, 0.0, 1.0);
      const int jlo = K == 2 ? 0 : -30, jhi = K == 2 ? 0 : 30;
      for (int j = jlo; j <= jhi; ++j) {
        const double l2 = K == 2 ? 0.0 : std::clamp(c2 + j * fine, 0.0, 1.0 - l1);
        const double c = cost(l1, l2);
        if (c < best) {
          best = c;
          b1 = l1;
          b2 = l2;
        }
      }
    }
  }
  if (K == 2) return SimplexWeights{{b1, 1.0 - b1}};
  return SimplexWeights{{b1, b2, std::max(0.0, 1.0 - b1 - b2)}};
}

Vector finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                        std::span<const double> point, double h) {
  Vector x(point.begin(), point.end());
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw ValidationError("finite_diff_grad: non-finite function value");
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  return distance(a, b) / std::max({norm(a), norm(b), floor});
}

SimplexWeights random_simplex_point(std::size_t K, RandomStream& rng) {
  SimplexWeights w{Vector(K)};
  double total = 0.0;
  for (double& x : w.lambda) {
    double u = rng.uniform();
    while (u == 0.0) u = rng.uniform();
    x = -std::log(u);
    total += x;
  }
  for (double& x : w.lambda) x /= total;
  return w;
}

namespace {

Vector combine(const NeighborPool& pool, const SimplexWeights& w) {
  Vector out(pool.anchor_embedding.values.size(), 0.0);
  for (std::size_t k = 0; k < pool.size(); ++k) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w.lambda[k] * pool.neighbors[k].values[i];
  }
  return out;
}

}  // namespace

double lipschitz_estimate(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                          std::size_t samples, RandomStream& rng) {
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vector u = combine(pool, random_simplex_point(pool.size(), rng));
    const Vector w = combine(pool, random_simplex_point(pool.size(), rng));
    const double gap = distance(u, w);
    if (gap <= 1e-12) continue;
    const double slope = std::abs(loss.evaluate(u, target, {}) - loss.evaluate(w, target, {})) / gap;
    best = std::max(best, slope);
  }
  return best;
}

GapReport check_gap_bound(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                          double grid_step, std::size_t samples, std::uint64_t seed) {
  if (pool.size() > 3) throw ValidationError("check_gap_bound supports pools of size <= 3");
  GapReport r;
  r.rho = pool.radius;
  r.l_disc = -std::numeric_limits<double>::infinity();
  for (const auto& v : pool.neighbors) r.l_disc = std::max(r.l_disc, loss.evaluate(v.values, target, {}));
  if (pool.size() == 1) {
    r.l_bar_grid = r.l_disc;
    r.satisfied = true;
    return r;
  }
  r.l_bar_grid = grid_simplex_max(
                     [&](const SimplexWeights& w) {
                       return loss.evaluate(combine(pool, w), target, {});
                     },
                     pool.size(), grid_step)
                     .value;
  RandomStream rng(seed, "lipschitz");
  r.lipschitz = lipschitz_estimate(pool, loss, target, samples, rng);
  r.bound = 2.0 * r.lipschitz * r.rho;
  r.satisfied = r.l_bar_grid - r.l_disc <= r.bound + 1e-6;
  return r;
}

// ---------------------------------------------------------------------------
// Randomized suites.

namespace {

using Clock = std::chrono::steady_clock;

CheckResult finish(std::string name, bool passed, std::string detail, Clock::time_point start) {
  return {std::move(name), passed, std::move(detail),
          std::chrono::duration<double>(Clock::now() - start).count()};
}

SetInstance random_set(std::size_t n, std::size_t d, RandomStream& rng, double scale = 1.0) {
  SetInstance s;
  s.id = "r";
  s.elements = Matrix(n, d);
  for (double& x : s.elements.data()) x = scale * rng.normal();
  return s;
}

Vector random_vector(std::size_t m, RandomStream& rng, double scale = 1.0) {
  Vector v(m);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// A batch whose first entry is the anchor; the rest are scattered around it,
// some inside and some outside the radius.
std::vector<SetEmbedding> random_batch(std::size_t m, std::size_t count, double rho,
                                       RandomStream& rng) {
  std::vector<SetEmbedding> batch;
  batch.push_back({random_vector(m, rng), "anchor"});
  for (std::size_t c = 0; c < count; ++c) {
    Vector dir = random_vector(m, rng);
    const double len = norm(dir);
    const double r = rho * rng.uniform(0.05, 1.6);
    Vector v = batch[0].values;
    for (std::size_t i = 0; i < m; ++i) v[i] += r * dir[i] / len;
    batch.push_back({std::move(v), "n" + std::to_string(c)});
  }
  return batch;
}

// Pool of exactly K neighbors, all within rho of a random anchor.
NeighborPool random_pool(std::size_t m, std::size_t K, double rho, RandomStream& rng) {
  NeighborPool pool;
  pool.anchor_embedding = {random_vector(m, rng), "anchor"};
  pool.radius = rho;
  for (std::size_t k = 0; k < K; ++k) {
    Vector dir = random_vector(m, rng);
    const double len = norm(dir);
    const double r = rho * rng.uniform(0.2, 1.0);
    Vector v = pool.anchor_embedding.values;
    for (std::size_t i = 0; i < m; ++i) v[i] += r * dir[i] / len;
    pool.neighbors.push_back({std::move(v), "n" + std::to_string(k)});
    pool.indices.push_back(k + 1);
    pool.distances.push_back(r);
  }
  return pool;
}

// Smallest gap between consecutive sorted values.
double min_gap(Vector values) {
  std::sort(values.begin(), values.end());
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < values.size(); ++i) g = std::min(g, values[i] - values[i - 1]);
  return g;
}

}  // namespace

CheckResult check_embedding_distance_identity(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/identity");
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = 1 + rng.below(5);
    const std::size_t H = 1 + rng.below(8);
    const std::size_t R = 1 + rng.below(6);
    const EncoderParams params = EncoderParams::init(d, d, 0, H, R, seed + t);
    const SetInstance s1 = random_set(H, d, rng);
    const SetInstance s2 = random_set(H, d, rng, 2.0);
    const double embedded = distance(encode(s1, params).values, encode(s2, params).values);
    const double sw = sliced_wasserstein(s1, s2, params.dirs);
    worst = std::max(worst, std::abs(embedded - sw) / std::max(sw, 1e-300));
  }
  std::ostringstream detail;
  detail << trials << " pairs, worst relative error " << worst << " (tol 1e-9)";
  return finish("embedding-distance identity", worst <= 1e-9, detail.str(), start);
}

CheckResult check_wasserstein_brute_force(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/w1d");
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.below(6);
    Vector a(n), b(n);
    const bool integers = rng.below(4) == 0;  // exercise ties
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = integers ? static_cast<double>(rng.below(4)) : rng.uniform(-1.0, 1.0);
      b[i] = integers ? static_cast<double>(rng.below(4)) : rng.uniform(-1.0, 1.0);
    }
    const double brute = brute_wasserstein_1d(a, b);
    Vector sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    worst = std::max(worst, std::abs(brute - wasserstein_1d(sa, sb)));
  }
  std::ostringstream detail;
  detail << trials << " instances, worst absolute error " << worst << " (tol 1e-12)";
  return finish("1D OT brute-force equivalence", worst <= 1e-12, detail.str(), start);
}

CheckResult check_simplex_projection(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/simplex");
  double worst_gap = 0.0;
  std::size_t invalid = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t K = 1 + rng.below(3);
    Vector v(K);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    const SimplexWeights p = project_simplex(v);
    try {
      p.validate();
    } catch (const ValidationError&) {
      ++invalid;
    }
    const SimplexWeights ref = grid_simplex_projection(v, 1e-3);
    for (std::size_t k = 0; k < K; ++k) {
      worst_gap = std::max(worst_gap, std::abs(p.lambda[k] - ref.lambda[k]));
    }
  }
  std::ostringstream detail;
  detail << trials << " inputs, worst deviation from grid oracle " << worst_gap
         << " (tol 1e-6), invalid outputs " << invalid;
  return finish("simplex projection", worst_gap <= 1e-6 && invalid == 0, detail.str(), start);
}

CheckResult check_jensen_locality(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/jensen");
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t m = 2 + rng.below(12);
    const double rho = rng.uniform(0.05, 2.0);
    AdversaryConfig config;
    config.rho = rho;
    config.K = 1 + rng.below(6);
    const auto batch = random_batch(m, 2 + rng.below(10), rho, rng);
    const NeighborPool pool = build_pool(0, batch, config);
    const SetEmbedding mixed = mix(pool, random_simplex_point(pool.size(), rng));
    const double excess = distance(mixed.values, pool.anchor_embedding.values) - rho;
    worst = std::max(worst, excess);
    if (excess > 1e-9) ++violations;
  }
  std::ostringstream detail;
  detail << trials << " draws, violations " << violations << ", worst excess over rho " << worst;
  return finish("barycentric locality", violations == 0, detail.str(), start);
}

CheckResult check_subset_inequality(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/subset");
  std::size_t violations = 0;
  double worst_linear = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t m = 2 + rng.below(6);
    const std::size_t K = 1 + rng.below(3);
    const std::size_t C = 2 + rng.below(3);
    const NeighborPool pool = random_pool(m, K, rng.uniform(0.5, 2.0), rng);
    const int y = static_cast<int>(rng.below(C));
    auto vertex_max = [&](const EmbeddingLoss& loss) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& v : pool.neighbors) best = std::max(best, loss.evaluate(v.values, y, {}));
      return best;
    };
    auto bar_max = [&](const EmbeddingLoss& loss) {
      return grid_simplex_max(
                 [&](const SimplexWeights& w) { return loss.evaluate(combine(pool, w), y, {}); }, K,
                 0.01)
          .value;
    };
    const MlpHead mlp = MlpHead::init(m, 6, C, seed + t, 2.0);
    if (bar_max(mlp) < vertex_max(mlp)) ++violations;
    const ClassifierHead linear = ClassifierHead::init(m, C, seed + t, 1.0);
    worst_linear = std::max(worst_linear, std::abs(bar_max(linear) - vertex_max(linear)));
  }
  std::ostringstream detail;
  detail << trials << " instances, nonlinear-head violations " << violations
         << ", worst linear-head |L_bar - L_disc| " << worst_linear << " (tol 1e-6)";
  return finish("discrete <= barycentric", violations == 0 && worst_linear <= 1e-6, detail.str(),
                start);
}

CheckResult check_gap_bounds(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/gap");
  std::size_t satisfied = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t m = 2 + rng.below(6);
    const std::size_t K = 2 + rng.below(2);
    const std::size_t C = 2 + rng.below(3);
    const NeighborPool pool = random_pool(m, K, rng.uniform(0.2, 2.0), rng);
    const MlpHead mlp = MlpHead::init(m, 6, C, seed + t, 2.0);
    const GapReport r = check_gap_bound(pool, mlp, static_cast<int>(rng.below(C)), 0.01, 10000,
                                        seed + t);
    if (r.satisfied) ++satisfied;
    tightest = std::min(tightest, r.bound - (r.l_bar_grid - r.l_disc));
  }
  std::ostringstream detail;
  detail << satisfied << "/" << trials << " satisfied, smallest slack " << tightest;
  return finish("Lipschitz gap bound", satisfied == trials, detail.str(), start);
}

CheckResult check_quantile_linearity(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/quantile");
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.below(8);
    const std::size_t R = 1 + rng.below(4);
    const std::size_t K = 1 + rng.below(4);
    const EncoderParams params = EncoderParams::init(1, 1, 0, n, R, seed + t);
    const SimplexWeights w = random_simplex_point(K, rng);

    NeighborPool pool;
    pool.anchor_embedding = {Vector(n * R, 0.0), "anchor"};
    Vector barycenter(n, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      SetInstance s = random_set(n, 1, rng);
      Vector sorted = s.elements.data();
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < n; ++i) barycenter[i] += w.lambda[k] * sorted[i];
      pool.neighbors.push_back(encode(s, params));
    }
    SetInstance bary;
    bary.id = "barycenter";
    bary.elements = Matrix(n, 1);
    bary.elements.data() = barycenter;
    const Vector direct = encode(bary, params).values;
    const Vector mixed = mix(pool, w).values;
    worst = std::max(worst, distance(direct, mixed) / std::max(1.0, norm(mixed)));
  }
  std::ostringstream detail;
  detail << trials << " pools, worst error " << worst << " (tol 1e-9)";
  return finish("quantile linearity", worst <= 1e-9, detail.str(), start);
}

CheckResult check_gradients(std::size_t trials, std::uint64_t seed) {
  const auto start = Clock::now();
  RandomStream rng(seed, "check/gradients");
  double worst_composite = 0.0;
  double worst_simplex = 0.0;
  std::size_t done = 0;
  std::size_t attempts = 0;
  while (done < trials && attempts < 100 * trials) {
    ++attempts;
    const std::size_t din = 2 + rng.below(3), hid = 3 + rng.below(3), d = 2 + rng.below(3);
    const std::size_t H = 2 + rng.below(4), R = 1 + rng.below(3), n = 2 + rng.below(5);
    const std::size_t C = 2 + rng.below(3);
    EncoderParams params = EncoderParams::init(din, d, hid, H, R, seed + attempts);
    for (double& b : params.featurizer->bias1) b = rng.uniform(-0.5, 0.5);
    const SetInstance s = random_set(n, din, rng);
    const ClassifierHead head = ClassifierHead::init(H * R, C, seed + attempts, 0.5);
    const int y = static_cast<int>(rng.below(C));

    // Skip points near a ReLU kink or a sorting tie.
    Matrix pre;
    const Matrix feats = params.featurizer->forward(s.elements, &pre);
    bool tie_free = true;
    for (double z : pre.data()) tie_free = tie_free && std::abs(z) > 1e-3;
    for (std::size_t r = 0; r < R && tie_free; ++r) {
      tie_free = min_gap(project_values(feats, params.dirs[r])) > 1e-3;
    }
    if (!tie_free) continue;

    EncodeRecord record;
    const SetEmbedding v = encode(s, params, &record);
    const ClassifyResult res = classify_loss(head, v.values, y);
    const EncoderGradients eg = encode_backward(record, params, res.grad_v);
    Vector analytic;
    for (auto t : std::as_const(*eg.featurizer).tensors()) analytic.insert(analytic.end(), t.begin(), t.end());
    analytic.insert(analytic.end(), res.grad_params.weight.data().begin(), res.grad_params.weight.data().end());

    Vector flat;
    for (auto t : std::as_const(*params.featurizer).tensors()) flat.insert(flat.end(), t.begin(), t.end());
    flat.insert(flat.end(), head.weight.data().begin(), head.weight.data().end());
    auto composite = [&](std::span<const double> x) {
      EncoderParams p = params;
      ClassifierHead h = head;
      std::size_t off = 0;
      for (auto t : p.featurizer->tensors()) {
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(off),
                  x.begin() + static_cast<std::ptrdiff_t>(off + t.size()), t.begin());
        off += t.size();
      }
      std::copy(x.begin() + static_cast<std::ptrdiff_t>(off), x.end(), h.weight.data().begin());
      return classify_loss(h, encode(s, p).values, y).loss;
    };
    worst_composite = std::max(worst_composite, relative_error(analytic, finite_diff_grad(composite, flat)));

    // Gradient of the inner objective in the mixing weights.
    const std::size_t K = 1 + rng.below(4);
    const NeighborPool pool = random_pool(H * R, K, 1.0, rng);
    const MlpHead mlp = MlpHead::init(H * R, 5, C, seed + attempts, 1.5);
    const SimplexWeights w = random_simplex_point(K, rng);
    Vector grad_v(H * R);
    mlp.evaluate(mix(pool, w).values, y, grad_v);
    const Vector g_lambda = mix_gradient(pool, grad_v);
    auto inner = [&](std::span<const double> lambda) {
      return mlp.evaluate(combine(pool, SimplexWeights{Vector(lambda.begin(), lambda.end())}), y, {});
    };
    worst_simplex = std::max(worst_simplex, relative_error(g_lambda, finite_diff_grad(inner, w.lambda)));
    ++done;
  }
  std::ostringstream detail;
  detail << done << " points; worst relative error composite " << worst_composite
         << ", simplex " << worst_simplex << " (tol 1e-4)";
  return finish("analytic gradients", done == trials && worst_composite <= 1e-4 &&
                                          worst_simplex <= 1e-4,
                detail.str(), start);
}

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed) {
  return {
      check_embedding_distance_identity(200, seed),
      check_wasserstein_brute_force(500, seed),
      check_simplex_projection(200, seed),
      check_jensen_locality(1000, seed),
      check_subset_inequality(100, seed),
      check_gap_bounds(100, seed),
      check_quantile_linearity(200, seed),
      check_gradients(50, seed),
  };
}

}  // namespace swdrso::oracle
