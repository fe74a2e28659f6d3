#include <gtest/gtest.h>

#include <cmath>

#include "swdrso/adversary.hpp"
#include "swdrso/error.hpp"
#include "swdrso/oracle.hpp"
#include "test_util.hpp"

using namespace swdrso;
using swdrso::testing::random_set;

namespace {

std::vector<SetEmbedding> embeddings(std::initializer_list<Vector> values) {
  std::vector<SetEmbedding> out;
  int i = 0;
  for (const auto& v : values) out.push_back({v, "e" + std::to_string(i++)});
  return out;
}

// phi(v) = c . v, so phi(mix(lambda)) = sum_k lambda_k (c . v_k).
class LinearLoss : public EmbeddingLoss {
 public:
  explicit LinearLoss(Vector c) : c_(std::move(c)) {}
  std::size_t input_dim() const override { return c_.size(); }
  double evaluate(std::span<const double> v, int, std::span<double> grad) const override {
    if (!grad.empty()) std::copy(c_.begin(), c_.end(), grad.begin());
    return dot(c_, v);
  }

 private:
  Vector c_;
};

NeighborPool pool_of(std::initializer_list<Vector> neighbors) {
  NeighborPool pool;
  pool.anchor_embedding = {Vector(neighbors.begin()->size(), 0.0), "anchor"};
  pool.radius = 1e9;
  for (const auto& v : neighbors) {
    pool.indices.push_back(pool.neighbors.size() + 1);
    pool.distances.push_back(norm(v));
    pool.neighbors.push_back({v, "n"});
  }
  return pool;
}

}  // namespace

TEST(BuildPool, KeepsCandidatesWithinRadius) {
  const auto batch = embeddings({{0}, {0.05}, {0.2}, {3.0}});
  AdversaryConfig c;
  c.rho = 0.5;
  c.K = 4;
  const auto pool = build_pool(0, batch, c);
  ASSERT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool.indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_FALSE(pool.fallback);
}

TEST(BuildPool, FallsBackToAnchor) {
  const auto batch = embeddings({{0}, {3.0}});
  AdversaryConfig c;
  c.rho = 0.5;
  const auto pool = build_pool(0, batch, c);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_TRUE(pool.fallback);
  EXPECT_EQ(pool.neighbors[0].values, batch[0].values);
}

TEST(BuildPool, CapsAtK) {
  const auto batch = embeddings({{0}, {0.2}, {0.1}});
  AdversaryConfig c;
  c.rho = 0.5;
  c.K = 1;
  const auto pool = build_pool(0, batch, c);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool.indices[0], 2u);
}

TEST(BuildPool, SameLabelRestriction) {
  const auto batch = embeddings({{0}, {0.1}, {0.2}});
  AdversaryConfig c;
  c.rho = 0.5;
  c.same_label_only = true;
  const std::vector<int> labels{1, 0, 1};
  const auto pool = build_pool(0, batch, c, labels);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool.indices[0], 2u);
}

TEST(BuildPool, NeighborsRespectRadius) {
  RandomStream rng(1, "pool");
  for (int t = 0; t < 200; ++t) {
    std::vector<SetEmbedding> batch;
    for (int i = 0; i < 12; ++i) batch.push_back({{rng.normal(), rng.normal()}, "b"});
    AdversaryConfig c;
    c.rho = rng.uniform(0.1, 2.0);
    c.K = 1 + rng.below(5);
    const auto anchor = rng.below(12);
    const auto pool = build_pool(anchor, batch, c);
    EXPECT_GE(pool.size(), 1u);
    EXPECT_LE(pool.size(), c.K);
    for (const auto& n : pool.neighbors) {
      EXPECT_LE(distance(n.values, batch[anchor].values), c.rho + 1e-9);
    }
    for (std::size_t i = 1; i < pool.distances.size(); ++i) {
      EXPECT_LE(pool.distances[i - 1], pool.distances[i]);
    }
  }
}

TEST(Mix, Examples) {
  const auto pool = pool_of({{1, 0}, {0, 1}});
  EXPECT_EQ(mix(pool, SimplexWeights::vertex(2, 1)).values, (Vector{0, 1}));
  EXPECT_EQ(mix(pool, SimplexWeights{{0.5, 0.5}}).values, (Vector{0.5, 0.5}));
  EXPECT_THROW(mix(pool, SimplexWeights::uniform(3)), ValidationError);
}

TEST(ProjectSimplex, Examples) {
  EXPECT_EQ(project_simplex(Vector{0.5, 0.5}).lambda, (Vector{0.5, 0.5}));
  const auto p = project_simplex(Vector{1.2, -0.2});
  EXPECT_NEAR(p.lambda[0], 1.0, 1e-15);
  EXPECT_NEAR(p.lambda[1], 0.0, 1e-15);
  EXPECT_EQ(project_simplex(Vector{2, 2}).lambda, (Vector{0.5, 0.5}));
  EXPECT_THROW(project_simplex(Vector{NAN, 1}), ValidationError);
  EXPECT_THROW(project_simplex(Vector{INFINITY, 1}), ValidationError);
}

TEST(ProjectSimplex, MatchesGridOracle) {
  const auto r = oracle::check_simplex_projection(200, 3);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(ProjectSimplex, IdempotentAndNearest) {
  RandomStream rng(2, "proj");
  for (int t = 0; t < 200; ++t) {
    const std::size_t K = 1 + rng.below(8);
    Vector v(K);
    for (double& x : v) x = 3 * rng.normal();
    const auto p = project_simplex(v);
    EXPECT_NO_THROW(p.validate());
    const auto q = project_simplex(p.lambda);
    for (std::size_t k = 0; k < K; ++k) EXPECT_NEAR(p.lambda[k], q.lambda[k], 1e-12);
    const auto other = oracle::random_simplex_point(K, rng);
    EXPECT_LE(distance(p.lambda, v), distance(other.lambda, v) + 1e-12);
  }
}

TEST(InnerMaximize, SingletonPool) {
  const auto pool = pool_of({{0.3, 0.4}});
  AdversaryConfig c;
  const auto r = inner_maximize(pool, LinearLoss({1, 1}), 0, c);
  EXPECT_EQ(r.weights.lambda, (Vector{1.0}));
  EXPECT_EQ(r.embedding.values, (Vector{0.3, 0.4}));
  EXPECT_DOUBLE_EQ(r.loss, 0.7);
}

TEST(InnerMaximize, LinearLossOneStep) {
  // c . v_1 = 1 and c . v_2 = 2, so grad_lambda = (1, 2).
  const auto pool = pool_of({{1, 0}, {0, 1}});
  AdversaryConfig c;
  c.T = 1;
  c.eta = 1.0;
  const auto r = inner_maximize(pool, LinearLoss({1, 2}), 0, c);
  EXPECT_NEAR(r.weights.lambda[0], 0.0, 1e-15);
  EXPECT_NEAR(r.weights.lambda[1], 1.0, 1e-15);
  EXPECT_NEAR(r.loss, 2.0, 1e-15);
}

TEST(InnerMaximize, IteratesStayFeasibleAndCountIsT) {
  RandomStream rng(3, "pga");
  const auto head = MlpHead::init(4, 5, 3, 1, 2.0);
  for (int t = 0; t < 50; ++t) {
    NeighborPool pool;
    pool.anchor_embedding = {Vector(4, 0.0), "a"};
    const std::size_t K = 1 + rng.below(5);
    for (std::size_t k = 0; k < K; ++k) {
      pool.neighbors.push_back({{rng.normal(), rng.normal(), rng.normal(), rng.normal()}, "n"});
    }
    AdversaryConfig c;
    c.T = 1 + rng.below(6);
    c.eta = rng.uniform(0.01, 2.0);
    const auto r = inner_maximize(pool, head, 1, c);
    for (const auto& w : r.iterates) EXPECT_NO_THROW(w.validate());
    if (K > 1) EXPECT_EQ(r.iterates.size(), c.T + 1);
    EXPECT_EQ(r.weights.lambda, r.iterates.back().lambda);
    EXPECT_DOUBLE_EQ(r.loss, head.evaluate(r.embedding.values, 1, {}));
  }
}

TEST(InnerMaximize, LinearHeadGridMaxAtVertex) {
  RandomStream rng(4, "vertex");
  for (int t = 0; t < 30; ++t) {
    const auto head = ClassifierHead::init(3, 3, t, 1.0);
    const std::size_t K = 2 + rng.below(2);
    NeighborPool pool;
    pool.anchor_embedding = {Vector(3, 0.0), "a"};
    for (std::size_t k = 0; k < K; ++k) pool.neighbors.push_back({{rng.normal(), rng.normal(), rng.normal()}, "n"});
    double best_vertex = -1e300;
    for (const auto& n : pool.neighbors) best_vertex = std::max(best_vertex, head.evaluate(n.values, 0, {}));
    const auto grid = oracle::grid_simplex_max(
        [&](const SimplexWeights& w) { return head.evaluate(mix(pool, w).values, 0, {}); }, K, 0.01);
    EXPECT_NEAR(grid.value, best_vertex, 1e-6);
  }
}

TEST(MixGradient, MatchesFiniteDifferences) {
  const auto r = oracle::check_gradients(20, 8);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Ablation, DiscretePicksArgmax) {
  // LinearLoss values at the vertices: 0.3, 0.9, 0.1.
  const auto pool = pool_of({{0.3}, {0.9}, {0.1}});
  AdversaryConfig c;
  c.mode = AdversaryMode::discrete;
  const auto r = adversary_ablation(pool, LinearLoss({1}), 0, c, {});
  EXPECT_DOUBLE_EQ(r.loss, 0.9);
  EXPECT_EQ(r.embedding.values, (Vector{0.9}));
}

TEST(Ablation, DiscreteNeverExceedsBarycentricGrid) {
  const auto r = oracle::check_subset_inequality(50, 4);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Ablation, RandomInBatchSamplesBatch) {
  const auto batch = embeddings({{0}, {1}, {2}});
  const auto pool = pool_of({{5}});
  AdversaryConfig c;
  c.mode = AdversaryMode::random_inbatch;
  RandomStream rng(5, "rib");
  AblationContext ctx;
  ctx.batch = batch;
  ctx.rng = &rng;
  std::set<std::size_t> seen;
  for (int i = 0; i < 50; ++i) {
    const auto r = adversary_ablation(pool, LinearLoss({1}), 0, c, ctx);
    ASSERT_TRUE(r.batch_index.has_value());
    EXPECT_EQ(r.embedding.values, batch[*r.batch_index].values);
    seen.insert(*r.batch_index);
  }
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_THROW(adversary_ablation(pool, LinearLoss({1}), 0, c, {}), ValidationError);
}

TEST(Ablation, RcsWithZeroRoundsKeepsAnchor) {
  RandomStream rng(6, "rcs");
  const auto params = EncoderParams::init(2, 2, 0, 3, 2, 1);
  const auto s = random_set("s", 5, 2, rng);
  NeighborPool pool;
  pool.anchor_embedding = encode(s, params);
  pool.neighbors = {pool.anchor_embedding};
  AdversaryConfig c;
  c.mode = AdversaryMode::rcs;
  c.rcs_rounds = 0;
  AblationContext ctx;
  ctx.rng = &rng;
  ctx.anchor_set = &s;
  ctx.encoder = &params;
  const LinearLoss loss(Vector(6, 1.0));
  const auto r = adversary_ablation(pool, loss, 0, c, ctx);
  EXPECT_EQ(r.embedding.values, pool.anchor_embedding.values);
  EXPECT_DOUBLE_EQ(r.loss, loss.evaluate(pool.anchor_embedding.values, 0, {}));
  EXPECT_FALSE(r.candidate.has_value());
}

TEST(Ablation, RcsNeverBelowCleanLossAndRespectsFilter) {
  RandomStream rng(7, "rcs2");
  const auto params = EncoderParams::init(2, 2, 0, 4, 3, 2);
  const auto dirs = DirectionSet::sample(3, 2, 9);
  const auto s = random_set("s", 8, 2, rng);
  NeighborPool pool;
  pool.anchor_embedding = encode(s, params);
  pool.neighbors = {pool.anchor_embedding};
  const auto head = ClassifierHead::init(12, 2, 3, 1.0);
  AdversaryConfig c;
  c.mode = AdversaryMode::rcs;
  c.rcs_rounds = 16;
  c.rcs_sw_filter = true;
  c.rho = 0.3;
  AblationContext ctx;
  ctx.rng = &rng;
  ctx.anchor_set = &s;
  ctx.encoder = &params;
  ctx.sw_directions = &dirs;
  const auto r = adversary_ablation(pool, head, 0, c, ctx);
  EXPECT_GE(r.loss, head.evaluate(pool.anchor_embedding.values, 0, {}));
  if (r.candidate) EXPECT_LE(sliced_wasserstein(*r.candidate, s, dirs), c.rho);
  ctx.anchor_set = nullptr;
  EXPECT_THROW(adversary_ablation(pool, head, 0, c, ctx), ValidationError);
}

TEST(AdversaryConfig, Validation) {
  AdversaryConfig c;
  EXPECT_NO_THROW(c.validate());
  c.K = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.T = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.eta = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.rho = -1;
  EXPECT_THROW(c.validate(), ValidationError);
  for (auto m : {AdversaryMode::barycentric, AdversaryMode::discrete, AdversaryMode::random_inbatch,
                 AdversaryMode::rcs}) {
    EXPECT_EQ(adversary_mode_from_string(to_string(m)), m);
  }
}
