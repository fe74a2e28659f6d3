#include <gtest/gtest.h>

#include <cmath>

#include "swdrso/error.hpp"
#include "swdrso/head.hpp"
#include "swdrso/oracle.hpp"

using namespace swdrso;

TEST(ClassifyLoss, ZeroHeadIsLogTwo) {
  ClassifierHead head(3, 2);
  const auto r = classify_loss(head, Vector{1, -2, 3}, 1);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  for (double g : r.grad_v) EXPECT_EQ(g, 0.0);
}

TEST(ClassifyLoss, SaturatedCorrectClass) {
  ClassifierHead head(1, 2);
  head.weight(0, 0) = 1000.0;
  const auto r = classify_loss(head, Vector{1.0}, 0);
  EXPECT_LE(r.loss, 1e-6);
  EXPECT_TRUE(std::isfinite(classify_loss(head, Vector{1.0}, 1).loss));
}

TEST(ClassifyLoss, ClassOutOfRangeThrows) {
  ClassifierHead head(2, 3);
  EXPECT_THROW(classify_loss(head, Vector{0, 0}, 3), ValidationError);
  EXPECT_THROW(classify_loss(head, Vector{0, 0}, -1), ValidationError);
  EXPECT_THROW(ClassifierHead(2, 1), ValidationError);
}

TEST(ClassifyLoss, GradientsMatchFiniteDifferences) {
  RandomStream rng(1, "cls");
  for (int t = 0; t < 20; ++t) {
    const auto head = ClassifierHead::init(5, 3, t, 0.7);
    Vector v(5);
    for (double& x : v) x = rng.normal();
    const int y = static_cast<int>(rng.below(3));
    const auto r = classify_loss(head, v, y);
    auto fv = [&](std::span<const double> x) { return classify_loss(head, x, y).loss; };
    EXPECT_LT(oracle::relative_error(r.grad_v, oracle::finite_diff_grad(fv, v)), 1e-5);
    auto fw = [&](std::span<const double> x) {
      auto h = head;
      std::copy(x.begin(), x.end(), h.weight.data().begin());
      return classify_loss(h, v, y).loss;
    };
    EXPECT_LT(oracle::relative_error(r.grad_params.weight.data(),
                                     oracle::finite_diff_grad(fw, head.weight.data())),
              1e-5);
    auto fb = [&](std::span<const double> x) {
      auto h = head;
      std::copy(x.begin(), x.end(), h.bias.begin());
      return classify_loss(h, v, y).loss;
    };
    EXPECT_LT(oracle::relative_error(r.grad_params.bias, oracle::finite_diff_grad(fb, head.bias)),
              1e-5);
  }
}

TEST(ClassifyLoss, ConvexInEmbedding) {
  RandomStream rng(2, "convex");
  for (int t = 0; t < 200; ++t) {
    const auto head = ClassifierHead::init(4, 3, t, 2.0);
    Vector a(4), b(4), m(4);
    for (double& x : a) x = 3 * rng.normal();
    for (double& x : b) x = 3 * rng.normal();
    const double s = rng.uniform();
    for (int i = 0; i < 4; ++i) m[i] = s * a[i] + (1 - s) * b[i];
    const int y = static_cast<int>(rng.below(3));
    EXPECT_LE(head.evaluate(m, y, {}),
              s * head.evaluate(a, y, {}) + (1 - s) * head.evaluate(b, y, {}) + 1e-9);
  }
}

TEST(Softmax, SumsToOne) {
  RandomStream rng(3, "softmax");
  for (int t = 0; t < 100; ++t) {
    Vector z(6);
    for (double& x : z) x = 50 * rng.normal();
    const auto p = softmax(z);
    double s = 0;
    for (double x : p) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(MlpHead, GradientMatchesFiniteDifferences) {
  RandomStream rng(4, "mlp");
  const auto head = MlpHead::init(4, 6, 3, 5, 1.5);
  Vector v(4), g(4);
  for (double& x : v) x = rng.normal();
  head.evaluate(v, 2, g);
  auto f = [&](std::span<const double> x) { return head.evaluate(x, 2, {}); };
  EXPECT_LT(oracle::relative_error(g, oracle::finite_diff_grad(f, v)), 1e-6);
}

TEST(TripletLoss, Examples) {
  EXPECT_DOUBLE_EQ(triplet_loss(Vector{0}, Vector{1}, Vector{0}, 0.5).loss, 1.5);
  EXPECT_DOUBLE_EQ(triplet_loss(Vector{0, 1}, Vector{2, 2}, Vector{2, 2}, 0.7).loss, 0.7);
  const auto inactive = triplet_loss(Vector{0}, Vector{0.1}, Vector{5}, 1.0);
  EXPECT_EQ(inactive.loss, 0.0);
  for (const auto* g : {&inactive.grad_anchor, &inactive.grad_positive, &inactive.grad_negative}) {
    for (double x : *g) EXPECT_EQ(x, 0.0);
  }
}

TEST(TripletLoss, GradientsMatchFiniteDifferences) {
  RandomStream rng(5, "triplet");
  Vector a(3), p(3), n(3);
  for (double& x : a) x = rng.normal();
  for (double& x : p) x = rng.normal();
  for (double& x : n) x = rng.normal();
  const auto r = triplet_loss(a, p, n, 10.0);
  ASSERT_GT(r.loss, 0.0);
  auto fa = [&](std::span<const double> x) { return triplet_loss(x, p, n, 10.0).loss; };
  auto fp = [&](std::span<const double> x) { return triplet_loss(a, x, n, 10.0).loss; };
  auto fn = [&](std::span<const double> x) { return triplet_loss(a, p, x, 10.0).loss; };
  EXPECT_LT(oracle::relative_error(r.grad_anchor, oracle::finite_diff_grad(fa, a)), 1e-6);
  EXPECT_LT(oracle::relative_error(r.grad_positive, oracle::finite_diff_grad(fp, p)), 1e-6);
  EXPECT_LT(oracle::relative_error(r.grad_negative, oracle::finite_diff_grad(fn, n)), 1e-6);
  EXPECT_THROW(triplet_loss(Vector{0}, Vector{0, 1}, Vector{0}, 1.0), ValidationError);
}

TEST(TripletObjective, MatchesTripletLoss) {
  const Vector p{1, 0}, n{0, 1};
  TripletObjective obj(p, n, 0.3);
  Vector g(2);
  const double value = obj.evaluate(Vector{0.2, 0.1}, 0, g);
  const auto ref = triplet_loss(Vector{0.2, 0.1}, p, n, 0.3);
  EXPECT_DOUBLE_EQ(value, ref.loss);
  EXPECT_EQ(g, ref.grad_anchor);
}
