#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "swdrso/linalg.hpp"

namespace swdrso {

// phi(v) = loss(g(v), target). Everything the adversary and the oracles need
// from a predictor: a value and its gradient with respect to the embedding.
class EmbeddingLoss {
 public:
  virtual ~EmbeddingLoss() = default;
  virtual std::size_t input_dim() const = 0;
  // Writes d loss / d v into grad_v when grad_v is non-empty.
  virtual double evaluate(std::span<const double> v, int target,
                          std::span<double> grad_v) const = 0;
};

// Linear softmax classifier over set embeddings.
class ClassifierHead : public EmbeddingLoss {
 public:
  ClassifierHead() = default;
  ClassifierHead(std::size_t embedding_dim, std::size_t num_classes);

  // Small Gaussian weights, zero bias.
  static ClassifierHead init(std::size_t embedding_dim, std::size_t num_classes,
                             std::uint64_t seed, double weight_scale = 0.01);

  std::size_t input_dim() const override { return weight.rows(); }
  std::size_t num_classes() const { return weight.cols(); }

  Vector logits(std::span<const double> v) const;
  Vector probabilities(std::span<const double> v) const;
  int predict(std::span<const double> v) const;

  double evaluate(std::span<const double> v, int target, std::span<double> grad_v) const override;

  std::vector<std::span<double>> tensors() { return {weight.data(), bias}; }
  std::vector<std::span<const double>> tensors() const { return {weight.data(), bias}; }

  Matrix weight;  // embedding_dim x num_classes
  Vector bias;
};

struct ClassifyResult {
  double loss = 0.0;
  Vector grad_v;
  ClassifierHead grad_params;  // same shapes as the head
};

// Cross-entropy of softmax(v W + b) at class y with analytic gradients.
ClassifyResult classify_loss(const ClassifierHead& head, std::span<const double> v, int y);

Vector softmax(std::span<const double> logits);

// One tanh hidden layer followed by a softmax classifier. Used where a
// nonlinear predictor is needed (the barycentric-gap checks).
class MlpHead : public EmbeddingLoss {
 public:
  static MlpHead init(std::size_t embedding_dim, std::size_t hidden_dim,
                      std::size_t num_classes, std::uint64_t seed, double weight_scale = 1.0);

  std::size_t input_dim() const override { return weight1.rows(); }
  std::size_t num_classes() const { return weight2.cols(); }
  double evaluate(std::span<const double> v, int target, std::span<double> grad_v) const override;

  Matrix weight1;  // embedding_dim x hidden
  Vector bias1;
  Matrix weight2;  // hidden x num_classes
  Vector bias2;
};

struct RankingHead {
  double margin = 1.0;
};

struct TripletResult {
  double loss = 0.0;
  Vector grad_anchor;
  Vector grad_positive;
  Vector grad_negative;
};

// max(0, |a-p|^2 - |a-n|^2 + margin); the subgradient at the kink is 0.
TripletResult triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                           std::span<const double> negative, double margin);

// The triplet loss as a function of the anchor embedding alone, with fixed
// positive and negative. `target` is ignored.
class TripletObjective : public EmbeddingLoss {
 public:
  TripletObjective(std::span<const double> positive, std::span<const double> negative,
                   double margin)
      : positive_(positive), negative_(negative), margin_(margin) {}

  std::size_t input_dim() const override { return positive_.size(); }
  double evaluate(std::span<const double> v, int target, std::span<double> grad_v) const override;

 private:
  std::span<const double> positive_;
  std::span<const double> negative_;
  double margin_;
};

}  // namespace swdrso
