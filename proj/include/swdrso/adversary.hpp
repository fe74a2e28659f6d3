#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "swdrso/encoder.hpp"
#include "swdrso/head.hpp"
#include "swdrso/linalg.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

struct SimplexWeights {
  Vector lambda;

  static SimplexWeights uniform(std::size_t k);
  static SimplexWeights vertex(std::size_t k, std::size_t which);
  // Throws ValidationError unless sum == 1 within 1e-9 and every entry >= -1e-12.
  void validate() const;
  std::size_t size() const { return lambda.size(); }
};

enum class AdversaryMode { barycentric, discrete, random_inbatch, rcs };

std::string_view to_string(AdversaryMode mode);
AdversaryMode adversary_mode_from_string(std::string_view name);

struct AdversaryConfig {
  std::size_t K = 4;
  double rho = 0.1;
  std::size_t T = 2;
  double eta = 0.1;
  AdversaryMode mode = AdversaryMode::barycentric;
  // Rounds of random combinatorial search (mode rcs).
  std::size_t rcs_rounds = 8;
  // Keep only RCS candidates within sliced-Wasserstein distance rho of the anchor.
  bool rcs_sw_filter = false;
  // Restrict pools to neighbors sharing the anchor's label.
  bool same_label_only = false;

  void validate() const;
};

struct NeighborPool {
  SetEmbedding anchor_embedding;
  std::size_t anchor_index = 0;
  std::vector<SetEmbedding> neighbors;
  // Batch positions of the neighbors, nearest first.
  std::vector<std::size_t> indices;
  std::vector<double> distances;
  double radius = 0.0;
  int anchor_label = 0;
  // True when no candidate lay within the radius and the pool is {anchor}.
  bool fallback = false;

  std::size_t size() const { return neighbors.size(); }
};

// Up to K nearest batch members within rho of the anchor (anchor excluded),
// or {anchor} alone when none qualify. `labels`, when given, is indexed like
// `batch` and enables the same-label restriction.
NeighborPool build_pool(std::size_t anchor_index, std::span<const SetEmbedding> batch,
                        const AdversaryConfig& config, std::span<const int> labels = {});

// sum_k lambda_k v_k.
SetEmbedding mix(const NeighborPool& pool, const SimplexWeights& w);

// d phi(mix(lambda)) / d lambda = J^T grad_v, where J's columns are the
// neighbor embeddings.
Vector mix_gradient(const NeighborPool& pool, std::span<const double> grad_v);

// Euclidean projection onto the probability simplex (sort and threshold).
SimplexWeights project_simplex(std::span<const double> v);

struct InnerResult {
  SimplexWeights weights;  // treated as a constant by the outer backward pass
  SetEmbedding embedding;
  double loss = 0.0;
  std::vector<SimplexWeights> iterates;  // lambda^(1) .. lambda^(T+1)
};

// Projected gradient ascent on the simplex from the uniform point: exactly T
// steps of ascent-then-project. Returns the final iterate.
InnerResult inner_maximize(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                           const AdversaryConfig& config);

// Inputs needed by the non-barycentric adversaries.
struct AblationContext {
  std::span<const SetEmbedding> batch;  // random_inbatch
  RandomStream* rng = nullptr;          // random_inbatch, rcs
  const SetInstance* anchor_set = nullptr;  // rcs
  const EncoderParams* encoder = nullptr;   // rcs
  EncoderMode encoder_mode = EncoderMode::sw;
  const DirectionSet* sw_directions = nullptr;  // rcs with SW filter, in raw input space
};

struct AblationResult {
  SetEmbedding embedding;
  double loss = 0.0;
  // Batch position whose embedding was chosen (discrete, random_inbatch, or
  // the anchor when rcs keeps the clean set).
  std::optional<std::size_t> batch_index;
  // The corrupted set an rcs adversary chose, with its forward record.
  std::optional<SetInstance> candidate;
  EncodeRecord candidate_record;
};

AblationResult adversary_ablation(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                                  const AdversaryConfig& config, const AblationContext& context);

}  // namespace swdrso
