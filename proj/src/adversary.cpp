#include "swdrso/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swdrso/corruption.hpp"
#include "swdrso/error.hpp"
#include "swdrso/measures.hpp"

namespace swdrso {

SimplexWeights SimplexWeights::uniform(std::size_t k) {
  if (k == 0) throw ValidationError("simplex of dimension 0");
  return {Vector(k, 1.0 / static_cast<double>(k))};
}

SimplexWeights SimplexWeights::vertex(std::size_t k, std::size_t which) {
  SimplexWeights w{Vector(k, 0.0)};
  w.lambda.at(which) = 1.0;
  return w;
}

void SimplexWeights::validate() const {
  if (lambda.empty()) throw ValidationError("empty simplex weights");
  double sum = 0.0;
  for (double l : lambda) {
    if (!(l >= -1e-12)) throw ValidationError("simplex weight below zero");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("simplex weights do not sum to 1");
}

std::string_view to_string(AdversaryMode mode) {
  switch (mode) {
    case AdversaryMode::barycentric: return "barycentric";
    case AdversaryMode::discrete: return "discrete";
    case AdversaryMode::random_inbatch: return "random_inbatch";
    case AdversaryMode::rcs: return "rcs";
  }
  return "barycentric";
}

AdversaryMode adversary_mode_from_string(std::string_view name) {
  if (name == "barycentric") return AdversaryMode::barycentric;
  if (name == "discrete") return AdversaryMode::discrete;
  if (name == "random_inbatch") return AdversaryMode::random_inbatch;
  if (name == "rcs") return AdversaryMode::rcs;
  throw ValidationError("unknown adversary mode '" + std::string(name) + "'");
}

void AdversaryConfig::validate() const {
  if (K < 1) throw ValidationError("adversary.K must be >= 1");
  if (T < 1) throw ValidationError("adversary.T must be >= 1");
  if (!(eta > 0.0)) throw ValidationError("adversary.eta must be > 0");
  if (!(rho > 0.0)) throw ValidationError("adversary.rho must be > 0");
}

NeighborPool build_pool(std::size_t anchor_index, std::span<const SetEmbedding> batch,
                        const AdversaryConfig& config, std::span<const int> labels) {
  if (anchor_index >= batch.size()) throw ValidationError("anchor is not in the batch");
  if (!labels.empty() && labels.size() != batch.size()) {
    throw ValidationError("labels and batch differ in length");
  }
  const SetEmbedding& anchor = batch[anchor_index];
  NeighborPool pool;
  pool.anchor_embedding = anchor;
  pool.anchor_index = anchor_index;
  pool.radius = config.rho;
  pool.anchor_label = labels.empty() ? 0 : labels[anchor_index];

  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (j == anchor_index) continue;
    if (config.same_label_only && !labels.empty() && labels[j] != labels[anchor_index]) continue;
    const double dist = distance(anchor.values, batch[j].values);
    if (dist <= config.rho) candidates.emplace_back(dist, j);
  }
  std::sort(candidates.begin(), candidates.end());
  const std::size_t take = std::min(config.K, candidates.size());
  for (std::size_t c = 0; c < take; ++c) {
    pool.neighbors.push_back(batch[candidates[c].second]);
    pool.indices.push_back(candidates[c].second);
    pool.distances.push_back(candidates[c].first);
  }
  if (pool.neighbors.empty()) {
    pool.neighbors.push_back(anchor);
    pool.indices.push_back(anchor_index);
    pool.distances.push_back(0.0);
    pool.fallback = true;
  }
  return pool;
}

SetEmbedding mix(const NeighborPool& pool, const SimplexWeights& w) {
  if (w.size() != pool.size()) {
    throw ValidationError("weights have length " + std::to_string(w.size()) + ", pool has " +
                          std::to_string(pool.size()));
  }
  SetEmbedding out{Vector(pool.anchor_embedding.values.size(), 0.0),
                   pool.anchor_embedding.source_id + "#mix"};
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (w.lambda[k] == 0.0) continue;
    axpy(w.lambda[k], pool.neighbors[k].values, out.values);
  }
  return out;
}

Vector mix_gradient(const NeighborPool& pool, std::span<const double> grad_v) {
  Vector g(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) g[k] = dot(pool.neighbors[k].values, grad_v);
  return g;
}

SimplexWeights project_simplex(std::span<const double> v) {
  if (v.empty()) throw ValidationError("cannot project an empty vector onto the simplex");
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError("project_simplex: non-finite input");
  }
  Vector u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  SimplexWeights out{Vector(v.size())};
  for (std::size_t i = 0; i < v.size(); ++i) out.lambda[i] = std::max(v[i] - tau, 0.0);
  return out;
}

InnerResult inner_maximize(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                           const AdversaryConfig& config) {
  if (pool.size() == 0) throw ValidationError("inner_maximize on an empty pool");
  config.validate();
  InnerResult out;
  SimplexWeights w = SimplexWeights::uniform(pool.size());
  out.iterates.push_back(w);
  Vector grad_v(pool.anchor_embedding.values.size());
  if (pool.size() > 1) {
    Vector ascended(pool.size());
    for (std::size_t t = 0; t < config.T; ++t) {
      const SetEmbedding v = mix(pool, w);
      loss.evaluate(v.values, target, grad_v);
      const Vector g = mix_gradient(pool, grad_v);
      for (std::size_t k = 0; k < pool.size(); ++k) ascended[k] = w.lambda[k] + config.eta * g[k];
      w = project_simplex(ascended);
      out.iterates.push_back(w);
    }
  }
  out.embedding = mix(pool, w);
  out.loss = loss.evaluate(out.embedding.values, target, {});
  out.weights = std::move(w);
  return out;
}

AblationResult adversary_ablation(const NeighborPool& pool, const EmbeddingLoss& loss, int target,
                                  const AdversaryConfig& config, const AblationContext& context) {
  AblationResult out;
  switch (config.mode) {
    case AdversaryMode::barycentric:
      throw ValidationError("adversary_ablation does not handle the barycentric mode");

    case AdversaryMode::discrete: {
      std::size_t best = 0;
      double best_loss = -1.0;
      for (std::size_t k = 0; k < pool.size(); ++k) {
        const double l = loss.evaluate(pool.neighbors[k].values, target, {});
        if (k == 0 || l > best_loss) {
          best_loss = l;
          best = k;
        }
      }
      out.embedding = pool.neighbors[best];
      out.loss = best_loss;
      out.batch_index = pool.indices[best];
      return out;
    }

    case AdversaryMode::random_inbatch: {
      if (context.batch.empty() || context.rng == nullptr) {
        throw ValidationError("random_inbatch adversary needs the batch and a random stream");
      }
      const std::size_t j = context.rng->below(context.batch.size());
      out.embedding = context.batch[j];
      out.loss = loss.evaluate(out.embedding.values, target, {});
      out.batch_index = j;
      return out;
    }

    case AdversaryMode::rcs: {
      if (context.anchor_set == nullptr || context.encoder == nullptr || context.rng == nullptr) {
        throw ValidationError("rcs adversary needs access to the raw anchor set");
      }
      if (config.rcs_sw_filter && context.sw_directions == nullptr) {
        throw ValidationError("rcs SW filter needs a direction set");
      }
      out.embedding = pool.anchor_embedding;
      out.loss = loss.evaluate(out.embedding.values, target, {});
      out.batch_index = pool.anchor_index;
      static constexpr double kRatios[] = {0.1, 0.4};
      for (std::size_t round = 0; round < config.rcs_rounds; ++round) {
        CorruptionSpec spec;
        spec.p = kRatios[context.rng->below(2)];
        SetInstance candidate = corrupt(*context.anchor_set, spec, *context.rng);
        if (config.rcs_sw_filter &&
            sliced_wasserstein(candidate, *context.anchor_set, *context.sw_directions) > config.rho) {
          continue;
        }
        EncodeRecord record;
        SetEmbedding v = encode_with(context.encoder_mode, candidate, *context.encoder, &record);
        const double l = loss.evaluate(v.values, target, {});
        if (l > out.loss) {
          out.loss = l;
          out.embedding = std::move(v);
          out.batch_index.reset();
          out.candidate = std::move(candidate);
          out.candidate_record = std::move(record);
        }
      }
      return out;
    }
  }
  return out;
}

}  // namespace swdrso
