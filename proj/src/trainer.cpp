#include "swdrso/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "swdrso/error.hpp"
#include "swdrso/parallel.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

using nlohmann::json;

std::string_view to_string(Task task) {
  return task == Task::classification ? "classification" : "ranking";
}

Task task_from_string(std::string_view name) {
  if (name == "classification") return Task::classification;
  if (name == "ranking") return Task::ranking;
  throw ValidationError("unknown task '" + std::string(name) + "'");
}

std::string_view to_string(EncoderMode mode) { return mode == EncoderMode::sw ? "sw" : "meanpool"; }

EncoderMode encoder_mode_from_string(std::string_view name) {
  if (name == "sw") return EncoderMode::sw;
  if (name == "meanpool") return EncoderMode::meanpool;
  throw ValidationError("unknown encoder_mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
  if (!(lr > 0.0)) throw ValidationError("lr must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (input_dim < 1 || d < 1 || H < 1 || R < 1) {
    throw ValidationError("input_dim, d, H and R must be positive");
  }
  if (hidden == 0 && input_dim != d) {
    throw ValidationError("hidden = 0 (identity featurizer) requires input_dim == d");
  }
  if (task == Task::classification && num_classes < 2) {
    throw ValidationError("num_classes must be >= 2");
  }
  if (task == Task::ranking && !(margin > 0.0)) throw ValidationError("margin must be > 0");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  adversary.validate();
}

json to_json(const TrainConfig& c) {
  return json{
      {"task", to_string(c.task)},
      {"encoder_mode", to_string(c.encoder_mode)},
      {"alpha", c.alpha},
      {"lr", c.lr},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"input_dim", c.input_dim},
      {"d", c.d},
      {"hidden", c.hidden},
      {"H", c.H},
      {"R", c.R},
      {"num_classes", c.num_classes},
      {"margin", c.margin},
      {"workers", c.workers},
      {"adversary",
       {{"K", c.adversary.K},
        {"rho", c.adversary.rho},
        {"T", c.adversary.T},
        {"eta", c.adversary.eta},
        {"mode", to_string(c.adversary.mode)},
        {"rcs_rounds", c.adversary.rcs_rounds},
        {"rcs_sw_filter", c.adversary.rcs_sw_filter},
        {"same_label_only", c.adversary.same_label_only}}},
  };
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& prefix) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config field '" + prefix + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& prefix) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ValidationError("unknown config field '" + prefix + item.key() + "'");
  }
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown(j,
                 {"task", "encoder_mode", "alpha", "lr", "epochs", "batch_size", "seed",
                  "input_dim", "d", "hidden", "H", "R", "num_classes", "margin", "workers",
                  "adversary"},
                 "");
  TrainConfig c;
  std::string task = std::string(to_string(c.task));
  std::string mode = std::string(to_string(c.encoder_mode));
  read_field(j, "task", task, "");
  read_field(j, "encoder_mode", mode, "");
  c.task = task_from_string(task);
  c.encoder_mode = encoder_mode_from_string(mode);
  read_field(j, "alpha", c.alpha, "");
  read_field(j, "lr", c.lr, "");
  read_field(j, "epochs", c.epochs, "");
  read_field(j, "batch_size", c.batch_size, "");
  read_field(j, "seed", c.seed, "");
  read_field(j, "input_dim", c.input_dim, "");
  read_field(j, "d", c.d, "");
  read_field(j, "hidden", c.hidden, "");
  read_field(j, "H", c.H, "");
  read_field(j, "R", c.R, "");
  read_field(j, "num_classes", c.num_classes, "");
  read_field(j, "margin", c.margin, "");
  read_field(j, "workers", c.workers, "");
  if (j.contains("adversary")) {
    const json& a = j.at("adversary");
    if (!a.is_object()) throw ValidationError("config field 'adversary' must be an object");
    reject_unknown(a, {"K", "rho", "T", "eta", "mode", "rcs_rounds", "rcs_sw_filter", "same_label_only"},
                   "adversary.");
    std::string amode = std::string(to_string(c.adversary.mode));
    read_field(a, "K", c.adversary.K, "adversary.");
    read_field(a, "rho", c.adversary.rho, "adversary.");
    read_field(a, "T", c.adversary.T, "adversary.");
    read_field(a, "eta", c.adversary.eta, "adversary.");
    read_field(a, "mode", amode, "adversary.");
    read_field(a, "rcs_rounds", c.adversary.rcs_rounds, "adversary.");
    read_field(a, "rcs_sw_filter", c.adversary.rcs_sw_filter, "adversary.");
    read_field(a, "same_label_only", c.adversary.same_label_only, "adversary.");
    c.adversary.mode = adversary_mode_from_string(amode);
  }
  c.validate();
  return c;
}

Model Model::init(const TrainConfig& config) {
  config.validate();
  Model m;
  m.task = config.task;
  m.encoder_mode = config.encoder_mode;
  m.encoder = EncoderParams::init(config.input_dim, config.d, config.hidden, config.H, config.R,
                                  config.seed);
  if (config.task == Task::classification) {
    m.head = ClassifierHead::init(m.encoder.embedding_dim(), config.num_classes, config.seed);
  }
  m.ranking.margin = config.margin;
  return m;
}

SetEmbedding Model::embed(const SetInstance& set, EncodeRecord* record) const {
  return encode_with(encoder_mode, set, encoder, record);
}

std::vector<std::span<double>> Model::tensors() {
  std::vector<std::span<double>> out;
  if (encoder.featurizer) out = encoder.featurizer->tensors();
  if (task == Task::classification) {
    for (auto t : head.tensors()) out.push_back(t);
  }
  return out;
}

std::vector<std::span<const double>> Model::tensors() const {
  std::vector<std::span<const double>> out;
  if (encoder.featurizer) out = std::as_const(*encoder.featurizer).tensors();
  if (task == Task::classification) {
    for (auto t : head.tensors()) out.push_back(t);
  }
  return out;
}

AdamState AdamState::for_tensors(std::span<const std::span<double>> params) {
  AdamState s;
  for (auto p : params) {
    s.first_moment.emplace_back(p.size(), 0.0);
    s.second_moment.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ValidationError("adam_step: parameter, gradient and state tensor counts differ");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size() || params[t].size() != state.first_moment[t].size() ||
        params[t].size() != state.second_moment[t].size()) {
      throw ValidationError("adam_step: shape mismatch in tensor " + std::to_string(t));
    }
  }
  ++state.step;
  const double step = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, step);
  const double c2 = 1.0 - std::pow(state.beta2, step);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& m = state.first_moment[t];
    auto& v = state.second_moment[t];
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double g = grads[t][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[t][i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

json to_json(const EpochMetrics& m) {
  return json{{"epoch", m.epoch},
              {"clean_loss", m.clean_loss},
              {"robust_loss", m.robust_loss},
              {"total_loss", m.total_loss},
              {"seconds", m.seconds},
              {"batches", m.batches},
              {"fallback_pools", m.fallback_pools}};
}

std::vector<std::vector<std::size_t>> make_batches(const Dataset& data, const TrainConfig& config,
                                                   std::size_t epoch) {
  RandomStream rng(config.seed, "batching", {epoch});
  std::vector<std::vector<std::size_t>> batches;
  if (config.task == Task::ranking) {
    // Whole label groups per batch so every anchor can find a positive.
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) groups[data[i].label.value_or(-1)].push_back(i);
    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [label, members] : groups) order.push_back(&members);
    rng.shuffle(order.begin(), order.end());
    std::vector<std::size_t> current;
    for (const auto* members : order) {
      current.insert(current.end(), members->begin(), members->end());
      if (current.size() >= config.batch_size) batches.push_back(std::exchange(current, {}));
    }
    if (!current.empty()) batches.push_back(std::move(current));
    return batches;
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

namespace {

struct AnchorOutput {
  bool active = false;
  bool fallback = false;
  double clean = 0.0;
  double robust = 0.0;
  // Unscaled d(anchor objective)/d(embedding of batch position j).
  std::vector<std::pair<std::size_t, Vector>> embedding_grads;
  std::optional<ClassifierHead> head_grad;
  // Featurizer gradient from an rcs candidate set encoded outside the batch.
  std::optional<ElementFeaturizer> candidate_grad;
};

void add_head_grad(std::optional<ClassifierHead>& acc, const ClassifierHead& g, double scale) {
  if (!acc) {
    acc = ClassifierHead(g.input_dim(), g.num_classes());
  }
  axpy(scale, g.weight.data(), acc->weight.data());
  axpy(scale, g.bias, acc->bias);
}

void add_featurizer_grad(std::optional<ElementFeaturizer>& acc, const ElementFeaturizer& g,
                         double scale) {
  if (!acc) acc = ElementFeaturizer::zeros_like(g);
  auto dst = acc->tensors();
  const auto src = g.tensors();
  for (std::size_t t = 0; t < dst.size(); ++t) axpy(scale, src[t], dst[t]);
}

struct Adversarial {
  SetEmbedding embedding;
  double loss = 0.0;
  // Where the adversarial embedding came from: a convex mixture of batch
  // members (weights frozen), or an rcs candidate with its own record.
  std::vector<std::pair<std::size_t, double>> mixture;
  std::optional<EncodeRecord> candidate_record;
};

Adversarial run_adversary(std::size_t anchor, const NeighborPool& pool, const EmbeddingLoss& loss,
                          int target, const Dataset& data, std::span<const std::size_t> batch,
                          std::span<const SetEmbedding> embeddings, const Model& model,
                          const TrainConfig& config, const DirectionSet* rcs_dirs,
                          std::size_t epoch, std::size_t batch_number) {
  Adversarial out;
  if (config.adversary.mode == AdversaryMode::barycentric) {
    InnerResult inner = inner_maximize(pool, loss, target, config.adversary);
    out.embedding = std::move(inner.embedding);
    out.loss = inner.loss;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (inner.weights.lambda[k] != 0.0) {
        out.mixture.emplace_back(pool.indices[k], inner.weights.lambda[k]);
      }
    }
    return out;
  }
  RandomStream rng(config.seed, "adversary", {epoch, batch_number, anchor});
  AblationContext ctx;
  ctx.batch = embeddings;
  ctx.rng = &rng;
  ctx.anchor_set = &data[batch[anchor]];
  ctx.encoder = &model.encoder;
  ctx.encoder_mode = model.encoder_mode;
  ctx.sw_directions = rcs_dirs;
  AblationResult r = adversary_ablation(pool, loss, target, config.adversary, ctx);
  out.embedding = std::move(r.embedding);
  out.loss = r.loss;
  if (r.candidate) {
    out.candidate_record = std::move(r.candidate_record);
  } else {
    out.mixture.emplace_back(*r.batch_index, 1.0);
  }
  return out;
}

json dump_state(const Model& model, const Dataset& data, std::span<const std::size_t> batch,
                std::span<const AnchorOutput> outputs, std::size_t epoch,
                std::size_t batch_number) {
  json ids = json::array();
  json losses = json::array();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ids.push_back(data[batch[i]].id);
    losses.push_back({outputs[i].clean, outputs[i].robust});
  }
  json norms = json::array();
  for (auto t : model.tensors()) norms.push_back(norm(t));
  return json{{"epoch", epoch},     {"batch", batch_number},     {"ids", ids},
              {"losses", losses},   {"parameter_norms", norms}};
}

}  // namespace

StepMetrics train_step(const Dataset& data, std::span<const std::size_t> batch, Model& model,
                       const TrainConfig& config, AdamState& adam, std::size_t epoch,
                       std::size_t batch_number) {
  const std::size_t B = batch.size();
  if (B == 0) throw ValidationError("empty minibatch");
  const double alpha = config.alpha;

  // Forward: encode every member.
  std::vector<SetEmbedding> embeddings(B);
  std::vector<EncodeRecord> records(B);
  std::vector<int> labels(B, 0);
  for (std::size_t i = 0; i < B; ++i) {
    const SetInstance& s = data[batch[i]];
    if (s.split_tag != SplitTag::train) {
      throw ValidationError("training set '" + s.id + "' is not tagged 'train'");
    }
    if (!s.label) throw ValidationError("training set '" + s.id + "' has no label");
    labels[i] = *s.label;
  }
  parallel_for(B, config.workers, [&](std::size_t i) {
    embeddings[i] = model.embed(data[batch[i]], &records[i]);
  });

  std::optional<DirectionSet> rcs_dirs;
  if (config.adversary.mode == AdversaryMode::rcs && config.adversary.rcs_sw_filter) {
    rcs_dirs = DirectionSet::sample(config.R, config.input_dim, fnv1a64("rcs", config.seed));
  }

  // Per-anchor clean loss, inner maximization, and gradient contributions.
  std::vector<AnchorOutput> outputs(B);
  parallel_for(B, config.workers, [&](std::size_t i) {
    AnchorOutput& out = outputs[i];
    const NeighborPool pool = build_pool(i, embeddings, config.adversary, labels);
    out.fallback = pool.fallback;

    if (model.task == Task::classification) {
      out.active = true;
      const ClassifyResult clean = classify_loss(model.head, embeddings[i].values, labels[i]);
      out.clean = clean.loss;
      add_head_grad(out.head_grad, clean.grad_params, 1.0);
      out.embedding_grads.emplace_back(i, clean.grad_v);

      Adversarial adv = run_adversary(i, pool, model.head, labels[i], data, batch, embeddings,
                                      model, config, rcs_dirs ? &*rcs_dirs : nullptr, epoch,
                                      batch_number);
      out.robust = adv.loss;
      if (alpha == 0.0) return;
      const ClassifyResult robust = classify_loss(model.head, adv.embedding.values, labels[i]);
      add_head_grad(out.head_grad, robust.grad_params, alpha);
      for (const auto& [j, w] : adv.mixture) {
        Vector g(robust.grad_v.size());
        axpy(alpha * w, robust.grad_v, g);
        out.embedding_grads.emplace_back(j, std::move(g));
      }
      if (adv.candidate_record) {
        Vector g(robust.grad_v.size());
        axpy(alpha, robust.grad_v, g);
        EncoderGradients eg = encode_backward(*adv.candidate_record, model.encoder, g);
        if (eg.featurizer) out.candidate_grad = std::move(eg.featurizer);
      }
      return;
    }

    // Ranking: positive = first same-group member, negative = hardest other.
    std::optional<std::size_t> pos, neg;
    double best = 0.0;
    for (std::size_t j = 0; j < B; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        if (!pos) pos = j;
      } else {
        const double dd = squared_distance(embeddings[i].values, embeddings[j].values);
        if (!neg || dd < best) {
          neg = j;
          best = dd;
        }
      }
    }
    if (!pos || !neg) return;
    out.active = true;
    const auto& vp = embeddings[*pos].values;
    const auto& vn = embeddings[*neg].values;
    const TripletResult clean = triplet_loss(embeddings[i].values, vp, vn, model.ranking.margin);
    out.clean = clean.loss;
    out.embedding_grads.emplace_back(i, clean.grad_anchor);
    out.embedding_grads.emplace_back(*pos, clean.grad_positive);
    out.embedding_grads.emplace_back(*neg, clean.grad_negative);

    const TripletObjective objective(vp, vn, model.ranking.margin);
    Adversarial adv = run_adversary(i, pool, objective, labels[i], data, batch, embeddings, model,
                                    config, rcs_dirs ? &*rcs_dirs : nullptr, epoch, batch_number);
    out.robust = adv.loss;
    if (alpha == 0.0) return;
    const TripletResult robust = triplet_loss(adv.embedding.values, vp, vn, model.ranking.margin);
    for (const auto& [j, w] : adv.mixture) {
      Vector g(robust.grad_anchor.size());
      axpy(alpha * w, robust.grad_anchor, g);
      out.embedding_grads.emplace_back(j, std::move(g));
    }
    if (adv.candidate_record) {
      Vector g(robust.grad_anchor.size());
      axpy(alpha, robust.grad_anchor, g);
      EncoderGradients eg = encode_backward(*adv.candidate_record, model.encoder, g);
      if (eg.featurizer) out.candidate_grad = std::move(eg.featurizer);
    }
    Vector gp(robust.grad_positive.size()), gn(robust.grad_negative.size());
    axpy(alpha, robust.grad_positive, gp);
    axpy(alpha, robust.grad_negative, gn);
    out.embedding_grads.emplace_back(*pos, std::move(gp));
    out.embedding_grads.emplace_back(*neg, std::move(gn));
  });

  // Serial reduction in instance-id order.
  std::vector<std::size_t> id_order(B);
  std::iota(id_order.begin(), id_order.end(), std::size_t{0});
  std::sort(id_order.begin(), id_order.end(), [&](std::size_t a, std::size_t b) {
    return data[batch[a]].id < data[batch[b]].id;
  });

  StepMetrics metrics;
  for (std::size_t i : id_order) {
    const AnchorOutput& out = outputs[i];
    if (!out.active) continue;
    if (!std::isfinite(out.clean) || !std::isfinite(out.robust)) {
      throw TrainingError("non-finite loss for set '" + data[batch[i]].id + "'",
                          dump_state(model, data, batch, outputs, epoch, batch_number));
    }
    ++metrics.anchors;
    metrics.clean_loss += out.clean;
    metrics.robust_loss += out.robust;
    if (out.fallback) ++metrics.fallback_pools;
  }
  if (metrics.anchors == 0) return metrics;
  const double scale = 1.0 / static_cast<double>(metrics.anchors);
  metrics.clean_loss *= scale;
  metrics.robust_loss *= scale;
  metrics.total_loss = metrics.clean_loss + alpha * metrics.robust_loss;

  const std::size_t m = model.encoder.embedding_dim();
  std::vector<Vector> grad_embeddings(B);
  std::optional<ClassifierHead> head_grad;
  std::optional<ElementFeaturizer> featurizer_grad;
  for (std::size_t i : id_order) {
    const AnchorOutput& out = outputs[i];
    if (!out.active) continue;
    for (const auto& [j, g] : out.embedding_grads) {
      if (grad_embeddings[j].empty()) grad_embeddings[j].assign(m, 0.0);
      axpy(scale, g, grad_embeddings[j]);
    }
    if (out.head_grad) add_head_grad(head_grad, *out.head_grad, scale);
    if (out.candidate_grad) add_featurizer_grad(featurizer_grad, *out.candidate_grad, scale);
  }

  // Backward through the encoder per member, then reduce in id order.
  std::vector<std::optional<ElementFeaturizer>> member_grads(B);
  if (model.encoder.featurizer) {
    parallel_for(B, config.workers, [&](std::size_t j) {
      if (grad_embeddings[j].empty()) return;
      EncoderGradients eg = encode_backward(records[j], model.encoder, grad_embeddings[j]);
      member_grads[j] = std::move(eg.featurizer);
    });
    for (std::size_t j : id_order) {
      if (member_grads[j]) add_featurizer_grad(featurizer_grad, *member_grads[j], 1.0);
    }
  }

  std::vector<std::span<double>> params = model.tensors();
  std::vector<std::span<const double>> grads;
  if (model.encoder.featurizer) {
    if (!featurizer_grad) featurizer_grad = ElementFeaturizer::zeros_like(*model.encoder.featurizer);
    for (auto t : std::as_const(*featurizer_grad).tensors()) grads.push_back(t);
  }
  if (model.task == Task::classification) {
    if (!head_grad) head_grad = ClassifierHead(model.head.input_dim(), model.head.num_classes());
    for (auto t : std::as_const(*head_grad).tensors()) grads.push_back(t);
  }
  if (adam.first_moment.empty()) adam = AdamState::for_tensors(params);
  adam_step(params, grads, adam, config.lr);
  return metrics;
}

EpochMetrics train_epoch(const Dataset& data, Model& model, const TrainConfig& config,
                         AdamState& adam, std::size_t epoch) {
  if (data.empty()) throw ValidationError("training data is empty");
  const auto start = std::chrono::steady_clock::now();
  EpochMetrics metrics;
  metrics.epoch = epoch;
  const auto batches = make_batches(data, config, epoch);
  std::size_t anchors = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    StepMetrics step = train_step(data, batches[b], model, config, adam, epoch, b);
    const auto w = static_cast<double>(step.anchors);
    metrics.clean_loss += w * step.clean_loss;
    metrics.robust_loss += w * step.robust_loss;
    anchors += step.anchors;
    metrics.fallback_pools += step.fallback_pools;
    metrics.steps.push_back(step);
  }
  metrics.batches = batches.size();
  if (anchors > 0) {
    metrics.clean_loss /= static_cast<double>(anchors);
    metrics.robust_loss /= static_cast<double>(anchors);
  }
  metrics.total_loss = metrics.clean_loss + config.alpha * metrics.robust_loss;
  metrics.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return metrics;
}

}  // namespace swdrso
