#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "swdrso/adversary.hpp"
#include "swdrso/data.hpp"
#include "swdrso/encoder.hpp"
#include "swdrso/head.hpp"

namespace swdrso {

enum class Task { classification, ranking };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);
std::string_view to_string(EncoderMode mode);
EncoderMode encoder_mode_from_string(std::string_view name);

// Defaults: d = H = 128, R = 32, rho = 0.1, K = 4, T = 2, eta = 0.1,
// alpha = 0.5, lr = 1e-3.
struct TrainConfig {
  Task task = Task::classification;
  EncoderMode encoder_mode = EncoderMode::sw;
  double alpha = 0.5;
  double lr = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdversaryConfig adversary;

  std::size_t input_dim = 128;
  std::size_t d = 128;       // element feature dim seen by the encoder
  std::size_t hidden = 128;  // featurizer width; 0 disables the featurizer
  std::size_t H = 128;
  std::size_t R = 32;

  std::size_t num_classes = 2;  // classification
  double margin = 1.0;          // ranking
  std::size_t workers = 1;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
// Missing fields keep their defaults; unknown fields are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct Model {
  Task task = Task::classification;
  EncoderMode encoder_mode = EncoderMode::sw;
  EncoderParams encoder;
  ClassifierHead head;  // classification only
  RankingHead ranking;

  static Model init(const TrainConfig& config);

  SetEmbedding embed(const SetInstance& set, EncodeRecord* record = nullptr) const;

  // Trainable tensors in a fixed order: featurizer (if any), then head.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;

  static AdamState for_tensors(std::span<const std::span<double>> params);
};

// Bias-corrected Adam update applied in place.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state, double lr);

struct StepMetrics {
  double clean_loss = 0.0;   // mean over contributing anchors
  double robust_loss = 0.0;  // mean over contributing anchors
  double total_loss = 0.0;   // clean + alpha * robust
  std::size_t anchors = 0;
  std::size_t fallback_pools = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double clean_loss = 0.0;
  double robust_loss = 0.0;
  double total_loss = 0.0;
  double seconds = 0.0;
  std::size_t batches = 0;
  std::size_t fallback_pools = 0;
  std::vector<StepMetrics> steps;
};

nlohmann::json to_json(const EpochMetrics& metrics);

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, nlohmann::json state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const nlohmann::json& state() const { return state_; }

 private:
  nlohmann::json state_;
};

// Minibatches (as dataset indices) for one epoch, deterministic from
// (seed, epoch). Ranking batches keep label groups together.
std::vector<std::vector<std::size_t>> make_batches(const Dataset& data, const TrainConfig& config,
                                                   std::size_t epoch);

// One minibatch of the robust objective followed by one Adam step.
StepMetrics train_step(const Dataset& data, std::span<const std::size_t> batch, Model& model,
                       const TrainConfig& config, AdamState& adam, std::size_t epoch,
                       std::size_t batch_number);

EpochMetrics train_epoch(const Dataset& data, Model& model, const TrainConfig& config,
                         AdamState& adam, std::size_t epoch);

}  // namespace swdrso
