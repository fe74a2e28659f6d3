#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swdrso/linalg.hpp"
#include "swdrso/measures.hpp"

namespace swdrso {

// Per-element MLP applied before pooling: relu(x W1 + b1) W2 + b2.
// Gradients use the same type (one tensor per parameter).
struct ElementFeaturizer {
  Matrix weight1;  // input_dim x hidden_dim
  Vector bias1;
  Matrix weight2;  // hidden_dim x output_dim
  Vector bias2;

  static ElementFeaturizer init(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t output_dim, std::uint64_t seed);
  static ElementFeaturizer zeros_like(const ElementFeaturizer& other);

  std::size_t input_dim() const { return weight1.rows(); }
  std::size_t hidden_dim() const { return weight1.cols(); }
  std::size_t output_dim() const { return weight2.cols(); }

  // Trainable tensors in a fixed order: weight1, bias1, weight2, bias2.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  // Featurizes every row; optionally keeps the hidden pre-activations.
  Matrix forward(const Matrix& x, Matrix* hidden_pre = nullptr) const;
};

enum class EncoderMode { sw, meanpool };

struct EncoderParams {
  Matrix reference;  // H x d, learnable in principle but frozen (see encode_backward)
  DirectionSet dirs;  // R x d, frozen
  std::optional<ElementFeaturizer> featurizer;

  std::size_t reference_size() const { return reference.rows(); }
  std::size_t num_directions() const { return dirs.size(); }
  std::size_t embedding_dim() const { return reference.rows() * dirs.size(); }
  // Dimension the pooling stage works in (featurizer output or raw input).
  std::size_t feature_dim() const { return dirs.dim(); }
  // Dimension of raw elements fed to encode().
  std::size_t input_dim() const {
    return featurizer ? featurizer->input_dim() : dirs.dim();
  }

  // Reference ~ N(0, I), directions ~ normalized N(0, I), featurizer with
  // He-style init. Each part draws from its own labelled stream of `seed`.
  // hidden_dim == 0 means no featurizer (identity).
  static EncoderParams init(std::size_t input_dim, std::size_t feature_dim,
                            std::size_t hidden_dim, std::size_t reference_size,
                            std::size_t num_directions, std::uint64_t seed);
};

struct SetEmbedding {
  Vector values;
  std::string source_id;
};

// One-based index of the input quantile matched to reference rank h:
// ceil(n * h / H), clamped to [1, n].
std::size_t quantile_index(std::size_t h, std::size_t n, std::size_t H);

// Forward trace needed by encode_backward.
struct EncodeRecord {
  EncoderMode mode = EncoderMode::sw;
  Matrix input;
  Matrix hidden_pre;
  Matrix features;
  // For mode sw: element index chosen for embedding slot r*H + h.
  std::vector<std::size_t> selected;
  std::size_t embedding_dim = 0;
  bool valid = false;
};

SetEmbedding encode(const SetInstance& set, const EncoderParams& params,
                    EncodeRecord* record = nullptr);

// Mean of featurized elements, tiled to length R*H and scaled by 1/sqrt(RH).
SetEmbedding encode_meanpool(const SetInstance& set, const EncoderParams& params,
                             EncodeRecord* record = nullptr);

SetEmbedding encode_with(EncoderMode mode, const SetInstance& set, const EncoderParams& params,
                         EncodeRecord* record = nullptr);

struct EncoderGradients {
  // Always zero: the embedding depends on the reference only through its
  // per-slice ordering, which is piecewise constant.
  Matrix reference;
  std::optional<ElementFeaturizer> featurizer;
  // Gradient w.r.t. raw input elements (only when requested).
  Matrix elements;
};

// Backpropagates `upstream` (d loss / d embedding) through a recorded forward
// pass, holding the recorded sort permutations fixed.
EncoderGradients encode_backward(const EncodeRecord& record, const EncoderParams& params,
                                 std::span<const double> upstream,
                                 bool want_element_grads = false);

}  // namespace swdrso
