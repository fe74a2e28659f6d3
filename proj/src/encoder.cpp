#include "swdrso/encoder.hpp"

#include <cmath>

#include "swdrso/error.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

ElementFeaturizer ElementFeaturizer::init(std::size_t input_dim, std::size_t hidden_dim,
                                          std::size_t output_dim, std::uint64_t seed) {
  ElementFeaturizer f;
  f.weight1 = Matrix(input_dim, hidden_dim);
  f.bias1 = Vector(hidden_dim, 0.0);
  f.weight2 = Matrix(hidden_dim, output_dim);
  f.bias2 = Vector(output_dim, 0.0);
  RandomStream rng(seed, "featurizer");
  const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
  const double s2 = std::sqrt(1.0 / static_cast<double>(hidden_dim));
  for (double& w : f.weight1.data()) w = s1 * rng.normal();
  for (double& w : f.weight2.data()) w = s2 * rng.normal();
  return f;
}

ElementFeaturizer ElementFeaturizer::zeros_like(const ElementFeaturizer& other) {
  ElementFeaturizer f;
  f.weight1 = Matrix(other.weight1.rows(), other.weight1.cols());
  f.bias1 = Vector(other.bias1.size(), 0.0);
  f.weight2 = Matrix(other.weight2.rows(), other.weight2.cols());
  f.bias2 = Vector(other.bias2.size(), 0.0);
  return f;
}

std::vector<std::span<double>> ElementFeaturizer::tensors() {
  return {weight1.data(), bias1, weight2.data(), bias2};
}

std::vector<std::span<const double>> ElementFeaturizer::tensors() const {
  return {weight1.data(), bias1, weight2.data(), bias2};
}

Matrix ElementFeaturizer::forward(const Matrix& x, Matrix* hidden_pre) const {
  if (x.cols() != input_dim()) {
    throw ValidationError("featurizer expects input dim " + std::to_string(input_dim()) +
                          ", got " + std::to_string(x.cols()));
  }
  const std::size_t n = x.rows(), hid = hidden_dim(), out = output_dim();
  Matrix z(n, hid);
  Matrix y(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    auto zi = z.row(i);
    for (std::size_t j = 0; j < hid; ++j) zi[j] = bias1[j];
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double xk = x(i, k);
      for (std::size_t j = 0; j < hid; ++j) zi[j] += xk * weight1(k, j);
    }
    auto yi = y.row(i);
    for (std::size_t j = 0; j < out; ++j) yi[j] = bias2[j];
    for (std::size_t k = 0; k < hid; ++k) {
      const double a = zi[k] > 0.0 ? zi[k] : 0.0;
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < out; ++j) yi[j] += a * weight2(k, j);
    }
  }
  if (hidden_pre) *hidden_pre = std::move(z);
  return y;
}

EncoderParams EncoderParams::init(std::size_t input_dim, std::size_t feature_dim,
                                  std::size_t hidden_dim, std::size_t reference_size,
                                  std::size_t num_directions, std::uint64_t seed) {
  if (reference_size == 0 || num_directions == 0 || feature_dim == 0) {
    throw ValidationError("encoder dimensions H, R and d must be positive");
  }
  if (hidden_dim == 0 && input_dim != feature_dim) {
    throw ValidationError("identity featurizer requires input dim == feature dim");
  }
  EncoderParams p;
  p.reference = Matrix(reference_size, feature_dim);
  RandomStream rng(seed, "reference");
  for (double& v : p.reference.data()) v = rng.normal();
  p.dirs = DirectionSet::sample(num_directions, feature_dim, seed);
  if (hidden_dim > 0) {
    p.featurizer = ElementFeaturizer::init(input_dim, hidden_dim, feature_dim, seed);
  }
  return p;
}

std::size_t quantile_index(std::size_t h, std::size_t n, std::size_t H) {
  const std::size_t q = (n * h + H - 1) / H;
  if (q < 1) return 1;
  if (q > n) return n;
  return q;
}

namespace {

void check_params(const EncoderParams& params) {
  if (params.reference.cols() != params.dirs.dim()) {
    throw ValidationError("reference set and directions disagree on dimension");
  }
  if (params.featurizer && params.featurizer->output_dim() != params.dirs.dim()) {
    throw ValidationError("featurizer output dim does not match direction dim");
  }
}

Matrix featurize(const SetInstance& set, const EncoderParams& params, Matrix* hidden_pre) {
  validate_set(set);
  if (set.dim() != params.input_dim()) {
    throw ValidationError("set '" + set.id + "' has element dim " + std::to_string(set.dim()) +
                          ", encoder expects " + std::to_string(params.input_dim()));
  }
  if (params.featurizer) return params.featurizer->forward(set.elements, hidden_pre);
  return set.elements;
}

}  // namespace

SetEmbedding encode(const SetInstance& set, const EncoderParams& params, EncodeRecord* record) {
  check_params(params);
  Matrix hidden_pre;
  Matrix features = featurize(set, params, &hidden_pre);
  const std::size_t n = features.rows();
  const std::size_t H = params.reference_size();
  const std::size_t R = params.num_directions();
  const double scale = 1.0 / std::sqrt(static_cast<double>(R * H));

  SetEmbedding out{Vector(R * H), set.id};
  std::vector<std::size_t> selected(R * H);
  for (std::size_t r = 0; r < R; ++r) {
    const Vector proj = project_values(features, params.dirs[r]);
    const auto order = stable_argsort(proj);
    // Slot h is the h-th smallest reference projection; its OT image under
    // quantile matching is the q_h-th smallest input projection.
    for (std::size_t h = 1; h <= H; ++h) {
      const std::size_t idx = order[quantile_index(h, n, H) - 1];
      out.values[r * H + h - 1] = proj[idx] * scale;
      selected[r * H + h - 1] = idx;
    }
  }
  if (record) {
    record->mode = EncoderMode::sw;
    record->input = set.elements;
    record->hidden_pre = std::move(hidden_pre);
    record->features = std::move(features);
    record->selected = std::move(selected);
    record->embedding_dim = R * H;
    record->valid = true;
  }
  return out;
}

SetEmbedding encode_meanpool(const SetInstance& set, const EncoderParams& params,
                             EncodeRecord* record) {
  check_params(params);
  Matrix hidden_pre;
  Matrix features = featurize(set, params, &hidden_pre);
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  const std::size_t m = params.embedding_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));

  Vector mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) axpy(1.0, features.row(i), mean);
  for (double& v : mean) v /= static_cast<double>(n);

  SetEmbedding out{Vector(m), set.id};
  for (std::size_t i = 0; i < m; ++i) out.values[i] = mean[i % d] * scale;
  if (record) {
    record->mode = EncoderMode::meanpool;
    record->input = set.elements;
    record->hidden_pre = std::move(hidden_pre);
    record->features = std::move(features);
    record->selected.clear();
    record->embedding_dim = m;
    record->valid = true;
  }
  return out;
}

SetEmbedding encode_with(EncoderMode mode, const SetInstance& set, const EncoderParams& params,
                         EncodeRecord* record) {
  return mode == EncoderMode::sw ? encode(set, params, record)
                                 : encode_meanpool(set, params, record);
}

EncoderGradients encode_backward(const EncodeRecord& record, const EncoderParams& params,
                                 std::span<const double> upstream, bool want_element_grads) {
  if (!record.valid || record.embedding_dim != params.embedding_dim() ||
      record.features.cols() != params.feature_dim() ||
      (record.mode == EncoderMode::sw && record.selected.size() != params.embedding_dim())) {
    throw std::logic_error("encode_backward called without a matching forward record");
  }
  if (upstream.size() != params.embedding_dim()) {
    throw ValidationError("upstream gradient has length " + std::to_string(upstream.size()) +
                          ", expected " + std::to_string(params.embedding_dim()));
  }
  const std::size_t n = record.features.rows();
  const std::size_t d = record.features.cols();
  const std::size_t m = params.embedding_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));

  // d loss / d featurized elements.
  Matrix grad_features(n, d);
  if (record.mode == EncoderMode::sw) {
    const std::size_t H = params.reference_size();
    for (std::size_t r = 0; r < params.num_directions(); ++r) {
      const auto dir = params.dirs[r];
      for (std::size_t h = 0; h < H; ++h) {
        const double g = upstream[r * H + h] * scale;
        if (g == 0.0) continue;
        axpy(g, dir, grad_features.row(record.selected[r * H + h]));
      }
    }
  } else {
    Vector grad_mean(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) grad_mean[i % d] += upstream[i] * scale;
    for (double& v : grad_mean) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) axpy(1.0, grad_mean, grad_features.row(i));
  }

  EncoderGradients grads;
  grads.reference = Matrix(params.reference.rows(), params.reference.cols());
  if (!params.featurizer) {
    if (want_element_grads) grads.elements = std::move(grad_features);
    return grads;
  }

  const ElementFeaturizer& f = *params.featurizer;
  ElementFeaturizer gf = ElementFeaturizer::zeros_like(f);
  const std::size_t hid = f.hidden_dim();
  const std::size_t in = f.input_dim();
  if (want_element_grads) grads.elements = Matrix(n, in);
  Vector grad_z(hid);
  for (std::size_t i = 0; i < n; ++i) {
    const auto gy = grad_features.row(i);
    const auto z = record.hidden_pre.row(i);
    for (std::size_t j = 0; j < d; ++j) gf.bias2[j] += gy[j];
    for (std::size_t k = 0; k < hid; ++k) {
      const double a = z[k] > 0.0 ? z[k] : 0.0;
      double ga = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        if (a != 0.0) gf.weight2(k, j) += a * gy[j];
        ga += f.weight2(k, j) * gy[j];
      }
      grad_z[k] = z[k] > 0.0 ? ga : 0.0;
    }
    const auto x = record.input.row(i);
    for (std::size_t k = 0; k < hid; ++k) gf.bias1[k] += grad_z[k];
    for (std::size_t a = 0; a < in; ++a) {
      for (std::size_t k = 0; k < hid; ++k) gf.weight1(a, k) += x[a] * grad_z[k];
    }
    if (want_element_grads) {
      auto gx = grads.elements.row(i);
      for (std::size_t a = 0; a < in; ++a) {
        double s = 0.0;
        for (std::size_t k = 0; k < hid; ++k) s += f.weight1(a, k) * grad_z[k];
        gx[a] = s;
      }
    }
  }
  grads.featurizer = std::move(gf);
  return grads;
}

}  // namespace swdrso
