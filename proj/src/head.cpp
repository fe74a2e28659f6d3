#include "swdrso/head.hpp"

#include <algorithm>
#include <cmath>

#include "swdrso/error.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

Vector softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(logits[c] - mx);
    z += p[c];
  }
  for (double& v : p) v /= z;
  return p;
}

namespace {

// Cross-entropy at `target` for the given logits; d loss / d logits into grad.
double cross_entropy(std::span<const double> logits, int target, Vector& grad_logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double log_z = mx + std::log(z);
  grad_logits.assign(logits.size(), 0.0);
  for (std::size_t c = 0; c < logits.size(); ++c) grad_logits[c] = std::exp(logits[c] - log_z);
  grad_logits[static_cast<std::size_t>(target)] -= 1.0;
  return log_z - logits[static_cast<std::size_t>(target)];
}

void check_target(int target, std::size_t classes) {
  if (target < 0 || static_cast<std::size_t>(target) >= classes) {
    throw ValidationError("class " + std::to_string(target) + " out of range [0, " +
                          std::to_string(classes) + ")");
  }
}

}  // namespace

ClassifierHead::ClassifierHead(std::size_t embedding_dim, std::size_t num_classes)
    : weight(embedding_dim, num_classes), bias(num_classes, 0.0) {
  if (num_classes < 2) throw ValidationError("classifier needs at least 2 classes");
}

ClassifierHead ClassifierHead::init(std::size_t embedding_dim, std::size_t num_classes,
                                    std::uint64_t seed, double weight_scale) {
  ClassifierHead head(embedding_dim, num_classes);
  RandomStream rng(seed, "head");
  for (double& w : head.weight.data()) w = weight_scale * rng.normal();
  return head;
}

Vector ClassifierHead::logits(std::span<const double> v) const {
  if (v.size() != input_dim()) {
    throw ValidationError("embedding has dim " + std::to_string(v.size()) + ", head expects " +
                          std::to_string(input_dim()));
  }
  Vector out(bias);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    axpy(v[i], weight.row(i), out);
  }
  return out;
}

Vector ClassifierHead::probabilities(std::span<const double> v) const { return softmax(logits(v)); }

int ClassifierHead::predict(std::span<const double> v) const {
  const Vector l = logits(v);
  return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
}

double ClassifierHead::evaluate(std::span<const double> v, int target,
                                std::span<double> grad_v) const {
  check_target(target, num_classes());
  const Vector l = logits(v);
  Vector gl;
  const double loss = cross_entropy(l, target, gl);
  if (!grad_v.empty()) {
    for (std::size_t i = 0; i < v.size(); ++i) grad_v[i] = dot(weight.row(i), gl);
  }
  return loss;
}

ClassifyResult classify_loss(const ClassifierHead& head, std::span<const double> v, int y) {
  check_target(y, head.num_classes());
  const Vector l = head.logits(v);
  ClassifyResult out;
  Vector gl;
  out.loss = cross_entropy(l, y, gl);
  out.grad_v.resize(v.size());
  out.grad_params = ClassifierHead(head.input_dim(), head.num_classes());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.grad_v[i] = dot(head.weight.row(i), gl);
    if (v[i] != 0.0) axpy(v[i], gl, out.grad_params.weight.row(i));
  }
  out.grad_params.bias = gl;
  return out;
}

MlpHead MlpHead::init(std::size_t embedding_dim, std::size_t hidden_dim, std::size_t num_classes,
                      std::uint64_t seed, double weight_scale) {
  if (num_classes < 2) throw ValidationError("classifier needs at least 2 classes");
  MlpHead h;
  h.weight1 = Matrix(embedding_dim, hidden_dim);
  h.bias1 = Vector(hidden_dim);
  h.weight2 = Matrix(hidden_dim, num_classes);
  h.bias2 = Vector(num_classes);
  RandomStream rng(seed, "mlp_head");
  const double s1 = weight_scale / std::sqrt(static_cast<double>(embedding_dim));
  const double s2 = weight_scale / std::sqrt(static_cast<double>(hidden_dim));
  for (double& w : h.weight1.data()) w = s1 * rng.normal();
  for (double& w : h.bias1) w = 0.5 * weight_scale * rng.normal();
  for (double& w : h.weight2.data()) w = s2 * rng.normal();
  for (double& w : h.bias2) w = 0.5 * weight_scale * rng.normal();
  return h;
}

double MlpHead::evaluate(std::span<const double> v, int target, std::span<double> grad_v) const {
  check_target(target, num_classes());
  if (v.size() != input_dim()) throw ValidationError("embedding dim mismatch for MLP head");
  const std::size_t hid = weight1.cols();
  Vector a(bias1);
  for (std::size_t i = 0; i < v.size(); ++i) axpy(v[i], weight1.row(i), a);
  for (double& x : a) x = std::tanh(x);
  Vector l(bias2);
  for (std::size_t k = 0; k < hid; ++k) axpy(a[k], weight2.row(k), l);
  Vector gl;
  const double loss = cross_entropy(l, target, gl);
  if (!grad_v.empty()) {
    Vector gz(hid);
    for (std::size_t k = 0; k < hid; ++k) gz[k] = dot(weight2.row(k), gl) * (1.0 - a[k] * a[k]);
    for (std::size_t i = 0; i < v.size(); ++i) grad_v[i] = dot(weight1.row(i), gz);
  }
  return loss;
}

TripletResult triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                           std::span<const double> negative, double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw ValidationError("triplet embeddings have different dimensions");
  }
  const std::size_t m = anchor.size();
  TripletResult out;
  out.grad_anchor.assign(m, 0.0);
  out.grad_positive.assign(m, 0.0);
  out.grad_negative.assign(m, 0.0);
  const double raw = squared_distance(anchor, positive) - squared_distance(anchor, negative) + margin;
  if (raw <= 0.0) return out;
  out.loss = raw;
  for (std::size_t i = 0; i < m; ++i) {
    out.grad_anchor[i] = 2.0 * (negative[i] - positive[i]);
    out.grad_positive[i] = -2.0 * (anchor[i] - positive[i]);
    out.grad_negative[i] = 2.0 * (anchor[i] - negative[i]);
  }
  return out;
}

double TripletObjective::evaluate(std::span<const double> v, int, std::span<double> grad_v) const {
  const TripletResult r = triplet_loss(v, positive_, negative_, margin_);
  if (!grad_v.empty()) std::copy(r.grad_anchor.begin(), r.grad_anchor.end(), grad_v.begin());
  return r.loss;
}

}  // namespace swdrso
