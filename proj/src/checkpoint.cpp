#include "swdrso/checkpoint.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "swdrso/error.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

using nlohmann::json;

namespace {

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const json& j) {
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw FormatError("checkpoint: bad float literal '" + s + "'");
  }
  return v;
}

json hex_array(std::span<const double> values) {
  json a = json::array();
  for (double v : values) a.push_back(hex(v));
  return a;
}

Vector read_vector(const json& j) {
  Vector out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(unhex(v));
  return out;
}

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", hex_array(m.data())}};
}

Matrix read_matrix(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  Vector data = read_vector(j.at("data"));
  if (data.size() != m.rows() * m.cols()) throw FormatError("checkpoint: matrix size mismatch");
  m.data() = std::move(data);
  return m;
}

std::string checksum(const std::string& body) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  return buf;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  json body;
  body["config"] = to_json(c.config);
  body["epochs_done"] = c.epochs_done;

  json enc;
  enc["reference"] = matrix_json(c.model.encoder.reference);
  enc["directions"] = matrix_json(c.model.encoder.dirs.matrix());
  enc["direction_seed"] = c.model.encoder.dirs.seed();
  if (c.model.encoder.featurizer) {
    const auto& f = *c.model.encoder.featurizer;
    enc["featurizer"] = {{"weight1", matrix_json(f.weight1)},
                         {"bias1", hex_array(f.bias1)},
                         {"weight2", matrix_json(f.weight2)},
                         {"bias2", hex_array(f.bias2)}};
  }
  body["encoder"] = enc;
  body["head"] = {{"weight", matrix_json(c.model.head.weight)},
                  {"bias", hex_array(c.model.head.bias)},
                  {"margin", hex(c.model.ranking.margin)}};

  json moments1 = json::array(), moments2 = json::array();
  for (const auto& m : c.adam.first_moment) moments1.push_back(hex_array(m));
  for (const auto& v : c.adam.second_moment) moments2.push_back(hex_array(v));
  body["adam"] = {{"step", c.adam.step},
                  {"beta1", hex(c.adam.beta1)},
                  {"beta2", hex(c.adam.beta2)},
                  {"epsilon", hex(c.adam.epsilon)},
                  {"first_moment", moments1},
                  {"second_moment", moments2}};

  const std::string body_text = body.dump();
  json doc;
  doc["format"] = "swdrso-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["checksum"] = checksum(body_text);
  doc["body"] = body;
  return doc.dump(1) + "\n";
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint is truncated or malformed: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "swdrso-checkpoint") throw FormatError("not a checkpoint file");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                        " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const json& body = doc.at("body");
    if (checksum(body.dump()) != doc.at("checksum").get<std::string>()) {
      throw FormatError("checkpoint checksum mismatch");
    }

    Checkpoint c;
    c.config = train_config_from_json(body.at("config"));
    c.epochs_done = body.at("epochs_done").get<std::size_t>();

    const json& enc = body.at("encoder");
    Model& m = c.model;
    m.task = c.config.task;
    m.encoder_mode = c.config.encoder_mode;
    m.encoder.reference = read_matrix(enc.at("reference"));
    m.encoder.dirs = DirectionSet::from_unit_rows(read_matrix(enc.at("directions")),
                                  enc.at("direction_seed").get<std::uint64_t>());
    if (enc.contains("featurizer")) {
      const json& f = enc.at("featurizer");
      ElementFeaturizer feat;
      feat.weight1 = read_matrix(f.at("weight1"));
      feat.bias1 = read_vector(f.at("bias1"));
      feat.weight2 = read_matrix(f.at("weight2"));
      feat.bias2 = read_vector(f.at("bias2"));
      m.encoder.featurizer = std::move(feat);
    }
    const json& head = body.at("head");
    m.head.weight = read_matrix(head.at("weight"));
    m.head.bias = read_vector(head.at("bias"));
    m.ranking.margin = unhex(head.at("margin"));

    const json& adam = body.at("adam");
    c.adam.step = adam.at("step").get<std::uint64_t>();
    c.adam.beta1 = unhex(adam.at("beta1"));
    c.adam.beta2 = unhex(adam.at("beta2"));
    c.adam.epsilon = unhex(adam.at("epsilon"));
    for (const auto& v : adam.at("first_moment")) c.adam.first_moment.push_back(read_vector(v));
    for (const auto& v : adam.at("second_moment")) c.adam.second_moment.push_back(read_vector(v));
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is missing fields: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << serialize_checkpoint(checkpoint);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace swdrso
