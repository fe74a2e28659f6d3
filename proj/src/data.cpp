#include "swdrso/data.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "swdrso/corruption.hpp"
#include "swdrso/error.hpp"
#include "swdrso/random.hpp"

namespace swdrso {

using nlohmann::json;

void SyntheticSpec::validate() const {
  if (n_min < 1) throw ValidationError("n_min must be >= 1");
  if (n_max < n_min) throw ValidationError("n_max must be >= n_min");
  if (classes < 2) throw ValidationError("classes must be >= 2");
  if (dim < 1) throw ValidationError("dim must be >= 1");
  if (prototypes < 1) throw ValidationError("prototypes must be >= 1");
  if (dispersion < 0 || noise < 0 || shift < 0) {
    throw ValidationError("dispersion, noise and shift must be >= 0");
  }
}

namespace {

// prototypes[c] holds the P prototype points of class c.
std::vector<Matrix> make_prototypes(const SyntheticSpec& spec) {
  RandomStream rng(spec.seed, "gen/prototypes");
  std::vector<Matrix> protos;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    Vector center(spec.dim);
    for (double& x : center) x = rng.normal();
    Matrix p(spec.prototypes, spec.dim);
    for (std::size_t j = 0; j < spec.prototypes; ++j) {
      for (std::size_t k = 0; k < spec.dim; ++k) p(j, k) = center[k] + spec.dispersion * rng.normal();
    }
    protos.push_back(std::move(p));
  }
  return protos;
}

Matrix sample_elements(const Matrix& prototypes, const SyntheticSpec& spec, RandomStream& rng) {
  const std::size_t n = spec.n_min + rng.below(spec.n_max - spec.n_min + 1);
  Vector offset(spec.dim, 0.0);
  if (spec.shift > 0.0) {
    for (double& o : offset) o = spec.shift * rng.normal();
  }
  Matrix x(n, spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = prototypes.row(rng.below(prototypes.rows()));
    for (std::size_t k = 0; k < spec.dim; ++k) x(i, k) = offset[k] + p[k] + spec.noise * rng.normal();
  }
  return x;
}

}  // namespace

Dataset gen_classification(const SyntheticSpec& spec) {
  spec.validate();
  const auto protos = make_prototypes(spec);
  Dataset out;
  out.reserve(spec.n_sets);
  for (std::size_t i = 0; i < spec.n_sets; ++i) {
    RandomStream rng(spec.seed, "gen/set", {i});
    const std::size_t c = i % spec.classes;
    SetInstance s;
    s.id = "s" + std::to_string(i);
    s.label = static_cast<int>(c);
    s.elements = sample_elements(protos[c], spec, rng);
    out.push_back(std::move(s));
  }
  return out;
}

RankingData gen_ranking(const RankingSpec& spec) {
  spec.base.validate();
  const SyntheticSpec& base = spec.base;
  const auto protos = make_prototypes(base);
  RankingData out;

  CorruptionSpec light;
  light.ops = {CorruptionOp::erase, CorruptionOp::add};
  light.p = 0.05;

  for (std::size_t q = 0; q < base.n_sets; ++q) {
    RandomStream rng(base.seed, "gen/query", {q});
    const std::size_t c = q % base.classes;
    SetInstance query;
    query.id = "q" + std::to_string(q);
    query.split_tag = SplitTag::clean;
    query.elements = sample_elements(protos[c], base, rng);
    auto& relevant = out.relevance[query.id];
    for (std::size_t r = 0; r < spec.relevant; ++r) {
      SetInstance cand = corrupt(query, light, rng);
      cand.id = query.id + "_rel" + std::to_string(r);
      cand.split_tag = SplitTag::clean;
      relevant.push_back(cand.id);
      out.candidates.push_back(std::move(cand));
    }
    for (std::size_t j = 0; j < spec.distractors_per_query; ++j) {
      const std::size_t other = (c + 1 + rng.below(base.classes - 1)) % base.classes;
      SetInstance cand;
      cand.id = query.id + "_neg" + std::to_string(j);
      cand.split_tag = SplitTag::clean;
      cand.elements = sample_elements(protos[other], base, rng);
      out.candidates.push_back(std::move(cand));
    }
    out.queries.push_back(std::move(query));
  }

  for (std::size_t g = 0; g < spec.train_groups; ++g) {
    RandomStream rng(base.seed, "gen/train_group", {g});
    const std::size_t c = g % base.classes;
    SetInstance root;
    root.id = "g" + std::to_string(g) + "_0";
    root.label = static_cast<int>(g);
    root.elements = sample_elements(protos[c], base, rng);
    Dataset members;
    for (std::size_t j = 1; j < spec.train_group_size; ++j) {
      SetInstance member = corrupt(root, light, rng);
      member.id = "g" + std::to_string(g) + "_" + std::to_string(j);
      members.push_back(std::move(member));
    }
    out.train.push_back(std::move(root));
    for (auto& m : members) out.train.push_back(std::move(m));
  }
  return out;
}

std::string format_record(const SetInstance& set) {
  std::string line = "{\"id\":" + json(set.id).dump();
  if (set.label) line += ",\"label\":" + std::to_string(*set.label);
  line += ",\"split\":\"" + std::string(to_string(set.split_tag)) + "\"";
  line += ",\"elements\":[";
  char buf[32];
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) line += ',';
    line += '[';
    const auto row = set.elements.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) line += ',';
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      line += buf;
    }
    line += ']';
  }
  line += "]}";
  return line;
}

SetInstance parse_record(const std::string& line, std::size_t line_number) {
  const std::string where = "line " + std::to_string(line_number) + ": ";
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(where + "malformed record (" + e.what() + ")");
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("elements") ||
      !j["elements"].is_array()) {
    throw FormatError(where + "record needs a string 'id' and an 'elements' array");
  }
  SetInstance s;
  s.id = j["id"].get<std::string>();
  if (j.contains("label") && !j["label"].is_null()) {
    if (!j["label"].is_number_integer()) throw FormatError(where + "label must be an integer");
    s.label = j["label"].get<int>();
  }
  if (j.contains("split")) {
    try {
      s.split_tag = split_tag_from_string(j["split"].get<std::string>());
    } catch (const std::exception& e) {
      throw FormatError(where + e.what());
    }
  }
  const auto& elems = j["elements"];
  std::size_t dim = 0;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    const auto& row = elems[i];
    if (!row.is_array()) throw FormatError(where + "element " + std::to_string(i) + " is not an array");
    if (i == 0) {
      dim = row.size();
      s.elements = Matrix(0, dim);
    } else if (row.size() != dim) {
      throw FormatError(where + "inconsistent element dimension: element " + std::to_string(i) +
                        " has " + std::to_string(row.size()) + " values, expected " +
                        std::to_string(dim));
    }
    Vector values(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!row[k].is_number()) throw FormatError(where + "non-numeric element value");
      values[k] = row[k].get<double>();
    }
    s.elements.append_row(values);
  }
  return s;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (const auto& s : data) out << format_record(s) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  Dataset out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_record(line, line_number));
  }
  return out;
}

void write_relevance(const std::map<std::string, std::vector<std::string>>& relevance,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (const auto& [query, ids] : relevance) {
    out << json{{"query", query}, {"relevant", ids}}.dump() << '\n';
  }
}

std::map<std::string, std::vector<std::string>> read_relevance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out[j.at("query").get<std::string>()] = j.at("relevant").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace swdrso
