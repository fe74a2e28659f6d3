#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "swdrso/linalg.hpp"
#include "swdrso/measures.hpp"
#include "swdrso/random.hpp"

namespace swdrso::testing {

inline Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m;
  for (const auto& r : values) {
    std::vector<double> v(r);
    m.append_row(v);
  }
  return m;
}

inline SetInstance make_set(std::string id, Matrix elements, std::optional<int> label = {}) {
  SetInstance s;
  s.id = std::move(id);
  s.elements = std::move(elements);
  s.label = label;
  return s;
}

inline SetInstance random_set(const std::string& id, std::size_t n, std::size_t d,
                              RandomStream& rng, double scale = 1.0) {
  Matrix m(n, d);
  for (double& x : m.data()) x = scale * rng.normal();
  return make_set(id, std::move(m));
}

}  // namespace swdrso::testing
