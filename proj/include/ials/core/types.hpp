#pragma once

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ials/core/error.hpp"

namespace ials {

using Bits = std::vector<std::uint8_t>;

/// Fixed-length binary vector tagged by its role so observations, local states
/// and d-set rows cannot be mixed up.
template <class Tag>
struct BitVector {
  Bits bits;

  BitVector() = default;
  explicit BitVector(Bits b) : bits(std::move(b)) {}
  explicit BitVector(std::size_t n) : bits(n, 0) {}

  std::size_t size() const { return bits.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits[i]; }
  std::uint8_t& operator[](std::size_t i) { return bits[i]; }

  bool operator==(const BitVector&) const = default;
  auto operator<=>(const BitVector&) const = default;

  std::string to_string() const {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
    return s;
  }

  static BitVector from_string(std::string_view s) {
    BitVector v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') {
        v.bits[i] = 1;
      } else if (s[i] != '0') {
        throw ConfigError("bit string may only contain '0' and '1'");
      }
    }
    return v;
  }
};

template <class Tag>
std::ostream& operator<<(std::ostream& os, const BitVector<Tag>& v) {
  return os << v.to_string();
}

struct ObservationTag {};
struct LocalStateTag {};
struct DSetRowTag {};

using Observation = BitVector<ObservationTag>;
using LocalState = BitVector<LocalStateTag>;
using DSetRow = BitVector<DSetRowTag>;

struct Action {
  int index = 0;
  auto operator<=>(const Action&) const = default;
};

/// One class index per influence-source head.
struct InfluenceValue {
  std::vector<int> classes;

  InfluenceValue() = default;
  explicit InfluenceValue(std::vector<int> c) : classes(std::move(c)) {}

  std::size_t size() const { return classes.size(); }
  int operator[](std::size_t m) const { return classes[m]; }
  bool operator==(const InfluenceValue&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const InfluenceValue& u) {
  os << '(';
  for (std::size_t m = 0; m < u.size(); ++m) os << (m ? "," : "") << u[m];
  return os << ')';
}

inline void validate_influence(const InfluenceValue& u, const std::vector<int>& head_classes) {
  if (u.size() != head_classes.size()) {
    throw ShapeError("influence value has " + std::to_string(u.size()) + " heads, expected " +
                     std::to_string(head_classes.size()));
  }
  for (std::size_t m = 0; m < u.size(); ++m) {
    if (u[m] < 0 || u[m] >= head_classes[m]) {
      throw ShapeError("influence head " + std::to_string(m) + " class out of range");
    }
  }
}

}  // namespace ials
