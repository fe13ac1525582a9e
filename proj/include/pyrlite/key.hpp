#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pyrlite/errors.hpp"

namespace pyrlite {

/// General-purpose PTree key: an integer, a string, or a tuple of keys.
/// Tuples order lexicographically with a proper prefix ordering first.
/// Comparing keys of different kinds throws KeyKindError.
class Key {
 public:
  using Tuple = std::vector<Key>;

  Key() : v_(std::int64_t{0}) {}
  Key(std::int64_t i) : v_(i) {}  // NOLINT(google-explicit-constructor)
  Key(int i) : v_(std::int64_t{i}) {}  // NOLINT(google-explicit-constructor)
  Key(std::string s) : v_(std::move(s)) {}  // NOLINT(google-explicit-constructor)
  Key(const char* s) : v_(std::string(s)) {}  // NOLINT(google-explicit-constructor)
  Key(Tuple t) : v_(std::move(t)) {}  // NOLINT(google-explicit-constructor)
  Key(std::initializer_list<Key> t) : v_(Tuple(t)) {}

  bool is_integer() const noexcept { return v_.index() == 0; }
  bool is_string() const noexcept { return v_.index() == 1; }
  bool is_tuple() const noexcept { return v_.index() == 2; }

  std::int64_t integer() const { return std::get<0>(v_); }
  const std::string& string() const { return std::get<1>(v_); }
  const Tuple& tuple() const { return std::get<2>(v_); }

  friend std::strong_ordering operator<=>(const Key& a, const Key& b) {
    if (a.v_.index() != b.v_.index()) throw KeyKindError("comparison between keys of different kinds");
    switch (a.v_.index()) {
      case 0:
        return a.integer() <=> b.integer();
      case 1: {
        int c = a.string().compare(b.string());
        return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater
                                                          : std::strong_ordering::equal;
      }
      default: {
        const Tuple& x = a.tuple();
        const Tuple& y = b.tuple();
        for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
          auto c = x[i] <=> y[i];
          if (c != 0) return c;
        }
        return x.size() <=> y.size();
      }
    }
  }
  friend bool operator==(const Key& a, const Key& b) { return (a <=> b) == 0; }

 private:
  std::variant<std::int64_t, std::string, Tuple> v_;
};

}  // namespace pyrlite
