#pragma once

// Sparse probability tables keyed by fixed-arity symbol tuples, plus the
// summation and marginalization helpers every other header builds on.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace typlab {

/// Alphabet element index. Countable alphabets are mapped onto the naturals.
using Symbol = std::uint64_t;

template <std::size_t K>
using Key = std::array<Symbol, K>;

/// Sparse table of nonnegative reals; absent keys have value zero.
/// Ordered so that every summation visits atoms in the same order.
template <std::size_t K>
using Table = std::map<Key<K>, double>;

/// Sparse integer count table (the numerator of an empirical type).
template <std::size_t K>
using Counts = std::map<Key<K>, std::uint64_t>;

/// Subset of coordinates, bit i set means coordinate i is kept.
using Mask = unsigned;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530942;

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    if (std::isinf(v)) {
      inf_ += v;
      return;
    }
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }
  double value() const { return inf_ != 0.0 ? inf_ : sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
  double inf_ = 0.0;
};

template <std::size_t K>
constexpr Mask full_mask() {
  return (Mask{1} << K) - 1;
}

/// Zero every coordinate not in `mask`; the result is the key of the
/// corresponding marginal atom in "padded" form.
template <std::size_t K>
Key<K> project(const Key<K>& key, Mask mask) {
  Key<K> out{};
  for (std::size_t i = 0; i < K; ++i) {
    if (mask & (Mask{1} << i)) out[i] = key[i];
  }
  return out;
}

/// Marginal kept at full arity: coordinates outside `mask` are pinned to 0.
/// Entropy and divergence are unaffected by the padding.
template <std::size_t K>
Table<K> padded_marginal(const Table<K>& table, Mask mask) {
  Table<K> out;
  std::map<Key<K>, CompensatedSum> acc;
  for (const auto& [key, v] : table) acc[project(key, mask)] += v;
  for (const auto& [key, s] : acc) out.emplace(key, s.value());
  return out;
}

template <std::size_t K>
Counts<K> padded_marginal(const Counts<K>& counts, Mask mask) {
  Counts<K> out;
  for (const auto& [key, c] : counts) out[project(key, mask)] += c;
  return out;
}

/// Marginal onto the listed coordinates, in the listed order.
template <std::size_t K, std::size_t M>
Table<M> marginalize(const Table<K>& table, const std::array<std::size_t, M>& coords) {
  for (auto c : coords) {
    if (c >= K) throw std::out_of_range("marginalize: coordinate out of range");
  }
  std::map<Key<M>, CompensatedSum> acc;
  for (const auto& [key, v] : table) {
    Key<M> sub{};
    for (std::size_t j = 0; j < M; ++j) sub[j] = key[coords[j]];
    acc[sub] += v;
  }
  Table<M> out;
  for (const auto& [key, s] : acc) out.emplace(key, s.value());
  return out;
}

template <std::size_t K>
double total_mass(const Table<K>& table) {
  CompensatedSum s;
  for (const auto& [key, v] : table) s += v;
  return s.value();
}

template <std::size_t K>
double lookup(const Table<K>& table, const Key<K>& key) {
  auto it = table.find(key);
  return it == table.end() ? 0.0 : it->second;
}

/// Normalized probabilities from integer counts.
template <std::size_t K>
Table<K> to_probabilities(const Counts<K>& counts, std::uint64_t n) {
  Table<K> out;
  const double denom = static_cast<double>(n);
  for (const auto& [key, c] : counts) {
    if (c != 0) out.emplace(key, static_cast<double>(c) / denom);
  }
  return out;
}

}  // namespace typlab
