#pragma once

// Sequences, occurrence counts and empirical types (joint + marginal), and
// the log-likelihood gap of a conditionally drawn sequence in both its
// per-index form and its type decomposition.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "typlab/measures.hpp"
#include "typlab/model.hpp"
#include "typlab/table.hpp"

namespace typlab {

/// Aligned sequences (x, y, z) of common length n >= 1.
class SequenceTriple {
 public:
  SequenceTriple(std::vector<Symbol> x, std::vector<Symbol> y, std::vector<Symbol> z)
      : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)) {
    if (x_.empty()) throw std::invalid_argument("sequence triple: n must be >= 1");
    if (x_.size() != y_.size() || y_.size() != z_.size()) {
      throw std::invalid_argument("sequence triple: lengths differ");
    }
  }

  std::size_t size() const { return x_.size(); }
  const std::vector<Symbol>& x() const { return x_; }
  const std::vector<Symbol>& y() const { return y_; }
  const std::vector<Symbol>& z() const { return z_; }
  Key<3> at(std::size_t i) const { return {x_[i], y_[i], z_[i]}; }

 private:
  std::vector<Symbol> x_, y_, z_;
};

/// N(x, y, z; x, y, z): number of indices i with (x_i, y_i, z_i) = key.
inline std::uint64_t count_occurrences(const SequenceTriple& seqs, const Key<3>& key) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs.at(i) == key) ++n;
  }
  return n;
}

/// Joint type of K aligned sequences, stored as integer counts. All
/// 2^K - 1 marginal count tables are built once at construction.
template <std::size_t K>
class EmpiricalType {
 public:
  explicit EmpiricalType(Counts<K> counts) : counts_(std::move(counts)) {
    std::erase_if(counts_, [](const auto& kv) { return kv.second == 0; });
    for (const auto& [key, c] : counts_) n_ += c;
    if (n_ == 0) throw std::invalid_argument("empirical type: n must be >= 1");
    for (Mask m = 1; m < full_mask<K>(); ++m) marginals_[m] = padded_marginal(counts_, m);
  }

  /// Type of the sequences seqs[0..K-1], all of equal length.
  static EmpiricalType from_sequences(const std::array<std::span<const Symbol>, K>& seqs) {
    const std::size_t n = seqs[0].size();
    for (const auto& s : seqs) {
      if (s.size() != n) throw std::invalid_argument("empirical type: lengths differ");
    }
    Counts<K> counts;
    for (std::size_t i = 0; i < n; ++i) {
      Key<K> key{};
      for (std::size_t j = 0; j < K; ++j) key[j] = seqs[j][i];
      ++counts[key];
    }
    return EmpiricalType(std::move(counts));
  }

  std::uint64_t n() const { return n_; }
  const Counts<K>& counts() const { return counts_; }

  std::uint64_t count(const Key<K>& key) const {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }

  /// Counts of the marginal on `mask`, keys padded with zeros.
  const Counts<K>& marginal_counts(Mask mask) const {
    if (mask == full_mask<K>()) return counts_;
    if (mask == 0 || mask > full_mask<K>()) throw std::out_of_range("empirical type: bad mask");
    return marginals_[mask];
  }

  /// q(.) of the full joint.
  Table<K> q() const { return to_probabilities(counts_, n_); }
  /// q(.) of the marginal on `mask` (padded keys).
  Table<K> q(Mask mask) const { return to_probabilities(marginal_counts(mask), n_); }

 private:
  Counts<K> counts_;
  std::uint64_t n_ = 0;
  std::array<Counts<K>, (std::size_t{1} << K)> marginals_{};
};

using JointType = EmpiricalType<3>;

inline JointType empirical_type(const SequenceTriple& seqs) {
  return JointType::from_sequences({std::span<const Symbol>(seqs.x()), std::span<const Symbol>(seqs.y()),
                                    std::span<const Symbol>(seqs.z())});
}

inline EmpiricalType<2> pair_type(std::span<const Symbol> a, std::span<const Symbol> b) {
  return EmpiricalType<2>::from_sequences({a, b});
}

inline EmpiricalType<1> single_type(std::span<const Symbol> a) { return EmpiricalType<1>::from_sequences({a}); }

struct LoglikGap {
  double gap = 0.0;
  /// Some observed x_i has p(x_i | y_i) = 0; gap is then +inf.
  bool zero_probability = false;
};

/// n^{-1} E[sum_i A_i] - n^{-1} sum_i A_i with A_i = log2 p(x_i | y_i), the
/// expectation taken under x_i ~ p(. | y_i) for the given y.
inline LoglikGap loglik_gap(const SequenceTriple& seqs, const MarkovTriple& triple) {
  const auto n = static_cast<double>(seqs.size());
  std::map<Symbol, std::uint64_t> y_counts;
  CompensatedSum observed;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const Symbol y = seqs.y()[i];
    const double p = triple.kernel().row(y).mass(seqs.x()[i]);
    if (!(p > 0.0)) return {kInf, true};
    observed += std::log2(p);
    ++y_counts[y];
  }
  // sum_x p(x|y) log2 p(x|y) = -H(P_{X|Y=y}), grouped by N(y; y).
  CompensatedSum expected;
  for (const auto& [y, c] : y_counts) {
    expected += -static_cast<double>(c) * entropy(triple.kernel().row(y)).value;
  }
  return {expected.value() / n - observed.value() / n, false};
}

/// The same gap rebuilt from the joint type:
/// sum_{yz} q(yz) [ D(Q_{X|yz} || P_{X|yz}) + H(Q_{X|yz}) - H(P_{X|yz}) ].
inline LoglikGap loglik_gap_from_type(const JointType& type, const MarkovTriple& triple) {
  const auto n = static_cast<double>(type.n());
  const Counts<3>& yz_counts = type.marginal_counts(kGivenYZ);
  // Group joint counts by their (y, z) row; keys are ordered (x, y, z).
  std::map<Key<2>, std::vector<std::pair<Symbol, std::uint64_t>>> rows;
  for (const auto& [key, c] : type.counts()) rows[{key[1], key[2]}].emplace_back(key[0], c);

  CompensatedSum total;
  for (const auto& [yz, xs] : rows) {
    const auto row_n = static_cast<double>(yz_counts.at(Key<3>{0, yz[0], yz[1]}));
    const Pmf& row = triple.kernel().row(yz[0]);
    CompensatedSum div, ent;
    for (const auto& [x, c] : xs) {
      const double qx = static_cast<double>(c) / row_n;
      const double px = row.mass(x);
      if (!(px > 0.0)) return {kInf, true};
      div += qx * std::log2(qx / px);
      ent += -qx * std::log2(qx);
    }
    const double weight = row_n / n;
    total += weight * (div.value() + ent.value() - entropy(row).value);
  }
  return {total.value(), false};
}

}  // namespace typlab
