#pragma once

// Seeded sampling under the three generation models: i.i.d. pairs from a
// joint table, X drawn symbol by symbol from p(x|y_i), and i.i.d. (X, Y)
// pairs. Finite pmfs use Vose alias tables; the geometric and zipf families
// are sampled exactly by inversion and rejection, without truncation.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "typlab/model.hpp"
#include "typlab/rng.hpp"
#include "typlab/table.hpp"

namespace typlab {

/// Vose alias table over indices 0..n-1.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw std::invalid_argument("alias table: no weights");
    CompensatedSum total;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("alias table: negative weight");
      total += w;
    }
    if (!(total.value() > 0.0)) throw std::invalid_argument("alias table: zero total weight");
    prob_.assign(n, 1.0);
    alias_.resize(n);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      alias_[i] = i;
      scaled[i] = weights[i] * static_cast<double>(n) / total.value();
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1 up to rounding.
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  std::size_t sample(RngStream& rng) const {
    const auto i = static_cast<std::size_t>(rng.uniform_index(prob_.size()));
    return rng.uniform01() < prob_[i] ? i : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

/// Draws from one Pmf.
class PmfSampler {
 public:
  explicit PmfSampler(const Pmf& pmf) : kind_(pmf.kind()), param_(pmf.parameter()) {
    if (kind_ == PmfKind::kExplicit) {
      std::vector<double> w;
      for (const auto& [x, p] : pmf.atoms()) {
        symbols_.push_back(x);
        w.push_back(p);
      }
      alias_ = AliasTable(w);
    } else if (kind_ == PmfKind::kGeometric) {
      log_q_ = std::log1p(-param_);
    } else {
      b_ = std::pow(2.0, param_ - 1.0);
    }
  }

  Symbol operator()(RngStream& rng) const {
    switch (kind_) {
      case PmfKind::kExplicit:
        return symbols_[alias_.sample(rng)];
      case PmfKind::kGeometric: {
        // Inverse CDF: floor(log U / log(1-p)), U uniform on (0, 1].
        const double u = 1.0 - rng.uniform01();
        return static_cast<Symbol>(std::floor(std::log(u) / log_q_));
      }
      case PmfKind::kZipf:
        return zeta_draw(rng);
    }
    return 0;
  }

 private:
  // Devroye's rejection sampler for the zeta distribution.
  Symbol zeta_draw(RngStream& rng) const {
    const double t = param_ - 1.0;
    for (;;) {
      const double u = rng.uniform_open();
      const double v = rng.uniform01();
      const double x = std::floor(std::pow(u, -1.0 / t));
      if (!(x < 0x1.0p62)) continue;
      const double ratio = std::pow(1.0 + 1.0 / x, t);
      if (v * x * (ratio - 1.0) / (b_ - 1.0) <= ratio / b_) return static_cast<Symbol>(x);
    }
  }

  PmfKind kind_;
  double param_;
  AliasTable alias_;
  std::vector<Symbol> symbols_;
  double log_q_ = 0.0;
  double b_ = 0.0;
};

/// Draws (a, b) pairs from a two-variable table.
class JointSampler2 {
 public:
  explicit JointSampler2(const Table<2>& table) {
    std::vector<double> w;
    for (const auto& [key, p] : table) {
      keys_.push_back(key);
      w.push_back(p);
    }
    alias_ = AliasTable(w);
  }
  explicit JointSampler2(const JointPmf2& joint) : JointSampler2(joint.table()) {}

  Key<2> operator()(RngStream& rng) const { return keys_[alias_.sample(rng)]; }

 private:
  std::vector<Key<2>> keys_;
  AliasTable alias_;
};

/// One PmfSampler per kernel row.
class KernelSampler {
 public:
  explicit KernelSampler(const Kernel& kernel) {
    for (const auto& [y, row] : kernel.rows()) rows_.emplace(y, PmfSampler(row));
  }

  Symbol operator()(Symbol y, RngStream& rng) const {
    auto it = rows_.find(y);
    if (it == rows_.end()) throw ModelError("kernel: no row for y = " + std::to_string(y));
    return it->second(rng);
  }

 private:
  std::map<Symbol, PmfSampler> rows_;
};

struct SequencePair {
  std::vector<Symbol> first;
  std::vector<Symbol> second;
};

/// n i.i.d. draws from a joint table, split into its two coordinates.
inline SequencePair sample_iid_pair(const JointSampler2& sampler, std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("sample_iid_pair: n must be >= 1");
  SequencePair out;
  out.first.resize(n);
  out.second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Key<2> k = sampler(rng);
    out.first[i] = k[0];
    out.second[i] = k[1];
  }
  return out;
}

inline SequencePair sample_iid_pair(const JointPmf2& p_yz, std::size_t n, RngStream& rng) {
  return sample_iid_pair(JointSampler2(p_yz), n, rng);
}

/// X_i ~ p(. | y_i) independently.
inline std::vector<Symbol> sample_conditional(const KernelSampler& kernel, const std::vector<Symbol>& y,
                                              RngStream& rng) {
  std::vector<Symbol> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = kernel(y[i], rng);
  return x;
}

inline std::vector<Symbol> sample_conditional(const Kernel& kernel, const std::vector<Symbol>& y, RngStream& rng) {
  return sample_conditional(KernelSampler(kernel), y, rng);
}

/// (X_i, Y_i) i.i.d. from p(xy).
inline SequencePair sample_joint_pair(const JointPmf2& p_xy, std::size_t n, RngStream& rng) {
  return sample_iid_pair(p_xy, n, rng);
}

/// n i.i.d. draws from one pmf.
inline std::vector<Symbol> sample_iid(const PmfSampler& sampler, std::size_t n, RngStream& rng) {
  std::vector<Symbol> out(n);
  for (auto& v : out) v = sampler(rng);
  return out;
}

}  // namespace typlab
