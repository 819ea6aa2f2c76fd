#pragma once

// Unified typicality scores: one divergence term plus |H(Q_S) - H(P_S)| for
// every nonempty variable subset S, reported term by term. Also the
// two-term shortcut (divergence + joint entropy gap) and the weak-typicality
// baseline.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "typlab/empirical.hpp"
#include "typlab/measures.hpp"
#include "typlab/model.hpp"
#include "typlab/table.hpp"

namespace typlab {

/// Reference law P over K labelled variables: exact (untruncated) masses of
/// every marginal and the cached entropy of every marginal.
template <std::size_t K>
class Reference {
 public:
  using MarginalMass = std::function<double(Mask, const Key<K>&)>;

  Reference(std::array<char, K> labels, MarginalMass mass, std::array<double, (1u << K)> entropies)
      : labels_(labels), mass_(std::move(mass)), entropies_(entropies) {}

  /// Reference backed by an explicit (possibly truncated) table.
  static Reference from_table(const Table<K>& p, std::array<char, K> labels) {
    std::array<Table<K>, (1u << K)> marginals;
    std::array<double, (1u << K)> entropies{};
    for (Mask m = 1; m <= full_mask<K>(); ++m) {
      marginals[m] = m == full_mask<K>() ? p : padded_marginal(p, m);
      entropies[m] = entropy(marginals[m]);
    }
    auto shared = std::make_shared<const std::array<Table<K>, (1u << K)>>(std::move(marginals));
    return Reference(labels, [shared](Mask m, const Key<K>& k) { return lookup((*shared)[m], project(k, m)); },
                     entropies);
  }

  double mass(const Key<K>& key) const { return mass_(full_mask<K>(), key); }
  double marginal_mass(Mask mask, const Key<K>& key) const { return mass_(mask, project(key, mask)); }
  double entropy_of(Mask mask) const { return entropies_.at(mask); }

  std::string label(Mask mask) const {
    std::string s;
    for (std::size_t i = 0; i < K; ++i) {
      if (mask & (Mask{1} << i)) s += labels_[i];
    }
    return s;
  }
  const std::array<char, K>& labels() const { return labels_; }

  /// Marginal reference on the listed coordinates (in order).
  template <std::size_t M>
  Reference<M> marginal(const std::array<std::size_t, M>& coords) const {
    std::array<char, M> labels{};
    for (std::size_t j = 0; j < M; ++j) labels[j] = labels_[coords[j]];
    auto lift_mask = [coords](Mask sub) {
      Mask m = 0;
      for (std::size_t j = 0; j < M; ++j) {
        if (sub & (Mask{1} << j)) m |= Mask{1} << coords[j];
      }
      return m;
    };
    std::array<double, (1u << M)> entropies{};
    for (Mask sub = 1; sub <= full_mask<M>(); ++sub) entropies[sub] = entropies_[lift_mask(sub)];
    auto mass = mass_;
    return Reference<M>(
        labels,
        [mass, coords, lift_mask](Mask sub, const Key<M>& k) {
          Key<K> full{};
          for (std::size_t j = 0; j < M; ++j) {
            if (sub & (Mask{1} << j)) full[coords[j]] = k[j];
          }
          return mass(lift_mask(sub), full);
        },
        entropies);
  }

 private:
  std::array<char, K> labels_;
  MarginalMass mass_;
  std::array<double, (1u << K)> entropies_{};
};

/// Reference for a Markov triple with coordinates (X, Y, Z). Masses are
/// exact for any symbol; entropies of X-free marginals come from the side
/// table, H(XYZ) and H(XY) from the chain rule with per-row entropies, and
/// H(X), H(XZ) from the tabulated induced joint.
inline Reference<3> reference_from(const MarkovTriple& triple) {
  struct Data {
    MarkovTriple model;
    Table<2> side_y;                                    // keyed (y, 0)
    Table<2> side_z;                                    // keyed (0, z)
    std::vector<std::pair<Symbol, double>> y_marginal;  // p(y)
    std::map<Symbol, std::vector<std::pair<Symbol, double>>> y_given_z;  // z -> [(y, p(yz))]
  };
  auto data = std::make_shared<Data>(Data{triple, {}, {}, {}, {}});
  const Table<2>& side = triple.side().table();
  data->side_y = padded_marginal(side, 0b01);
  data->side_z = padded_marginal(side, 0b10);
  for (const auto& [k, p] : data->side_y) data->y_marginal.emplace_back(k[0], p);
  for (const auto& [k, p] : side) data->y_given_z[k[1]].emplace_back(k[0], p);

  std::array<double, 8> h{};
  CompensatedSum h_x_given_y;
  for (const auto& [y, py] : data->y_marginal) h_x_given_y += py * entropy(triple.kernel().row(y)).value;
  h[0b110] = entropy(side);
  h[0b010] = entropy(data->side_y);
  h[0b100] = entropy(data->side_z);
  h[0b111] = h[0b110] + h_x_given_y.value();
  h[0b011] = h[0b010] + h_x_given_y.value();
  const InducedJoint joint = induced_joint(triple);
  h[0b001] = entropy(padded_marginal(joint.table, 0b001));
  h[0b101] = entropy(padded_marginal(joint.table, 0b101));

  auto mass = [data](Mask m, const Key<3>& k) -> double {
    const Kernel& kernel = data->model.kernel();
    switch (m) {
      case 0b111: return data->model.mass(k);
      case 0b110: return data->model.side().mass(k[1], k[2]);
      case 0b010: return lookup(data->side_y, Key<2>{k[1], 0});
      case 0b100: return lookup(data->side_z, Key<2>{0, k[2]});
      case 0b011: return lookup(data->side_y, Key<2>{k[1], 0}) * kernel.mass(k[0], k[1]);
      case 0b001: {
        CompensatedSum s;
        for (const auto& [y, py] : data->y_marginal) s += py * kernel.mass(k[0], y);
        return s.value();
      }
      case 0b101: {
        auto it = data->y_given_z.find(k[2]);
        if (it == data->y_given_z.end()) return 0.0;
        CompensatedSum s;
        for (const auto& [y, pyz] : it->second) s += pyz * kernel.mass(k[0], y);
        return s.value();
      }
      default: return 0.0;
    }
  };
  return Reference<3>({'X', 'Y', 'Z'}, mass, h);
}

enum class Combine { kSum, kMax };

/// Itemized score. For kSum reports, total = divergence_term + sum of the
/// entropy terms; for kMax (weak baseline), total = max of the terms.
struct TypicalityReport {
  std::string variant;
  Combine combine = Combine::kSum;
  double divergence_term = 0.0;
  std::vector<std::pair<std::string, double>> entropy_terms;
  double total = 0.0;
  std::optional<double> threshold;
  bool member = false;

  double term(const std::string& label) const {
    if (label == "D") return divergence_term;
    for (const auto& [l, v] : entropy_terms) {
      if (l == label) return v;
    }
    throw std::out_of_range("report has no term " + label);
  }
};

namespace detail {

// Subset order of the itemized terms: joint first, then pairs, then singles.
template <std::size_t K>
std::vector<Mask> term_order() {
  if constexpr (K == 3) {
    return {0b111, 0b011, 0b110, 0b101, 0b001, 0b010, 0b100};
  } else {
    std::vector<Mask> masks;
    for (Mask m = 1; m <= full_mask<K>(); ++m) masks.push_back(m);
    std::stable_sort(masks.begin(), masks.end(),
                     [](Mask a, Mask b) { return std::popcount(a) > std::popcount(b); });
    return masks;
  }
}

template <std::size_t K>
double finalize_sum(TypicalityReport& r) {
  CompensatedSum s;
  s += r.divergence_term;
  for (const auto& [l, v] : r.entropy_terms) s += v;
  r.total = s.value();
  return r.total;
}

template <std::size_t K, typename MarginalQ>
TypicalityReport unified_score(const MarginalQ& q_of, const Reference<K>& p, std::vector<Mask> masks,
                               std::string variant) {
  TypicalityReport r;
  r.variant = std::move(variant);
  const Table<K> joint = q_of(full_mask<K>());
  r.divergence_term = kl_divergence<K>(joint, [&p](const Key<K>& k) { return p.mass(k); });
  for (Mask m : masks) {
    const double hq = m == full_mask<K>() ? entropy(joint) : entropy(q_of(m));
    r.entropy_terms.emplace_back(p.label(m), std::fabs(hq - p.entropy_of(m)));
  }
  finalize_sum<K>(r);
  return r;
}

template <std::size_t K>
auto marginal_source(const EmpiricalType<K>& type) {
  return [&type](Mask m) { return type.q(m); };
}

template <std::size_t K>
auto marginal_source(const Table<K>& q) {
  return [&q](Mask m) { return m == full_mask<K>() ? q : padded_marginal(q, m); };
}

}  // namespace detail

/// D(Q||P) + sum over all 2^K - 1 nonempty subsets S of |H(Q_S) - H(P_S)|.
/// For K = 3 these are exactly the eight summands of the unified jointly
/// typical set; K = 2 and K = 1 give the reduced sets with the absent
/// variables dropped.
template <std::size_t K>
TypicalityReport unified_score(const EmpiricalType<K>& type, const Reference<K>& p) {
  return detail::unified_score<K>(detail::marginal_source(type), p, detail::term_order<K>(),
                                  "unified" + std::to_string(K));
}

template <std::size_t K>
TypicalityReport unified_score(const Table<K>& q, const Reference<K>& p) {
  return detail::unified_score<K>(detail::marginal_source(q), p, detail::term_order<K>(),
                                  "unified" + std::to_string(K));
}

inline TypicalityReport unified_score3(const JointType& type, const Reference<3>& p) { return unified_score(type, p); }

inline TypicalityReport unified_score2(const EmpiricalType<2>& type, const Reference<2>& p) {
  return unified_score(type, p);
}

inline TypicalityReport unified_score2(const EmpiricalType<2>& type, const JointPmf2& p, std::array<char, 2> labels = {'Y', 'Z'}) {
  return unified_score(type, Reference<2>::from_table(p.table(), labels));
}

/// D(Q||P) + |H(Q) - H(P)| of the full joint only.
template <std::size_t K>
TypicalityReport two_term_score(const EmpiricalType<K>& type, const Reference<K>& p) {
  return detail::unified_score<K>(detail::marginal_source(type), p, {full_mask<K>()}, "two_term");
}

template <std::size_t K>
TypicalityReport two_term_score(const Table<K>& q, const Reference<K>& p) {
  return detail::unified_score<K>(detail::marginal_source(q), p, {full_mask<K>()}, "two_term");
}

/// Weak-typicality baseline: max over nonempty subsets S of
/// | sum_s -q_S(s) log2 p_S(s) - H(P_S) |, i.e. the per-subset deviation of
/// the normalized log-likelihood, written as a function of the type.
template <std::size_t K, typename MarginalQ>
TypicalityReport weak_score_impl(const MarginalQ& q_of, const Reference<K>& p) {
  TypicalityReport r;
  r.variant = "weak";
  r.combine = Combine::kMax;
  double worst = 0.0;
  for (Mask m : detail::term_order<K>()) {
    const Table<K> q = q_of(m);
    CompensatedSum loglik;
    bool infinite = false;
    for (const auto& [key, qv] : q) {
      const double pv = p.marginal_mass(m, key);
      if (!(pv > 0.0)) {
        infinite = true;
        break;
      }
      loglik += -qv * std::log2(pv);
    }
    const double dev = infinite ? kInf : std::fabs(loglik.value() - p.entropy_of(m));
    r.entropy_terms.emplace_back(p.label(m), dev);
    worst = std::max(worst, dev);
  }
  r.total = worst;
  return r;
}

template <std::size_t K>
TypicalityReport weak_score(const EmpiricalType<K>& type, const Reference<K>& p) {
  return weak_score_impl<K>(detail::marginal_source(type), p);
}

template <std::size_t K>
TypicalityReport weak_score(const Table<K>& q, const Reference<K>& p) {
  return weak_score_impl<K>(detail::marginal_source(q), p);
}

/// Type of a subset of the sequences, re-keyed onto the listed coordinates.
template <std::size_t K, std::size_t M>
EmpiricalType<M> project_type(const EmpiricalType<K>& type, const std::array<std::size_t, M>& coords) {
  Counts<M> out;
  for (const auto& [key, c] : type.counts()) {
    Key<M> sub{};
    for (std::size_t j = 0; j < M; ++j) sub[j] = key[coords[j]];
    out[sub] += c;
  }
  return EmpiricalType<M>(std::move(out));
}

/// All the reference laws a Markov-triple experiment scores against.
struct ModelReferences {
  explicit ModelReferences(const MarkovTriple& triple)
      : xyz(reference_from(triple)),
        xy(xyz.marginal<2>({0, 1})),
        yz(xyz.marginal<2>({1, 2})),
        xz(xyz.marginal<2>({0, 2})),
        z(xyz.marginal<1>({2})) {}

  Reference<3> xyz;
  Reference<2> xy, yz, xz;
  Reference<1> z;
};

enum class Variant { kUnified3, kUnified2, kUnified1, kTwoTerm, kWeak };

inline std::optional<Variant> parse_variant(const std::string& s) {
  if (s == "unified3") return Variant::kUnified3;
  if (s == "unified2") return Variant::kUnified2;
  if (s == "unified1") return Variant::kUnified1;
  if (s == "two_term") return Variant::kTwoTerm;
  if (s == "weak") return Variant::kWeak;
  return std::nullopt;
}

/// Membership test with `total <= threshold` (boundary included).
/// unified2 scores the (Y, Z) part of the type, unified1 the Z part.
inline TypicalityReport is_typical(const JointType& type, const ModelReferences& refs, double threshold,
                                   Variant variant) {
  if (!(threshold > 0.0)) throw std::invalid_argument("is_typical: threshold must be > 0");
  TypicalityReport r;
  switch (variant) {
    case Variant::kUnified3: r = unified_score(type, refs.xyz); break;
    case Variant::kUnified2: r = unified_score(project_type<3, 2>(type, {1, 2}), refs.yz); break;
    case Variant::kUnified1: r = unified_score(project_type<3, 1>(type, {2}), refs.z); break;
    case Variant::kTwoTerm: r = two_term_score(type, refs.xyz); break;
    case Variant::kWeak: r = weak_score(type, refs.xyz); break;
  }
  r.threshold = threshold;
  r.member = r.total <= threshold;
  return r;
}

inline TypicalityReport is_typical(const SequenceTriple& seqs, const ModelReferences& refs, double threshold,
                                   Variant variant) {
  return is_typical(empirical_type(seqs), refs, threshold, variant);
}

/// Generic membership for an already computed report.
inline TypicalityReport with_threshold(TypicalityReport r, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be > 0");
  r.threshold = threshold;
  r.member = r.total <= threshold;
  return r;
}

/// Projection property: membership in the XYZ set at level gamma implies
/// membership in the XY, YZ and XZ sets at the same gamma.
inline bool consistency_check(const JointType& type, const ModelReferences& refs, double gamma) {
  if (unified_score(type, refs.xyz).total > gamma) return true;
  return unified_score(project_type<3, 2>(type, {0, 1}), refs.xy).total <= gamma &&
         unified_score(project_type<3, 2>(type, {1, 2}), refs.yz).total <= gamma &&
         unified_score(project_type<3, 2>(type, {0, 2}), refs.xz).total <= gamma;
}

inline bool consistency_check(const SequenceTriple& seqs, const MarkovTriple& triple, double gamma) {
  return consistency_check(empirical_type(seqs), ModelReferences(triple), gamma);
}

}  // namespace typlab
