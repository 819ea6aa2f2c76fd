#pragma once

// Entropy, Kullback-Leibler divergence and variational distance in bits,
// with their conditional forms. +inf is an ordinary return value.

#include <cmath>
#include <concepts>
#include <map>

#include "typlab/model.hpp"
#include "typlab/table.hpp"

namespace typlab {

/// Binary entropy h_b(p) in bits.
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

template <std::size_t K>
double entropy(const Table<K>& table) {
  CompensatedSum s;
  for (const auto& [key, p] : table) {
    if (p > 0.0) s += -p * std::log2(p);
  }
  return s.value();
}

/// Entropy of a pmf. Geometric tails are summed in closed form; zipf tails
/// are bracketed by an integral bound and the midpoint is reported.
inline Estimate entropy(const Pmf& pmf) {
  CompensatedSum s;
  pmf.for_each_atom([&](Symbol, double p) {
    if (p > 0.0) s += -p * std::log2(p);
  });
  switch (pmf.kind()) {
    case PmfKind::kExplicit:
      return {s.value(), 0.0};
    case PmfKind::kGeometric: {
      const double p = pmf.parameter();
      const auto tail = detail::geometric_tail(p, pmf.truncation_point());
      s += -std::log2(p) * tail.t0 - std::log2(1.0 - p) * tail.t1;
      return {s.value(), 0.0};
    }
    case PmfKind::kZipf: {
      const double sp = pmf.parameter();
      const auto in = detail::power_log_integrals(sp, pmf.truncation_point());
      const double bound = (sp * in.i1 + std::log(pmf.zeta()) * in.i0) / (pmf.zeta() * kLn2);
      s += 0.5 * bound;
      return {s.value(), 0.5 * bound};
    }
  }
  return {s.value(), 0.0};
}

/// D(q || p) where p is given as a mass function over keys.
template <std::size_t K, typename MassFn>
  requires std::invocable<const MassFn&, const Key<K>&>
double kl_divergence(const Table<K>& q, const MassFn& p) {
  CompensatedSum s;
  for (const auto& [key, qv] : q) {
    if (qv <= 0.0) continue;
    const double pv = p(key);
    if (!(pv > 0.0)) return kInf;
    s += qv * std::log2(qv / pv);
  }
  // Clamp rounding noise; divergence is nonnegative.
  return std::max(0.0, s.value());
}

template <std::size_t K>
double kl_divergence(const Table<K>& q, const Table<K>& p) {
  return kl_divergence<K>(q, [&p](const Key<K>& k) { return lookup(p, k); });
}

/// V(q, p) = sum |q - p| over the union of supports.
template <std::size_t K>
double variational_distance(const Table<K>& q, const Table<K>& p) {
  CompensatedSum s;
  auto a = q.begin();
  auto b = p.begin();
  while (a != q.end() || b != p.end()) {
    if (b == p.end() || (a != q.end() && a->first < b->first)) {
      s += std::fabs(a->second);
      ++a;
    } else if (a == q.end() || b->first < a->first) {
      s += std::fabs(b->second);
      ++b;
    } else {
      s += std::fabs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  return s.value();
}

/// H(A | B) where B is the coordinate subset `given`, summed row by row:
/// -sum q(ab) log2( q(ab) / q(b) ). Rows with q(b) = 0 carry no weight.
template <std::size_t K>
double conditional_entropy(const Table<K>& joint, Mask given) {
  const Table<K> cond = padded_marginal(joint, given);
  CompensatedSum s;
  for (const auto& [key, v] : joint) {
    if (v <= 0.0) continue;
    const double qb = lookup(cond, project(key, given));
    s += -v * std::log2(v / qb);
  }
  return std::max(0.0, s.value());
}

/// D(Q_{A|B} || P_{A|B} | Q_B) with B = `given`:
/// sum_b q(b) D(Q_{A|B=b} || P_{A|B=b}). +inf on any absolute-continuity
/// failure in a row with q(b) > 0.
template <std::size_t K>
double conditional_kl(const Table<K>& q, const Table<K>& p, Mask given) {
  const Table<K> qb = padded_marginal(q, given);
  const Table<K> pb = padded_marginal(p, given);
  CompensatedSum s;
  for (const auto& [key, qv] : q) {
    if (qv <= 0.0) continue;
    const Key<K> b = project(key, given);
    const double pbv = lookup(pb, b);
    const double pv = lookup(p, key);
    if (!(pbv > 0.0) || !(pv > 0.0)) return kInf;
    const double q_cond = qv / lookup(qb, b);
    const double p_cond = pv / pbv;
    s += qv * std::log2(q_cond / p_cond);
  }
  return std::max(0.0, s.value());
}

/// Default conditioning for 3-keys (x, y, z): condition X on (Y, Z).
inline constexpr Mask kGivenYZ = 0b110;

/// sqrt(2 ln2 D(q||p)) - V(q,p); nonnegative by Pinsker's inequality.
template <std::size_t K>
double pinsker_gap(const Table<K>& q, const Table<K>& p) {
  const double d = kl_divergence(q, p);
  return std::sqrt(2.0 * kLn2 * d) - variational_distance(q, p);
}

}  // namespace typlab
