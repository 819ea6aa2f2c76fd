#pragma once

// Distributions over countable alphabets: explicit finite pmfs, the
// geometric and zeta (zipf) families with certified truncation, conditional
// kernels p(x|y), and Markov-factored triples p(xyz) = p(x|y) p(yz).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "typlab/table.hpp"

namespace typlab {

inline constexpr double kDefaultTailEps = 1e-12;
inline constexpr double kNormalizationTol = 1e-12;
inline constexpr double kDefaultMomentCap = 1e6;
/// Most terms a streamed tail summation may visit before giving up.
inline constexpr std::uint64_t kMaxSummationTerms = 100'000'000;
/// Most atoms a single tabulated (materialized) pmf may hold.
inline constexpr std::uint64_t kMaxTableAtoms = 2'000'000;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A tail summation could not reach the requested residual within the cap.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conditional law violates the log-moment bound (or its sum diverges).
class BoundViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Truncated infinite sum: `value` is the best estimate, the true sum lies
/// within [value - error, value + error].
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

enum class PmfKind { kExplicit, kGeometric, kZipf };

/// Probability mass function over the naturals.
///
/// Geometric(p):  p(k) = (1-p)^k p,          k >= 0.
/// Zipf(s):       p(k) = k^{-s} / zeta(s),   k >= 1 (requires s > 1).
class Pmf {
 public:
  static Pmf from_atoms(std::vector<Symbol> support, std::vector<double> probs,
                        double tail_eps = kDefaultTailEps) {
    if (support.size() != probs.size()) {
      throw ModelError("explicit pmf: support and probs differ in length");
    }
    if (support.empty()) throw ModelError("explicit pmf: empty support");
    std::vector<std::pair<Symbol, double>> atoms;
    atoms.reserve(support.size());
    CompensatedSum total;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (!(probs[i] >= 0.0) || probs[i] > 1.0) {
        throw ModelError("explicit pmf: probs[" + std::to_string(i) + "] outside [0,1]");
      }
      atoms.emplace_back(support[i], probs[i]);
      total += probs[i];
    }
    std::sort(atoms.begin(), atoms.end());
    for (std::size_t i = 1; i < atoms.size(); ++i) {
      if (atoms[i].first == atoms[i - 1].first) {
        throw ModelError("explicit pmf: duplicate support symbol " + std::to_string(atoms[i].first));
      }
    }
    if (std::fabs(total.value() - 1.0) > kNormalizationTol) {
      throw ModelError("explicit pmf: probs sum to " + std::to_string(total.value()));
    }
    std::erase_if(atoms, [](const auto& a) { return a.second == 0.0; });
    Pmf pmf(PmfKind::kExplicit, 0.0, tail_eps);
    pmf.atoms_ = std::move(atoms);
    return pmf;
  }

  static Pmf point_mass(Symbol x) { return from_atoms({x}, {1.0}); }

  /// Bernoulli on {0,1} with P(1) = p1.
  static Pmf bernoulli(double p1) {
    if (p1 == 0.0) return point_mass(0);
    if (p1 == 1.0) return point_mass(1);
    return from_atoms({0, 1}, {1.0 - p1, p1});
  }

  static Pmf geometric(double p, double tail_eps = kDefaultTailEps) {
    if (!(p > 0.0 && p < 1.0)) throw ModelError("geometric: p must lie in (0,1)");
    Pmf pmf(PmfKind::kGeometric, p, tail_eps);
    // Smallest K with (1-p)^{K+1} <= tail_eps.
    const double r = 1.0 - p;
    double k = std::ceil(std::log(tail_eps) / std::log(r)) - 1.0;
    if (!(k < static_cast<double>(kMaxSummationTerms))) {
      throw TruncationError("geometric: truncation point exceeds iteration cap");
    }
    auto kk = static_cast<std::uint64_t>(std::max(0.0, k));
    while (kk > 0 && std::pow(r, static_cast<double>(kk)) <= tail_eps) --kk;
    while (std::pow(r, static_cast<double>(kk + 1)) > tail_eps) ++kk;
    pmf.cutoff_ = kk;
    pmf.residual_ = std::pow(r, static_cast<double>(kk + 1));
    return pmf;
  }

  static Pmf zipf(double s, double tail_eps = kDefaultTailEps) {
    if (!(s > 1.0) || !std::isfinite(s)) throw ModelError("zipf: s must be > 1");
    Pmf pmf(PmfKind::kZipf, s, tail_eps);
    pmf.zeta_ = std::riemann_zeta(s);
    // sum_{k>K} k^{-s} <= K^{1-s}/(s-1).
    const double t = s - 1.0;
    const double k = std::ceil(std::pow(tail_eps * t * pmf.zeta_, -1.0 / t));
    if (!(k < static_cast<double>(kMaxSummationTerms))) {
      throw TruncationError("zipf: truncation point exceeds iteration cap (raise tail_eps)");
    }
    pmf.cutoff_ = std::max<std::uint64_t>(16, static_cast<std::uint64_t>(k));
    pmf.residual_ = std::pow(static_cast<double>(pmf.cutoff_), -t) / (t * pmf.zeta_);
    return pmf;
  }

  PmfKind kind() const { return kind_; }
  /// p for geometric, s for zipf, 0 for explicit.
  double parameter() const { return param_; }
  double tail_eps() const { return tail_eps_; }
  bool finite_support() const { return kind_ == PmfKind::kExplicit; }

  /// p(x); closed form for parametric families, never truncated.
  double mass(Symbol x) const {
    switch (kind_) {
      case PmfKind::kExplicit: {
        auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                                   [](const auto& a, Symbol v) { return a.first < v; });
        return (it != atoms_.end() && it->first == x) ? it->second : 0.0;
      }
      case PmfKind::kGeometric:
        return std::pow(1.0 - param_, static_cast<double>(x)) * param_;
      case PmfKind::kZipf:
        if (x == 0) return 0.0;
        return std::pow(static_cast<double>(x), -param_) / zeta_;
    }
    return 0.0;
  }

  /// Largest tabulated symbol k*; every summation stops there.
  Symbol truncation_point() const {
    return kind_ == PmfKind::kExplicit ? atoms_.back().first : cutoff_;
  }

  /// Mass beyond the truncation point: exact for geometric, an upper bound
  /// for zipf, zero for explicit pmfs.
  double residual_mass() const { return residual_; }

  /// Visit (symbol, probability) for every tabulated atom in symbol order.
  void for_each_atom(const std::function<void(Symbol, double)>& fn) const {
    if (kind_ == PmfKind::kExplicit) {
      for (const auto& [x, p] : atoms_) fn(x, p);
      return;
    }
    const Symbol first = kind_ == PmfKind::kZipf ? 1 : 0;
    for (Symbol k = first; k <= cutoff_; ++k) fn(k, mass(k));
  }

  /// Materialized atoms up to the truncation point.
  std::vector<std::pair<Symbol, double>> atoms() const {
    if (kind_ == PmfKind::kExplicit) return atoms_;
    if (cutoff_ + 1 > kMaxTableAtoms) {
      throw TruncationError("pmf tabulation exceeds atom cap (raise tail_eps)");
    }
    std::vector<std::pair<Symbol, double>> out;
    out.reserve(cutoff_ + 1);
    for_each_atom([&](Symbol k, double p) { out.emplace_back(k, p); });
    return out;
  }

  Table<1> table() const {
    Table<1> t;
    for (const auto& [x, p] : atoms()) t.emplace(Key<1>{x}, p);
    return t;
  }

  /// Normalizing constant of the zipf family (zeta(s)); 0 otherwise.
  double zeta() const { return zeta_; }

 private:
  Pmf(PmfKind kind, double param, double tail_eps) : kind_(kind), param_(param), tail_eps_(tail_eps) {
    if (!(tail_eps > 0.0 && tail_eps < 1.0)) throw ModelError("tail_eps must lie in (0,1)");
  }

  PmfKind kind_;
  double param_;
  double tail_eps_;
  std::vector<std::pair<Symbol, double>> atoms_;
  Symbol cutoff_ = 0;
  double residual_ = 0.0;
  double zeta_ = 0.0;
};

namespace detail {

// Tail moments of a geometric law: sum_{k>K} p r^k k^j for j = 0, 1, 2.
struct GeometricTail {
  double t0, t1, t2;
};

inline GeometricTail geometric_tail(double p, Symbol cutoff) {
  const double r = 1.0 - p;
  const double k1 = static_cast<double>(cutoff) + 1.0;
  const double t0 = std::pow(r, k1);
  const double mean_shift = r / p;
  const double second_shift = r * (1.0 + r) / (p * p);
  return {t0, t0 * (k1 + mean_shift), t0 * (k1 * k1 + 2.0 * k1 * mean_shift + second_shift)};
}

// Integrals int_K^inf x^{-s} (ln x)^j dx for j = 0, 1, 2.
struct PowerLogIntegrals {
  double i0, i1, i2;
};

inline PowerLogIntegrals power_log_integrals(double s, Symbol cutoff) {
  const double t = s - 1.0;
  const double lk = std::log(static_cast<double>(cutoff));
  const double base = std::pow(static_cast<double>(cutoff), -t);
  return {base / t, base * (lk / t + 1.0 / (t * t)),
          base * (lk * lk / t + 2.0 * lk / (t * t) + 2.0 / (t * t * t))};
}

}  // namespace detail

/// Sum_x p(x) (log2 p(x))^2 for one pmf. The returned value is an upper
/// estimate for zipf rows (tail bound added), exact up to rounding otherwise.
inline Estimate log_moment(const Pmf& pmf) {
  CompensatedSum s;
  pmf.for_each_atom([&](Symbol, double p) {
    if (p > 0.0) {
      const double l = std::log2(p);
      s += p * l * l;
    }
  });
  switch (pmf.kind()) {
    case PmfKind::kExplicit:
      return {s.value(), 0.0};
    case PmfKind::kGeometric: {
      const double p = pmf.parameter();
      const double a = -std::log2(p);
      const double b = -std::log2(1.0 - p);
      const auto tail = detail::geometric_tail(p, pmf.truncation_point());
      s += a * a * tail.t0 + 2.0 * a * b * tail.t1 + b * b * tail.t2;
      return {s.value(), 0.0};
    }
    case PmfKind::kZipf: {
      const double sp = pmf.parameter();
      const double c = std::log(pmf.zeta());
      const auto in = detail::power_log_integrals(sp, pmf.truncation_point());
      const double bound = (sp * sp * in.i2 + 2.0 * sp * c * in.i1 + c * c * in.i0) / (pmf.zeta() * kLn2 * kLn2);
      s += bound;
      return {s.value(), bound};
    }
  }
  return {s.value(), 0.0};
}

/// Conditional law p(x|y): one pmf row per conditioning symbol.
class Kernel {
 public:
  Kernel() = default;
  explicit Kernel(std::map<Symbol, Pmf> rows) : rows_(std::move(rows)) {}

  void set_row(Symbol y, Pmf row) { rows_.insert_or_assign(y, std::move(row)); }
  bool has_row(Symbol y) const { return rows_.count(y) != 0; }

  const Pmf& row(Symbol y) const {
    auto it = rows_.find(y);
    if (it == rows_.end()) throw ModelError("kernel: no row for y = " + std::to_string(y));
    return it->second;
  }

  /// p(x|y); zero when the row is absent.
  double mass(Symbol x, Symbol y) const {
    auto it = rows_.find(y);
    return it == rows_.end() ? 0.0 : it->second.mass(x);
  }

  const std::map<Symbol, Pmf>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

 private:
  std::map<Symbol, Pmf> rows_;
};

/// sup_y sum_x p(x|y) (log2 p(x|y))^2, in bits^2.
/// Throws BoundViolation when a row exceeds `cap` or its sum does not converge.
inline double check_log_moment_bound(const Kernel& kernel, double cap = kDefaultMomentCap) {
  if (kernel.empty()) throw ModelError("kernel: no rows");
  double sup = 0.0;
  for (const auto& [y, row] : kernel.rows()) {
    Estimate m;
    try {
      m = log_moment(row);
    } catch (const TruncationError& e) {
      throw BoundViolation("log-moment sum for row y = " + std::to_string(y) + " did not converge: " + e.what());
    }
    if (!std::isfinite(m.value) || m.value > cap) {
      throw BoundViolation("log-moment bound violated at row y = " + std::to_string(y));
    }
    sup = std::max(sup, m.value);
  }
  return sup;
}

/// Two-variable table, possibly a truncation of an infinite joint law.
class JointPmf2 {
 public:
  JointPmf2() = default;

  /// `tail_allowance` widens the normalization check for truncated tables.
  explicit JointPmf2(Table<2> table, double tail_allowance = 0.0) : table_(std::move(table)) {
    if (table_.empty()) throw ModelError("joint pmf: empty table");
    CompensatedSum total;
    for (const auto& [key, v] : table_) {
      if (!(v >= 0.0) || v > 1.0) throw ModelError("joint pmf: entry outside [0,1]");
      total += v;
    }
    std::erase_if(table_, [](const auto& kv) { return kv.second == 0.0; });
    const double sum = total.value();
    if (std::fabs(sum - 1.0) > kNormalizationTol + tail_allowance) {
      throw ModelError("joint pmf: entries sum to " + std::to_string(sum));
    }
    residual_ = std::max(0.0, 1.0 - sum);
  }

  const Table<2>& table() const { return table_; }
  double mass(Symbol a, Symbol b) const { return lookup(table_, Key<2>{a, b}); }
  /// Mass missing from the table.
  double residual() const { return residual_; }

 private:
  Table<2> table_;
  double residual_ = 0.0;
};

/// Product of a finite (or truncated) pmf with itself on the diagonal: the
/// joint law of (Y, Z) with Z = Y.
inline JointPmf2 diagonal_joint(const Pmf& pmf) {
  Table<2> t;
  for (const auto& [y, p] : pmf.atoms()) t.emplace(Key<2>{y, y}, p);
  return JointPmf2(std::move(t), pmf.residual_mass());
}

/// Joint law of (Y, Z) with Y ~ marginal and Z drawn from `channel` given Y.
inline JointPmf2 joint_from_channel(const Pmf& marginal, const Kernel& channel) {
  Table<2> t;
  double residual = marginal.residual_mass();
  for (const auto& [y, py] : marginal.atoms()) {
    const Pmf& row = channel.row(y);
    for (const auto& [z, pz] : row.atoms()) t.emplace(Key<2>{y, z}, py * pz);
    residual += py * row.residual_mass();
  }
  return JointPmf2(std::move(t), residual);
}

/// Tabulated p(xyz) with the mass left out by truncation.
struct InducedJoint {
  Table<3> table;
  double residual = 0.0;
};

/// Joint law P_XYZ with X - Y - Z, stored in factored form.
/// Coordinates of every 3-key are ordered (x, y, z).
class MarkovTriple {
 public:
  MarkovTriple(JointPmf2 side, Kernel kernel, double moment_cap = kDefaultMomentCap)
      : side_(std::move(side)), kernel_(std::move(kernel)) {
    for (const auto& [yz, p] : side_.table()) {
      if (p > 0.0 && !kernel_.has_row(yz[0])) {
        throw ModelError("markov triple: kernel has no row for y = " + std::to_string(yz[0]));
      }
    }
    c_ = check_log_moment_bound(kernel_, moment_cap);
    // H(P_XYZ) = H(P_YZ) + sum_y p(y) H(P_{X|Y=y}); each row has H <= 0.5 + C.
    if (!std::isfinite(c_)) throw ModelError("markov triple: moment bound is not finite");
  }

  const JointPmf2& side() const { return side_; }
  const Kernel& kernel() const { return kernel_; }
  /// The log-moment bound C (bits^2).
  double moment_bound() const { return c_; }

  /// p(x|y) p(yz), untruncated.
  double mass(Symbol x, Symbol y, Symbol z) const {
    const double pyz = side_.mass(y, z);
    return pyz == 0.0 ? 0.0 : pyz * kernel_.mass(x, y);
  }
  double mass(const Key<3>& k) const { return mass(k[0], k[1], k[2]); }

 private:
  JointPmf2 side_;
  Kernel kernel_;
  double c_ = 0.0;
};

/// Tabulate p(x|y) p(yz) over the side table and each row's truncation.
inline InducedJoint induced_joint(const MarkovTriple& triple) {
  InducedJoint out;
  CompensatedSum residual;
  residual += triple.side().residual();
  std::uint64_t atoms = 0;
  for (const auto& [yz, pyz] : triple.side().table()) {
    const Pmf& row = triple.kernel().row(yz[0]);
    if (!row.finite_support()) {
      atoms += row.truncation_point() + 1;
      if (atoms > kMaxTableAtoms) throw TruncationError("induced joint: table exceeds atom cap");
    }
    row.for_each_atom([&](Symbol x, double px) {
      if (px > 0.0) out.table.emplace(Key<3>{x, yz[0], yz[1]}, px * pyz);
    });
    residual += pyz * row.residual_mass();
  }
  out.residual = residual.value();
  return out;
}

}  // namespace typlab
