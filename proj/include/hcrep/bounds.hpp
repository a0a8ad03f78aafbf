#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcrep/hierarchy.hpp"
#include "hcrep/ratio.hpp"

namespace hcrep {

/// Parameters shared by all three representations.
struct CommonParams {
  int k = 0;
  int l_max = 0;
  std::int64_t m = 0;  ///< reps per concept
  Ratio q{0};          ///< per-neuron failure probability
  Ratio zeta{0};       ///< Chernoff concentration
  Ratio r1{0};
  Ratio r2{1};

  Ratio p() const { return Ratio(1) - q; }

  void validate() const {
    auto in_unit = [](Ratio x) { return x >= Ratio(0) && x <= Ratio(1); };
    if (k < 1) throw std::invalid_argument("params: k must be >= 1");
    if (l_max < 1) throw std::invalid_argument("params: l_max must be >= 1");
    if (m < 1) throw std::invalid_argument("params: m must be >= 1");
    if (!in_unit(q)) throw std::invalid_argument("params: q must lie in [0,1]");
    if (!in_unit(zeta)) throw std::invalid_argument("params: zeta must lie in [0,1]");
    if (!in_unit(r1) || !in_unit(r2)) throw std::invalid_argument("params: r1 and r2 must lie in [0,1]");
    if (r1 > r2) throw std::invalid_argument("params: invariant r1 ≤ r2 violated (r1 = " + r1.str() + ", r2 = " + r2.str() + ")");
  }
};

/// Connectivity coefficients for the low-connectivity and lateral representations.
struct ConnectivityParams {
  Ratio a{1};
  Ratio a1{1};
  Ratio a2{0};
  std::int64_t m1 = 0;  ///< Class-1 reps per concept
  std::int64_t m2 = 0;  ///< Class-2 reps per concept

  /// Low connectivity only: every rep is Class 1.
  static ConnectivityParams low(Ratio a, std::int64_t m) { return {a, a, Ratio(0), m, 0}; }

  void validate_low() const {
    if (a < Ratio(0) || a > Ratio(1)) throw std::invalid_argument("connectivity: a must lie in [0,1]");
  }

  void validate(const CommonParams& cp) const {
    validate_low();
    if (a1 < Ratio(0) || a1 > a) throw std::invalid_argument("connectivity: invariant a1 ≤ a violated (need 0 ≤ a1 ≤ a)");
    if (a2 < Ratio(0) || a2 > Ratio(1)) throw std::invalid_argument("connectivity: a2 must lie in [0,1]");
    if (a2 < (a - a1) * Ratio(cp.k))
      throw std::invalid_argument("connectivity: invariant a2 ≥ (a − a1)k violated (a2 = " + a2.str() +
                                  ", (a − a1)k = " + ((a - a1) * Ratio(cp.k)).str() + ")");
    if (m1 < 0 || m2 < 0 || m1 + m2 != cp.m)
      throw std::invalid_argument("connectivity: invariant m1 + m2 = m violated");
  }
};

/// Exact formula, or the worked-example pipeline that replaces
/// (k^(l+1)-1)/(k-1) by k^l and rounds each exponent to one decimal.
enum class Pipeline { Exact, PaperStyle };

inline const char* to_string(Pipeline p) { return p == Pipeline::Exact ? "exact" : "paper-style"; }

/// Pr[X <= (1 - zeta) mu] <= exp(-mu zeta^2 / 2).
inline double chernoff_lower_tail(double mu, double zeta) {
  if (!(mu > 0)) throw std::invalid_argument("chernoff_lower_tail: mu must be > 0");
  return std::exp(-mu * zeta * zeta / 2.0);
}

inline Ratio tau_high(const CommonParams& cp) {
  return cp.r2 * Ratio(cp.k) * Ratio(cp.m) * cp.p() * (Ratio(1) - cp.zeta);
}
inline Ratio tau_low(const CommonParams& cp, Ratio a) { return a * tau_high(cp); }
inline Ratio tau_lateral(const CommonParams& cp, Ratio a) { return tau_low(cp, a); }

/// 1 - p(1 - zeta).
inline Ratio epsilon(const CommonParams& cp) { return Ratio(1) - cp.p() * (Ratio(1) - cp.zeta); }

/// (1 - epsilon) m = m p (1 - zeta): reps that must fire for success.
inline Ratio firing_floor(const CommonParams& cp) { return Ratio(cp.m) * cp.p() * (Ratio(1) - cp.zeta); }

/// Addends of delta_l. Which slots are used depends on the representation:
/// survival of reps, Class-1 forward incidence, Class-2 forward incidence,
/// Class-2 lateral incidence. Values are kept as logarithms so very large
/// exponents stay representable.
struct DeltaTerms {
  std::array<double, 4> log_terms{-INFINITY, -INFINITY, -INFINITY, -INFINITY};

  double term(std::size_t i) const { return std::exp(log_terms.at(i)); }
  double log_total() const {
    const double mx = *std::max_element(log_terms.begin(), log_terms.end());
    if (mx == -INFINITY) return -INFINITY;
    double s = 0;
    for (const double t : log_terms) s += std::exp(t - mx);
    return mx + std::log(s);
  }
  double total() const { return std::exp(log_total()); }
};

namespace detail {

inline double log_of_count(double x) { return x <= 0 ? -INFINITY : std::log(x); }

inline double round1(double x) { return std::round(x * 10.0) / 10.0; }

/// Number of descendants of a level-l concept, or its worked-example stand-in k^l.
inline double descendants_factor(int k, int level, Pipeline pl) {
  if (level < 0) return 0;
  if (pl == Pipeline::PaperStyle) return std::pow(static_cast<double>(k), level);
  if (k == 1) return level + 1.0;
  return (std::pow(static_cast<double>(k), level + 1) - 1.0) / (k - 1.0);
}

/// mu * zeta^2 / 2 with mu = coeff * m * p.
inline double exponent(const CommonParams& cp, Ratio coeff, Pipeline pl) {
  const double z = cp.zeta.to_double();
  const double e = coeff.to_double() * static_cast<double>(cp.m) * cp.p().to_double() * z * z / 2.0;
  return pl == Pipeline::PaperStyle ? round1(e) : e;
}

inline double log_term(double count, double expo) {
  if (count <= 0) return -INFINITY;
  return std::log(count) - expo;
}

inline DeltaTerms level_terms(const CommonParams& cp, int level, Ratio a, Ratio a1, Ratio a2, double m1,
                              double m2, Pipeline pl) {
  DeltaTerms t;
  const double k = cp.k;
  t.log_terms[0] = log_term(descendants_factor(cp.k, level, pl), exponent(cp, Ratio(1), pl));
  if (level >= 1) {
    const double inner = descendants_factor(cp.k, level - 1, pl);
    t.log_terms[1] = log_term(inner * k * m1, exponent(cp, a, pl));
    t.log_terms[2] = log_term(inner * k * m2, exponent(cp, a1, pl));
    t.log_terms[3] = log_term(inner * m2, exponent(cp, a2, pl));
  }
  return t;
}

}  // namespace detail

inline std::vector<DeltaTerms> delta_terms_high(const CommonParams& cp, Pipeline pl = Pipeline::Exact) {
  std::vector<DeltaTerms> out;
  for (int l = 0; l <= cp.l_max; ++l) out.push_back(detail::level_terms(cp, l, Ratio(1), Ratio(1), Ratio(0), 0, 0, pl));
  return out;
}

inline std::vector<DeltaTerms> delta_terms_low(const CommonParams& cp, Ratio a, Pipeline pl = Pipeline::Exact) {
  std::vector<DeltaTerms> out;
  const double m = static_cast<double>(cp.m);
  for (int l = 0; l <= cp.l_max; ++l) out.push_back(detail::level_terms(cp, l, a, a, Ratio(0), m, 0, pl));
  return out;
}

inline std::vector<DeltaTerms> delta_terms_lateral(const CommonParams& cp, const ConnectivityParams& conn,
                                                   Pipeline pl = Pipeline::Exact) {
  std::vector<DeltaTerms> out;
  for (int l = 0; l <= cp.l_max; ++l)
    out.push_back(detail::level_terms(cp, l, conn.a, conn.a1, conn.a2, static_cast<double>(conn.m1),
                                      static_cast<double>(conn.m2), pl));
  return out;
}

inline std::vector<double> totals(const std::vector<DeltaTerms>& terms) {
  std::vector<double> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.total());
  return out;
}

/// delta_l = (k^(l+1)-1)/(k-1) exp(-m p zeta^2 / 2), for l = 0..l_max.
inline std::vector<double> delta_ff_high(const CommonParams& cp, Pipeline pl = Pipeline::Exact) {
  return totals(delta_terms_high(cp, pl));
}

/// Adds (k^l-1)/(k-1) k m exp(-a m p zeta^2 / 2) for l >= 1.
inline std::vector<double> delta_ff_low(const CommonParams& cp, Ratio a, Pipeline pl = Pipeline::Exact) {
  return totals(delta_terms_low(cp, a, pl));
}

inline std::vector<double> delta_lateral(const CommonParams& cp, const ConnectivityParams& conn,
                                         Pipeline pl = Pipeline::Exact) {
  return totals(delta_terms_lateral(cp, conn, pl));
}

enum class ReprKind { HighFF, LowFF, Lateral };

inline const char* to_string(ReprKind k) {
  switch (k) {
    case ReprKind::HighFF: return "high";
    case ReprKind::LowFF: return "low";
    case ReprKind::Lateral: return "lateral";
  }
  return "?";
}

struct BoundsReport {
  ReprKind kind = ReprKind::HighFF;
  Pipeline pipeline = Pipeline::Exact;
  Ratio tau;
  Ratio epsilon;
  Ratio firing_floor;
  std::vector<double> delta;          ///< raw, may exceed 1
  std::vector<double> delta_clamped;  ///< clamped to [0, 1]
  std::vector<double> log_delta;
  std::vector<DeltaTerms> terms;
};

inline BoundsReport bounds_report(ReprKind kind, const CommonParams& cp, const ConnectivityParams& conn,
                                  Pipeline pl = Pipeline::Exact) {
  cp.validate();
  BoundsReport r;
  r.kind = kind;
  r.pipeline = pl;
  r.epsilon = epsilon(cp);
  r.firing_floor = firing_floor(cp);
  switch (kind) {
    case ReprKind::HighFF:
      r.tau = tau_high(cp);
      r.terms = delta_terms_high(cp, pl);
      break;
    case ReprKind::LowFF:
      conn.validate_low();
      r.tau = tau_low(cp, conn.a);
      r.terms = delta_terms_low(cp, conn.a, pl);
      break;
    case ReprKind::Lateral:
      conn.validate(cp);
      r.tau = tau_lateral(cp, conn.a);
      r.terms = delta_terms_lateral(cp, conn, pl);
      break;
  }
  for (const auto& t : r.terms) {
    r.log_delta.push_back(t.log_total());
    r.delta.push_back(t.total());
    r.delta_clamped.push_back(std::clamp(t.total(), 0.0, 1.0));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Binomial tails

inline double log_binomial_pmf(std::int64_t n, double p, std::int64_t i) {
  if (i < 0 || i > n) return -INFINITY;
  if (p <= 0) return i == 0 ? 0.0 : -INFINITY;
  if (p >= 1) return i == n ? 0.0 : -INFINITY;
  const double dn = static_cast<double>(n), di = static_cast<double>(i);
  return std::lgamma(dn + 1) - std::lgamma(di + 1) - std::lgamma(dn - di + 1) + di * std::log(p) +
         (dn - di) * std::log1p(-p);
}

/// log Pr[Bin(n, p) >= t], accumulated with log-sum-exp.
inline double log_binomial_upper_tail(std::int64_t n, double p, std::int64_t t) {
  if (t <= 0) return 0.0;
  if (t > n) return -INFINITY;
  double mx = -INFINITY;
  for (std::int64_t i = t; i <= n; ++i) mx = std::max(mx, log_binomial_pmf(n, p, i));
  if (mx == -INFINITY) return -INFINITY;
  double s = 0;
  for (std::int64_t i = t; i <= n; ++i) s += std::exp(log_binomial_pmf(n, p, i) - mx);
  return std::min(0.0, mx + std::log(s));
}

inline double binomial_upper_tail(std::int64_t n, double p, std::int64_t t) {
  return std::exp(log_binomial_upper_tail(n, p, t));
}

struct Constraint2Terms {
  double pr_a = 0;        ///< every group has >= ceil(a m) chosen
  double pr_b = 0;        ///< >= ceil(b k m) chosen in total
  double pr_a_and_b = 0;
  double conditional = 0; ///< Pr(A | B)
  double ratio = 0;       ///< Pr(A) / Pr(B); equals the conditional only when A ⊆ B
  bool a_subset_b = false;
};

/// Bridging experiment between per-child and total in-degree: k groups of m
/// edges, each present with probability p_prime.
///
/// A ⊆ B holds only when k*ceil(a m) >= ceil(b k m); otherwise Pr(A)/Pr(B)
/// is not a conditional probability (it can exceed 1), so the conditional is
/// computed from the exact distribution of the total restricted to A.
inline Constraint2Terms constraint2_terms(int k, std::int64_t m, double p_prime, Ratio a, Ratio b) {
  if (k < 1 || m < 1) throw std::invalid_argument("constraint2: k and m must be >= 1");
  if (a > b) throw std::invalid_argument("constraint2: requires a ≤ b");
  if (a < Ratio(0) || b > Ratio(1)) throw std::invalid_argument("constraint2: need 0 ≤ a ≤ b ≤ 1");
  if (!(p_prime >= 0 && p_prime <= 1)) throw std::invalid_argument("constraint2: p_prime must lie in [0,1]");
  const std::int64_t per_group = ceil_mul(a, m);
  const std::int64_t total_need = ceil_mul(b, k * m);

  Constraint2Terms out;
  const double log_a1 = log_binomial_upper_tail(m, p_prime, per_group);
  const double log_b = log_binomial_upper_tail(k * m, p_prime, total_need);
  out.pr_a = std::exp(k * log_a1);
  out.pr_b = std::exp(log_b);
  out.a_subset_b = static_cast<std::int64_t>(k) * per_group >= total_need;
  if (out.pr_b <= 0) throw std::domain_error("constraint2: Pr(B) = 0, constraint unsatisfiable");
  out.ratio = std::exp(k * log_a1 - log_b);

  // Distribution of the total, restricted to each group meeting its quota.
  std::vector<long double> group(static_cast<std::size_t>(m) + 1, 0.0L);
  for (std::int64_t i = std::max<std::int64_t>(per_group, 0); i <= m; ++i)
    group[static_cast<std::size_t>(i)] = std::exp(static_cast<long double>(log_binomial_pmf(m, p_prime, i)));
  std::vector<long double> dist{1.0L};
  for (int g = 0; g < k; ++g) {
    std::vector<long double> next(dist.size() + static_cast<std::size_t>(m), 0.0L);
    for (std::size_t s = 0; s < dist.size(); ++s) {
      if (dist[s] == 0) continue;
      for (std::size_t i = 0; i < group.size(); ++i) next[s + i] += dist[s] * group[i];
    }
    dist = std::move(next);
  }
  long double joint = 0;
  for (std::size_t s = static_cast<std::size_t>(std::max<std::int64_t>(total_need, 0)); s < dist.size(); ++s) joint += dist[s];
  out.pr_a_and_b = static_cast<double>(joint);
  out.conditional = std::min(1.0, static_cast<double>(joint / static_cast<long double>(out.pr_b)));
  return out;
}

/// Pr(A | B) of the bridging experiment; see constraint2_terms.
inline double constraint2_analytic(int k, std::int64_t m, double p_prime, Ratio a, Ratio b) {
  return constraint2_terms(k, m, p_prime, a, b).conditional;
}

}  // namespace hcrep
