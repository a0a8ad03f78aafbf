#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcrep/bounds.hpp"
#include "hcrep/hierarchy.hpp"
#include "hcrep/network.hpp"
#include "hcrep/stats.hpp"

namespace hcrep {

enum class SamplingMode { ExactQuota, Bernoulli };

inline const char* to_string(SamplingMode s) { return s == SamplingMode::ExactQuota ? "exact-quota" : "bernoulli"; }

struct ReprSpec {
  ReprKind kind = ReprKind::HighFF;
  CommonParams common;
  ConnectivityParams conn;
  SamplingMode sampling = SamplingMode::ExactQuota;
  double p_prime = 1.0;             ///< edge probability in Bernoulli mode
  std::int64_t max_attempts = 1000; ///< redraws per under-quota group before giving up
  std::uint64_t seed = 0;
  std::optional<ConceptId> scope;   ///< wire only this subtree
};

class InfeasibleSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void fill_exact(Rng& rng, std::span<Word> blk, std::int64_t m, std::int64_t quota) {
  std::fill(blk.begin(), blk.end(), Word{0});
  if (quota >= m) {
    for (std::int64_t b = 0; b < m; ++b) set_bit(blk, static_cast<std::size_t>(b));
    return;
  }
  for (const std::int64_t b : sample_without_replacement(rng, m, std::max<std::int64_t>(quota, 0)))
    set_bit(blk, static_cast<std::size_t>(b));
}

/// Bernoulli(p) bits over `allowed` positions, redrawn until at least `quota` are set.
inline void fill_bernoulli(Rng& rng, std::span<Word> blk, const std::vector<std::int64_t>& allowed, double p,
                           std::int64_t quota, std::int64_t max_attempts, BuildInfo& info) {
  std::bernoulli_distribution coin(p);
  for (std::int64_t attempt = 0; attempt < max_attempts; ++attempt) {
    std::fill(blk.begin(), blk.end(), Word{0});
    std::int64_t n = 0;
    for (const std::int64_t b : allowed)
      if (coin(rng)) {
        set_bit(blk, static_cast<std::size_t>(b));
        ++n;
      }
    if (n >= quota) return;
    ++info.rejections;
  }
  throw std::runtime_error("build: bernoulli sampling exceeded " + std::to_string(max_attempts) +
                           " attempts for one incidence set (quota " + std::to_string(quota) + ")");
}

inline std::vector<std::int64_t> iota_positions(std::int64_t from, std::int64_t to) {
  std::vector<std::int64_t> v;
  for (std::int64_t i = from; i < to; ++i) v.push_back(i);
  return v;
}

inline std::shared_ptr<const ConceptHierarchy> hierarchy_for(const CommonParams& cp, std::int64_t n) {
  return std::make_shared<const ConceptHierarchy>(HierarchyParams{cp.k, cp.l_max, n});
}

}  // namespace detail

/// Full connectivity: every rep of every child feeds every parent rep.
inline LayeredNetwork build_high(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp,
                                 std::optional<ConceptId> scope = std::nullopt) {
  cp.validate();
  LayeredNetwork net(std::move(h), cp, ReprKind::HighFF, scope);
  for (const ConceptId& c : net.wired_concepts())
    for (std::int64_t j = 0; j < cp.m; ++j)
      for (int g = 0; g < cp.k; ++g) {
        auto blk = net.ff_block(c, j, g);
        for (std::int64_t b = 0; b < cp.m; ++b) set_bit(blk, static_cast<std::size_t>(b));
      }
  net.set_tau(tau_high(cp));
  net.set_learn_tau(Ratio(cp.k) * Ratio(cp.m));
  return net;
}

/// Each (rep, child) pair gets at least ceil(a m) weight-1 edges.
inline LayeredNetwork build_low(std::shared_ptr<const ConceptHierarchy> h, const ReprSpec& spec) {
  const CommonParams& cp = spec.common;
  cp.validate();
  spec.conn.validate_low();
  LayeredNetwork net(std::move(h), cp, ReprKind::LowFF, spec.scope);
  net.set_connectivity(ConnectivityParams::low(spec.conn.a, cp.m));
  net.build_info() = {to_string(spec.sampling), spec.seed, 0};
  Rng rng = make_rng(spec.seed, 0x10);
  const std::int64_t quota = ceil_mul(spec.conn.a, cp.m);
  const auto all = detail::iota_positions(0, cp.m);
  for (const ConceptId& c : net.wired_concepts())
    for (std::int64_t j = 0; j < cp.m; ++j)
      for (int g = 0; g < cp.k; ++g) {
        if (spec.sampling == SamplingMode::ExactQuota)
          detail::fill_exact(rng, net.ff_block(c, j, g), cp.m, quota);
        else
          detail::fill_bernoulli(rng, net.ff_block(c, j, g), all, spec.p_prime, quota, spec.max_attempts,
                                 net.build_info());
      }
  net.set_tau(tau_low(cp, spec.conn.a));
  net.set_learn_tau(spec.conn.a * Ratio(cp.k) * Ratio(cp.m));
  return net;
}

/// Class 1 = rep positions [0, m1), Class 2 = [m1, m). Class-2 reps get
/// ceil(a1 m) edges per child and ceil(a2 m) lateral edges from Class-1 peers.
inline LayeredNetwork build_lateral(std::shared_ptr<const ConceptHierarchy> h, const ReprSpec& spec) {
  const CommonParams& cp = spec.common;
  const ConnectivityParams& cn = spec.conn;
  cp.validate();
  cn.validate(cp);
  const std::int64_t q1 = ceil_mul(cn.a, cp.m), q2 = ceil_mul(cn.a1, cp.m), ql = ceil_mul(cn.a2, cp.m);
  if (cn.m2 > 0 && ql > cn.m1)
    throw InfeasibleSpec("build_lateral: unsatisfiable Class-2 lateral quota: ceil(a2*m) = " + std::to_string(ql) +
                         " exceeds m1 = " + std::to_string(cn.m1) + " Class-1 peers");
  if (cn.m2 > 0 && q2 >= q1)
    throw InfeasibleSpec("build_lateral: ceil(a1*m) = " + std::to_string(q2) + " reaches ceil(a*m) = " +
                         std::to_string(q1) + ", so every Class-2 rep would also qualify as Class 1");
  LayeredNetwork net(std::move(h), cp, ReprKind::Lateral, spec.scope);
  net.set_connectivity(cn);
  net.build_info() = {to_string(spec.sampling), spec.seed, 0};
  Rng rng = make_rng(spec.seed, 0x20);
  const auto all = detail::iota_positions(0, cp.m);
  const auto class1 = detail::iota_positions(0, cn.m1);
  const bool exact = spec.sampling == SamplingMode::ExactQuota;
  for (const ConceptId& c : net.wired_concepts()) {
    for (std::int64_t j = 0; j < cp.m; ++j) {
      const bool first_class = j < cn.m1;
      net.set_declared_class(c, j, first_class ? 1 : 2);
      const std::int64_t quota = first_class ? q1 : q2;
      for (std::int64_t attempt = 0;; ++attempt) {
        bool all_reach_q1 = true;
        for (int g = 0; g < cp.k; ++g) {
          auto blk = net.ff_block(c, j, g);
          if (exact)
            detail::fill_exact(rng, blk, cp.m, quota);
          else
            detail::fill_bernoulli(rng, blk, all, spec.p_prime, quota, spec.max_attempts, net.build_info());
          all_reach_q1 = all_reach_q1 && static_cast<std::int64_t>(popcount(blk)) >= q1;
        }
        if (first_class || !all_reach_q1) break;
        // A Class-2 rep that happens to meet the Class-1 quota everywhere is redrawn.
        ++net.build_info().rejections;
        if (attempt + 1 >= spec.max_attempts)
          throw std::runtime_error("build_lateral: could not draw a Class-2 rep below the Class-1 quota");
      }
      if (!first_class) {
        auto lat = net.lat_block(c, j);
        if (exact)
          detail::fill_exact(rng, lat, cn.m1, ql);
        else
          detail::fill_bernoulli(rng, lat, class1, spec.p_prime, ql, spec.max_attempts, net.build_info());
      }
    }
  }
  net.set_tau(tau_lateral(cp, cn.a));
  net.set_learn_tau(cn.a * Ratio(cp.k) * Ratio(cp.m));
  return net;
}

inline LayeredNetwork build(std::shared_ptr<const ConceptHierarchy> h, const ReprSpec& spec) {
  switch (spec.kind) {
    case ReprKind::HighFF: return build_high(std::move(h), spec.common, spec.scope);
    case ReprKind::LowFF: return build_low(std::move(h), spec);
    case ReprKind::Lateral: return build_lateral(std::move(h), spec);
  }
  throw std::logic_error("build: unknown kind");
}

// ---------------------------------------------------------------------------
// Checkers

struct LowViolation {
  ConceptId concept_id;
  std::int64_t rep = 0;
  int child = 0;
  std::int64_t count = 0;
  std::int64_t quota = 0;
};

/// (rep, child) pairs whose incidence set is smaller than ceil(a m).
inline std::vector<LowViolation> check_low_connectivity(const LayeredNetwork& net, Ratio a) {
  std::vector<LowViolation> out;
  const std::int64_t quota = ceil_mul(a, net.m());
  for (const ConceptId& c : net.wired_concepts())
    for (std::int64_t j = 0; j < net.m(); ++j)
      for (int g = 0; g < net.k(); ++g) {
        const auto n = static_cast<std::int64_t>(popcount(net.ff_block(c, j, g)));
        if (n < quota) out.push_back({c, j, g, n, quota});
      }
  return out;
}

struct ClassViolation {
  std::int64_t rep = 0;
  int declared = 0;
  int derived = 0;  ///< 0 when the rep qualifies for neither class
  std::vector<std::string> clauses;  ///< "a": per-child floor, "b": lateral floor, "declared": label mismatch
};

struct ConceptClasses {
  ConceptId concept_id;
  std::vector<std::int64_t> class1;
  std::vector<std::int64_t> class2;
  std::vector<ClassViolation> violations;
};

struct ClassReport {
  std::vector<ConceptClasses> concepts;
  bool pass() const {
    for (const auto& c : concepts)
      if (!c.violations.empty()) return false;
    return true;
  }
  std::size_t violation_count() const {
    std::size_t n = 0;
    for (const auto& c : concepts) n += c.violations.size();
    return n;
  }
};

/// Re-derives the class partition from incidence cardinalities alone.
///
/// Class 1: every child contributes >= ceil(a m). Class 2: not Class 1, every
/// child contributes >= ceil(a1 m) (clause a), and >= ceil(a2 m) lateral
/// edges come from Class-1 peers (clause b).
inline ClassReport check_class_assumption(const LayeredNetwork& net, std::optional<ConnectivityParams> coeffs = std::nullopt) {
  if (net.topology() != Topology::Lateral) throw std::invalid_argument("check_class_assumption: not lateral kind");
  const ConnectivityParams cn = coeffs ? *coeffs : net.connectivity().value();
  const std::int64_t m = net.m();
  const std::int64_t q1 = ceil_mul(cn.a, m), q2 = ceil_mul(cn.a1, m), ql = ceil_mul(cn.a2, m);
  ClassReport rep;
  for (const ConceptId& c : net.wired_concepts()) {
    ConceptClasses cc{c, {}, {}, {}};
    BitVec class1(static_cast<std::size_t>(m));
    std::vector<bool> meets_a(static_cast<std::size_t>(m), true);
    for (std::int64_t j = 0; j < m; ++j) {
      bool is1 = true;
      for (int g = 0; g < net.k(); ++g) {
        const auto n = static_cast<std::int64_t>(popcount(net.ff_block(c, j, g)));
        is1 = is1 && n >= q1;
        if (n < q2) meets_a[static_cast<std::size_t>(j)] = false;
      }
      if (is1) class1.set(static_cast<std::size_t>(j));
    }
    for (std::int64_t j = 0; j < m; ++j) {
      const int declared = net.declared_class(c, j);
      int derived = 0;
      std::vector<std::string> clauses;
      if (class1.test(static_cast<std::size_t>(j))) {
        derived = 1;
      } else {
        const bool a_ok = meets_a[static_cast<std::size_t>(j)];
        const bool b_ok = static_cast<std::int64_t>(and_count(net.lat_block(c, j), class1.words())) >= ql;
        if (!a_ok) clauses.push_back("a");
        if (!b_ok) clauses.push_back("b");
        if (a_ok && b_ok) derived = 2;
      }
      if (derived == 1) cc.class1.push_back(j);
      if (derived == 2) cc.class2.push_back(j);
      if (derived != 0 && derived != declared) clauses.push_back("declared");
      if (!clauses.empty()) cc.violations.push_back({j, declared, derived, std::move(clauses)});
    }
    rep.concepts.push_back(std::move(cc));
  }
  return rep;
}

}  // namespace hcrep
