#pragma once

// Randomized properties shared by the unit suite and the acceptance binary.
// Each check returns the number of cases run and the first counterexample.

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "hcrep/experiments.hpp"
#include "hcrep/learning.hpp"
#include "hcrep/recognition.hpp"
#include "hcrep/representation.hpp"

namespace hcrep::props {

struct PropResult {
  std::int64_t cases = 0;
  std::string failure;
  bool ok() const { return failure.empty(); }
};

inline std::shared_ptr<const ConceptHierarchy> random_tree(Rng& rng, int max_k = 4, int max_l = 2) {
  const int k = std::uniform_int_distribution<int>(2, max_k)(rng);
  const int l = std::uniform_int_distribution<int>(1, max_l)(rng);
  return std::make_shared<const ConceptHierarchy>(HierarchyParams{k, l, checked_pow(k, l + 1)});
}

inline LeafSet random_leaves(const ConceptHierarchy& h, Rng& rng, double p) {
  std::bernoulli_distribution coin(p);
  LeafSet b = h.empty_leaf_set();
  for (std::int64_t i = 0; i < h.leaf_count(); ++i)
    if (coin(rng)) b.insert(i);
  return b;
}

inline Ratio random_ratio(Rng& rng) {
  static const Ratio pool[] = {Ratio(1, 4), Ratio(1, 3), Ratio(1, 2), Ratio(2, 3), Ratio(3, 4), Ratio(1)};
  return pool[std::uniform_int_distribution<int>(0, 5)(rng)];
}

/// B ⊆ B' gives Supp_r(B) ⊆ Supp_r(B'); r ≤ r' gives Supp_r'(B) ⊆ Supp_r(B).
inline PropResult support_monotone(std::int64_t cases, std::uint64_t seed) {
  PropResult res;
  for (std::int64_t i = 0; i < cases; ++i, ++res.cases) {
    Rng rng = make_rng(seed, 1, static_cast<std::uint64_t>(i));
    const auto h = random_tree(rng);
    const LeafSet b = random_leaves(*h, rng, 0.5);
    LeafSet bigger = b;
    for (std::int64_t x = 0; x < h->leaf_count(); ++x)
      if (std::bernoulli_distribution(0.3)(rng)) bigger.insert(x);
    Ratio r = random_ratio(rng), r2 = random_ratio(rng);
    if (r2 < r) std::swap(r, r2);
    const auto s = support(*h, b, r), sb = support(*h, bigger, r), s2 = support(*h, b, r2);
    for (std::int64_t d = 0; d < h->size(); ++d) {
      const ConceptId c = h->from_dense(d);
      if (s.contains(c) && !sb.contains(c)) return {res.cases, "monotonicity fails at " + c.str()};
      if (s2.contains(c) && !s.contains(c)) return {res.cases, "antitonicity fails at " + c.str()};
    }
  }
  return res;
}

inline LayeredNetwork random_network(Rng& rng, std::shared_ptr<const ConceptHierarchy> h) {
  const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
  ReprSpec s;
  s.common.k = h->params().k;
  s.common.l_max = h->params().l_max;
  s.common.m = std::uniform_int_distribution<std::int64_t>(4, 9)(rng);
  s.common.q = Ratio(std::uniform_int_distribution<int>(0, 8)(rng), 32);
  s.common.zeta = Ratio(std::uniform_int_distribution<int>(0, 3)(rng), 4);
  s.common.r2 = Ratio(std::uniform_int_distribution<int>(2, 4)(rng), 4);
  s.common.r1 = Ratio(1, 2) * s.common.r2;
  s.seed = rng();
  s.sampling = std::bernoulli_distribution(0.5)(rng) ? SamplingMode::ExactQuota : SamplingMode::Bernoulli;
  s.p_prime = 0.9;
  if (kind == 0) return build_high(h, s.common);
  if (kind == 1) {
    s.kind = ReprKind::LowFF;
    s.conn = ConnectivityParams::low(Ratio(std::uniform_int_distribution<int>(2, 4)(rng), 4), s.common.m);
    return build_low(h, s);
  }
  s.kind = ReprKind::Lateral;
  const std::int64_t m = s.common.m;
  const std::int64_t m1 = std::uniform_int_distribution<std::int64_t>(m / 2 + 1, m)(rng);
  // a = 3/4, a1 = 1/2 keeps ceil(a1 m) < ceil(a m) for m >= 4; a2 = (a - a1) k.
  s.conn = {Ratio(3, 4), Ratio(1, 2), Ratio(s.common.k, 4), m1, m - m1};
  if (ceil_mul(s.conn.a2, m) > m1) {
    s.conn.m1 = m;
    s.conn.m2 = 0;
  }
  return build_lateral(h, s);
}

inline std::vector<LayerBits> trace(const LayeredNetwork& net, const PresentationSchedule& s, const FailureMask& mask) {
  std::vector<LayerBits> out;
  simulate(net, s, mask, [&](int, const LayerBits& f) { out.push_back(f); });
  return out;
}

/// F ⊆ F' gives fired(F') ⊆ fired(F) at every time and layer, and failed
/// neurons never fire.
inline PropResult failure_monotone(std::int64_t cases, std::uint64_t seed) {
  PropResult res;
  for (std::int64_t i = 0; i < cases; ++i, ++res.cases) {
    Rng rng = make_rng(seed, 2, static_cast<std::uint64_t>(i));
    const auto h = random_tree(rng, 3, 2);
    const auto net = random_network(rng, h);
    const LeafSet b = random_leaves(*h, rng, 0.8);
    const auto sched = default_schedule(net, b);
    const double q = std::uniform_real_distribution<double>(0, 0.3)(rng);
    FailureMask f = sample_failures(net, q, rng);
    FailureMask more = f;
    const FailureMask extra = sample_failures(net, 0.2, rng);
    for (int l = 0; l < more.failed.layer_count(); ++l) {
      auto dst = more.failed.layer(l);
      const auto src = extra.failed.layer(l);
      for (std::size_t w = 0; w < dst.size(); ++w) dst[w] |= src[w];
    }
    const auto a = trace(net, sched, f), b2 = trace(net, sched, more);
    for (std::size_t t = 0; t < a.size(); ++t)
      for (int l = 0; l < a[t].layer_count(); ++l) {
        const std::span<const Word> x = a[t].layer(l), y = b2[t].layer(l), fm = std::as_const(more.failed).layer(l);
        for (std::size_t w = 0; w < x.size(); ++w) {
          if (y[w] & ~x[w]) return {res.cases, "fired set grew under more failures (t=" + std::to_string(t) + ")"};
          if (y[w] & fm[w]) return {res.cases, "failed neuron fired (t=" + std::to_string(t) + ")"};
        }
      }
  }
  return res;
}

/// Same seed, same network and same statistics.
inline PropResult seeded_determinism(std::int64_t cases, std::uint64_t seed) {
  PropResult res;
  for (std::int64_t i = 0; i < cases; ++i, ++res.cases) {
    Rng r1 = make_rng(seed, 3, static_cast<std::uint64_t>(i)), r2 = make_rng(seed, 3, static_cast<std::uint64_t>(i));
    const auto h = random_tree(r1, 3, 2);
    random_tree(r2, 3, 2);
    const auto a = random_network(r1, h), b = random_network(r2, h);
    if (!same_structure(a, b)) return {res.cases, "builds differ under one seed"};
    const ConceptId c{h->params().l_max, 0};
    const auto sa = run_point(a, c, BGen::MinimalR2, 20, seed + static_cast<std::uint64_t>(i), 0, 1);
    const auto sb = run_point(b, c, BGen::MinimalR2, 20, seed + static_cast<std::uint64_t>(i), 0, 1);
    if (csv_row(sa) != csv_row(sb)) return {res.cases, "trial statistics differ under one seed"};
  }
  return res;
}

/// With p' = 1 every learner reproduces the fully connected construction.
inline PropResult learner_collapse(std::int64_t cases, std::uint64_t seed) {
  PropResult res;
  for (std::int64_t i = 0; i < cases; ++i, ++res.cases) {
    Rng rng = make_rng(seed, 4, static_cast<std::uint64_t>(i));
    const int k = std::uniform_int_distribution<int>(2, 3)(rng);
    const int l = std::uniform_int_distribution<int>(1, 2)(rng);
    const auto h = std::make_shared<const ConceptHierarchy>(HierarchyParams{k, l, checked_pow(k, l + 1)});
    CommonParams cp;
    cp.k = k;
    cp.l_max = l;
    cp.m = std::uniform_int_distribution<std::int64_t>(2, 6)(rng);
    cp.zeta = Ratio(1, 4);
    cp.r1 = Ratio(1, 2);
    cp.r2 = Ratio(3, 4);
    LearnConfig lc;
    lc.target = ConceptId{l, std::uniform_int_distribution<std::int64_t>(0, k - 1)(rng)};
    lc.layer_concepts = checked_pow(k, l) + std::uniform_int_distribution<std::int64_t>(0, 2)(rng);
    lc.seed = rng();
    lc.p_prime = 1.0;
    lc.b = Ratio(7, 8);
    const auto alg = std::uniform_int_distribution<int>(0, 2)(rng);
    lc.algorithm = alg == 0 ? LearnAlgorithm::FFHigh : alg == 1 ? LearnAlgorithm::FFLow : LearnAlgorithm::LateralMultiStep;
    lc.t_steps = std::uniform_int_distribution<int>(1, 3)(rng);
    // a = 1/2, a1 = a, a2 = 0, m2 = 0: a lateral net whose classes are all Class 1.
    const ConnectivityParams conn{Ratio(1, 2), Ratio(1, 2), Ratio(0), cp.m, 0};
    const auto r = learn(h, cp, conn, lc);
    if (!r.net) return {res.cases, std::string("learning aborted: ") + r.report.failure};
    if (!r.report.success) return {res.cases, std::string(to_string(lc.algorithm)) + " failed its checker with p' = 1"};
    const auto high = build_high(h, cp, lc.target);
    for (const auto& c : high.wired_concepts())
      for (std::int64_t j = 0; j < cp.m; ++j)
        for (int g = 0; g < k; ++g) {
          const auto x = r.net->ff_block(c, j, g), y = high.ff_block(c, j, g);
          if (!std::equal(x.begin(), x.end(), y.begin()))
            return {res.cases, std::string(to_string(lc.algorithm)) + " differs from the full construction at " + c.str()};
        }
  }
  return res;
}

/// Builders always satisfy their own checkers, and the checkers flag a
/// single removed edge when it crosses the quota.
inline PropResult builder_checker(std::int64_t cases, std::uint64_t seed) {
  PropResult res;
  for (std::int64_t i = 0; i < cases; ++i, ++res.cases) {
    Rng rng = make_rng(seed, 5, static_cast<std::uint64_t>(i));
    const auto h = random_tree(rng, 3, 2);
    auto net = random_network(rng, h);
    const Ratio a = net.kind() == ReprKind::HighFF ? Ratio(1) : net.connectivity()->a;
    if (net.kind() == ReprKind::Lateral) {
      if (!check_class_assumption(net).pass()) return {res.cases, "lateral build fails its class check"};
      if (!check_low_connectivity(net, net.connectivity()->a1).empty())
        return {res.cases, "lateral build below the a1 floor"};
    } else if (!check_low_connectivity(net, a).empty()) {
      return {res.cases, "feed-forward build below its quota"};
    }
    // Drop one edge of a rep sitting exactly at quota and expect one flag.
    const auto& wired = net.wired_concepts();
    const ConceptId c = wired[std::uniform_int_distribution<std::size_t>(0, wired.size() - 1)(rng)];
    const std::int64_t j = std::uniform_int_distribution<std::int64_t>(0, net.m() - 1)(rng);
    const int g = std::uniform_int_distribution<int>(0, net.k() - 1)(rng);
    auto blk = net.ff_block(c, j, g);
    const auto before = static_cast<std::int64_t>(popcount(blk));
    const std::int64_t quota = net.kind() == ReprKind::Lateral ? ceil_mul(net.connectivity()->a1, net.m()) : ceil_mul(a, net.m());
    if (before == 0) continue;
    std::size_t bit = 0;
    while (!test_bit(blk, bit)) ++bit;
    clear_bit(blk, bit);
    const bool should_flag = before - 1 < quota;
    bool flagged;
    if (net.kind() == ReprKind::Lateral)
      flagged = !check_class_assumption(net).pass() || !check_low_connectivity(net, net.connectivity()->a1).empty();
    else
      flagged = !check_low_connectivity(net, a).empty();
    if (should_flag && !flagged) return {res.cases, "checker missed an under-quota rep at " + c.str()};
    if (!should_flag && net.kind() != ReprKind::Lateral && flagged)
      return {res.cases, "checker flagged a rep still at quota at " + c.str()};
  }
  return res;
}

}  // namespace hcrep::props
