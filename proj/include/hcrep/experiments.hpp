#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hcrep/bounds.hpp"
#include "hcrep/learning.hpp"
#include "hcrep/recognition.hpp"
#include "hcrep/representation.hpp"
#include "hcrep/stats.hpp"

namespace hcrep {

// ---------------------------------------------------------------------------
// Failure masks

/// Independent Bernoulli(q) failure for every neuron of every layer. Uses
/// geometric skips so the cost is proportional to the number of failures.
inline void sample_failures_into(const LayeredNetwork& net, double q, Rng& rng, FailureMask& mask) {
  if (!(q >= 0 && q <= 1)) throw std::invalid_argument("sample_failures: q must lie in [0,1]");
  mask.failed.clear();
  if (q == 0) return;
  for (int l = 0; l <= net.params().l_max; ++l) {
    const auto& lay = net.layout(l);
    auto words = mask.failed.layer(l);
    if (q == 1) {
      for (std::int64_t i = 0; i < lay.width; ++i) set_bit(words, lay.bit_of(i));
      continue;
    }
    std::geometric_distribution<std::int64_t> skip(q);
    for (std::int64_t i = skip(rng); i < lay.width; i += 1 + skip(rng)) set_bit(words, lay.bit_of(i));
  }
}

inline FailureMask sample_failures(const LayeredNetwork& net, double q, Rng& rng) {
  FailureMask mask = net.no_failures();
  sample_failures_into(net, q, rng, mask);
  return mask;
}

inline FailureMask sample_failures(const LayeredNetwork& net, Ratio q, Rng& rng) {
  return sample_failures(net, q.to_double(), rng);
}

// ---------------------------------------------------------------------------
// Presentation sets

enum class BGen { FullLeaves, MinimalR2, SubR1, SubR1Max };

inline const char* to_string(BGen g) {
  switch (g) {
    case BGen::FullLeaves: return "full-leaves";
    case BGen::MinimalR2: return "minimal-r2";
    case BGen::SubR1: return "sub-r1";
    case BGen::SubR1Max: return "sub-r1-max";
  }
  return "?";
}

inline BGen parse_bgen(const std::string& s) {
  for (const auto g : {BGen::FullLeaves, BGen::MinimalR2, BGen::SubR1, BGen::SubR1Max})
    if (s == to_string(g)) return g;
  throw std::invalid_argument("unknown B generator '" + s + "'");
}

inline bool must_not_fire(BGen g) { return g == BGen::SubR1 || g == BGen::SubR1Max; }

inline LeafSet generate_b(const ConceptHierarchy& h, BGen g, ConceptId target, Ratio r1, Ratio r2) {
  switch (g) {
    case BGen::FullLeaves: return h.leaves(target);
    case BGen::MinimalR2: return minimal_support_set(h, target, r2);
    case BGen::SubR1: return sub_support_set(h, target, r1);
    case BGen::SubR1Max: return saturated_sub_support_set(h, target, r1);
  }
  throw std::logic_error("generate_b");
}

// ---------------------------------------------------------------------------
// Configuration

struct SweepAxes {
  std::vector<std::int64_t> m;
  std::vector<Ratio> q;
  std::vector<Ratio> zeta;
  std::vector<Ratio> a;
};

struct ExperimentConfig {
  ReprSpec spec;                      ///< base point; scope is replaced by the target subtree
  std::optional<LearnConfig> learn;   ///< learn the network instead of building it
  std::optional<ConceptId> target;    ///< default: first top-level concept
  BGen bgen = BGen::MinimalR2;
  std::int64_t trials = 1000;
  std::uint64_t seed = 0;
  int threads = 0;                    ///< 0: hardware concurrency
  std::int64_t n = 0;                 ///< leaf count; 0 means k^(l_max+1)
  SweepAxes axes;

  void validate() const {
    if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
    if (threads < 0) throw std::invalid_argument("experiment: threads must be >= 0");
  }
};

struct SweepPoint {
  ReprSpec spec;
  ConceptId target;
};

/// Cartesian product of the axes around the base spec, m outermost. Lateral
/// points rescale m1 with m and keep m2 = m - m1.
inline std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& base = cfg.spec;
  const auto pick_i = [](const std::vector<std::int64_t>& v, std::int64_t d) { return v.empty() ? std::vector<std::int64_t>{d} : v; };
  const auto pick_r = [](const std::vector<Ratio>& v, Ratio d) { return v.empty() ? std::vector<Ratio>{d} : v; };
  std::vector<SweepPoint> out;
  for (const auto m : pick_i(cfg.axes.m, base.common.m))
    for (const auto q : pick_r(cfg.axes.q, base.common.q))
      for (const auto z : pick_r(cfg.axes.zeta, base.common.zeta))
        for (const auto a : pick_r(cfg.axes.a, base.conn.a)) {
          SweepPoint p{base, cfg.target.value_or(ConceptId{base.common.l_max, 0})};
          p.spec.common.m = m;
          p.spec.common.q = q;
          p.spec.common.zeta = z;
          p.spec.conn.a = a;
          if (base.kind == ReprKind::Lateral && m != base.common.m) {
            p.spec.conn.m1 = static_cast<std::int64_t>(
                std::llround(static_cast<double>(base.conn.m1) * static_cast<double>(m) / static_cast<double>(base.common.m)));
            p.spec.conn.m2 = m - p.spec.conn.m1;
          }
          if (base.kind == ReprKind::LowFF) {
            p.spec.conn.m1 = m;
            p.spec.conn.m2 = 0;
          }
          p.spec.scope = p.target;
          out.push_back(p);
        }
  return out;
}

// ---------------------------------------------------------------------------
// Trials

struct TrialStats {
  ReprKind kind = ReprKind::HighFF;
  int level = 0;
  CommonParams common;
  ConnectivityParams conn;
  BGen bgen = BGen::MinimalR2;
  std::int64_t trials = 0;
  std::int64_t successes = 0;
  std::int64_t failures = 0;
  double rate = 0;
  Interval ci;
  double delta_exact = 0;
  double delta_paper_style = 0;
  bool bound_satisfied = false;
  std::int64_t nonfire_violations = 0;
  double mean_fired_fraction = 0;  ///< among successes
  std::optional<double> first_stable_time_p95;
  std::string build;               ///< how the network was obtained
};

struct TrialRecord {
  bool success = false;
  bool violation = false;
  std::int64_t fired = 0;
  int first_stable = -1;
};

inline std::shared_ptr<const LayeredNetwork> network_for(std::shared_ptr<const ConceptHierarchy> h,
                                                         const SweepPoint& p, const std::optional<LearnConfig>& learn) {
  if (!learn) return std::make_shared<const LayeredNetwork>(build(std::move(h), p.spec));
  LearnConfig lc = *learn;
  lc.target = p.target;
  const auto res = hcrep::learn(std::move(h), p.spec.common, p.spec.conn, lc);
  if (!res.net) throw std::runtime_error("experiment: learning aborted: " + res.report.failure);
  return res.net;
}

/// Runs every trial of one point against a fixed network. Trial i draws its
/// mask from derive_seed(seed, point, i), so results do not depend on the
/// thread count.
inline TrialStats run_point(const LayeredNetwork& net, ConceptId target, BGen bgen, std::int64_t trials,
                            std::uint64_t seed, std::uint64_t point, int threads = 0) {
  if (trials < 1) throw std::invalid_argument("run_point: trials must be >= 1");
  const auto& h = net.hierarchy();
  const CommonParams& cp = net.params();
  const LeafSet b = generate_b(h, bgen, target, cp.r1, cp.r2);
  const auto sched = default_schedule(net, b);
  const bool forbid = must_not_fire(bgen);
  const double q = cp.q.to_double();

  std::vector<TrialRecord> rec(static_cast<std::size_t>(trials));
  unsigned nt = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<std::int64_t>(nt, trials));
  auto worker = [&](unsigned w) {
    Simulator sim(net);
    FailureMask mask = net.no_failures();
    for (std::int64_t i = w; i < trials; i += nt) {
      Rng rng = make_rng(seed, point, static_cast<std::uint64_t>(i));
      sample_failures_into(net, q, rng, mask);
      const auto out = run_recognition(sim, sched, mask, target);
      auto& r = rec[static_cast<std::size_t>(i)];
      r.success = out.recognized;
      r.violation = forbid && out.fired_when_checked;
      r.fired = out.fired_count[static_cast<std::size_t>(net.topology() == Topology::Lateral ? sched.horizon : target.level)];
      if (out.first_stable_time) r.first_stable = *out.first_stable_time;
    }
  };
  if (nt == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }

  TrialStats st;
  st.kind = net.kind();
  st.level = target.level;
  st.common = cp;
  st.conn = net.connectivity().value_or(ConnectivityParams::low(Ratio(1), cp.m));
  st.bgen = bgen;
  st.trials = trials;
  st.build = net.build_info().sampling;
  double fired_sum = 0;
  std::vector<double> stable;
  for (const auto& r : rec) {
    if (r.success) {
      ++st.successes;
      fired_sum += static_cast<double>(r.fired) / static_cast<double>(cp.m);
    }
    if (r.violation) ++st.nonfire_violations;
    if (r.first_stable >= 0) stable.push_back(r.first_stable);
  }
  // Under a must-not-fire generator a trial fails when the target fires.
  st.failures = forbid ? st.nonfire_violations : trials - st.successes;
  st.rate = static_cast<double>(st.failures) / static_cast<double>(trials);
  st.ci = wilson(st.failures, trials);
  st.mean_fired_fraction = st.successes > 0 ? fired_sum / static_cast<double>(st.successes) : 0.0;
  if (net.topology() == Topology::Lateral && !stable.empty()) st.first_stable_time_p95 = percentile(stable, 95);

  const auto exact = bounds_report(st.kind, cp, st.conn, Pipeline::Exact);
  const auto paper = bounds_report(st.kind, cp, st.conn, Pipeline::PaperStyle);
  st.delta_exact = exact.delta[static_cast<std::size_t>(target.level)];
  st.delta_paper_style = paper.delta[static_cast<std::size_t>(target.level)];
  if (forbid)
    st.bound_satisfied = st.nonfire_violations == 0;
  else
    st.bound_satisfied = st.delta_exact >= 1.0 || st.ci.hi <= st.delta_exact;
  return st;
}

inline std::vector<TrialStats> run_trials(const ExperimentConfig& cfg) {
  const auto points = expand_sweep(cfg);
  std::vector<TrialStats> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const auto& c = p.spec.common;
    const auto h = detail::hierarchy_for(c, cfg.n > 0 ? cfg.n : checked_pow(c.k, c.l_max + 1));
    const auto net = network_for(h, p, cfg.learn);
    out.push_back(run_point(*net, p.target, cfg.bgen, cfg.trials, cfg.seed, i, cfg.threads));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

struct EnumerationResult {
  int neurons = 0;                               ///< relevant neurons (reps of the target subtree)
  std::int64_t masks = 0;
  std::vector<std::int64_t> successes_by_failures;  ///< index f: successful masks with f failures
  std::vector<std::int64_t> masks_by_failures;
  long double success = 0;
  long double failure = 0;
  long double mass = 0;                          ///< sums to 1
  std::int64_t violation_masks = 0;              ///< must-not-fire generators only
};

inline EnumerationResult enumerate_exact(const LayeredNetwork& net, const LeafSet& b, ConceptId target, Ratio q,
                                         bool forbid_firing = false, int max_neurons = 24) {
  const auto& h = net.hierarchy();
  h.require(target);
  std::vector<NeuronId> rel;
  for (const ConceptId& c : h.descendants(target))
    for (const auto& r : net.reps(c)) rel.push_back(r);
  if (static_cast<int>(rel.size()) > max_neurons)
    throw std::invalid_argument("enumerate_exact: " + std::to_string(rel.size()) + " relevant neurons exceed " +
                                std::to_string(max_neurons));
  EnumerationResult res;
  res.neurons = static_cast<int>(rel.size());
  res.masks = std::int64_t{1} << rel.size();
  res.successes_by_failures.assign(rel.size() + 1, 0);
  res.masks_by_failures.assign(rel.size() + 1, 0);
  const auto sched = default_schedule(net, b);
  Simulator sim(net);
  FailureMask mask = net.no_failures();
  for (std::int64_t bits = 0; bits < res.masks; ++bits) {
    mask.failed.clear();
    for (std::size_t i = 0; i < rel.size(); ++i)
      if ((bits >> i) & 1) net.set(mask.failed, rel[i]);
    const auto out = run_recognition(sim, sched, mask, target);
    const auto f = static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(bits)));
    ++res.masks_by_failures[f];
    const bool ok = forbid_firing ? !out.fired_when_checked : out.recognized;
    if (ok) ++res.successes_by_failures[f];
    if (forbid_firing && out.fired_when_checked) ++res.violation_masks;
  }
  const long double qq = static_cast<long double>(q.num()) / static_cast<long double>(q.den());
  for (std::size_t f = 0; f <= rel.size(); ++f) {
    const long double w = std::pow(qq, static_cast<long double>(f)) *
                          std::pow(1.0L - qq, static_cast<long double>(rel.size() - f));
    res.success += w * static_cast<long double>(res.successes_by_failures[f]);
    res.mass += w * static_cast<long double>(res.masks_by_failures[f]);
  }
  res.failure = res.mass - res.success;
  return res;
}

// ---------------------------------------------------------------------------
// Output

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "kind",   "level",   "k",       "m",      "q",        "zeta",    "a",           "a1",
      "a2",     "m1",      "m2",      "r1",     "r2",       "trials",  "failures",    "rate",
      "ci_lo",  "ci_hi",   "delta_exact", "delta_paper_style", "bound_satisfied", "nonfire_violations",
      "mean_fired_fraction", "first_stable_time_p95"};
  return cols;
}

namespace detail {
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}
}  // namespace detail

inline std::string csv_row(const TrialStats& s) {
  using detail::num;
  const bool ff = s.kind != ReprKind::Lateral;
  std::vector<std::string> v{to_string(s.kind),
                             std::to_string(s.level),
                             std::to_string(s.common.k),
                             std::to_string(s.common.m),
                             num(s.common.q.to_double()),
                             num(s.common.zeta.to_double()),
                             num(s.kind == ReprKind::HighFF ? 1.0 : s.conn.a.to_double()),
                             ff ? "" : num(s.conn.a1.to_double()),
                             ff ? "" : num(s.conn.a2.to_double()),
                             ff ? "" : std::to_string(s.conn.m1),
                             ff ? "" : std::to_string(s.conn.m2),
                             num(s.common.r1.to_double()),
                             num(s.common.r2.to_double()),
                             std::to_string(s.trials),
                             std::to_string(s.failures),
                             num(s.rate),
                             num(s.ci.lo),
                             num(s.ci.hi),
                             num(s.delta_exact),
                             num(s.delta_paper_style),
                             s.bound_satisfied ? "true" : "false",
                             std::to_string(s.nonfire_violations),
                             num(s.mean_fired_fraction),
                             s.first_stable_time_p95 ? num(*s.first_stable_time_p95) : ""};
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i];
  }
  return out;
}

inline std::string to_csv(const std::vector<TrialStats>& rows) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  for (const auto& r : rows) out += csv_row(r) + '\n';
  return out;
}

inline bool all_passed(const std::vector<TrialStats>& rows) {
  for (const auto& r : rows)
    if (!r.bound_satisfied || r.nonfire_violations != 0) return false;
  return true;
}

}  // namespace hcrep
