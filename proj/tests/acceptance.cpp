// One PASS/FAIL line per acceptance criterion. Exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hcrep/bounds.hpp"
#include "hcrep/experiments.hpp"
#include "hcrep/learning.hpp"
#include "hcrep/recognition.hpp"
#include "hcrep/representation.hpp"
#include "property_checks.hpp"

using namespace hcrep;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

CommonParams common(std::int64_t m, int l_max, Ratio q = Ratio(1, 32)) {
  CommonParams cp;
  cp.k = 4;
  cp.l_max = l_max;
  cp.m = m;
  cp.q = q;
  cp.zeta = Ratio(1, 4);
  cp.r1 = Ratio(1, 2);
  cp.r2 = Ratio(3, 4);
  return cp;
}

std::shared_ptr<const ConceptHierarchy> tree(int k, int l_max) {
  return std::make_shared<const ConceptHierarchy>(HierarchyParams{k, l_max, checked_pow(k, l_max + 1)});
}

const ConnectivityParams kLateralDesk{Ratio(3, 4), Ratio(11, 16), Ratio(1, 4), 480, 160};
const ConceptId kTarget{2, 0};
constexpr std::uint64_t kSeed = 20240601;

ReprSpec spec_for(ReprKind kind, Ratio q = Ratio(1, 32)) {
  ReprSpec s;
  s.kind = kind;
  s.common = common(kind == ReprKind::HighFF ? 320 : 640, 2, q);
  s.conn = kind == ReprKind::Lateral ? kLateralDesk : ConnectivityParams::low(Ratio(3, 4), 640);
  if (kind == ReprKind::HighFF) s.conn = ConnectivityParams::low(Ratio(1), 320);
  s.seed = kSeed;
  s.scope = kTarget;
  return s;
}

Outcome bounds_high() {
  const auto cp = common(320, 4);
  const double paper = delta_ff_high(cp, Pipeline::PaperStyle)[4];
  const double exact = delta_ff_high(cp, Pipeline::Exact)[4];
  const double want = 256 * std::exp(-9.6875);
  const bool ok = paper >= 0.014 && paper <= 0.018 && exact >= 0.020 && exact <= 0.022;
  return {ok, fmt("paper-style %.6f (256*exp(-9.6875) = %.6f), exact %.6f", paper, want, exact)};
}

Outcome bounds_low() {
  const auto t = delta_terms_low(common(640, 4), Ratio(3, 4), Pipeline::PaperStyle)[4];
  const bool ok = t.term(1) >= 0.075 && t.term(1) <= 0.090 && t.term(0) < 1e-5;
  return {ok, fmt("second term %.6f, first term %.3g", t.term(1), t.term(0))};
}

Outcome bounds_lateral() {
  const ConnectivityParams c{Ratio(3, 4), Ratio(11, 16), Ratio(3, 4), 320, 320};
  const auto t = delta_terms_lateral(common(640, 4), c, Pipeline::PaperStyle)[4];
  const double target[] = {0.05, 0.15, 0.01};
  bool ok = t.total() >= 0.18 && t.total() <= 0.25 && t.term(0) < 1e-5;
  for (int i = 0; i < 3; ++i) ok = ok && std::fabs(t.term(i + 1) - target[i]) <= 0.5 * target[i];
  return {ok, fmt("sum %.6f, terms (%.2g, %.4f, %.4f, %.4f)", t.total(), t.term(0), t.term(1), t.term(2), t.term(3))};
}

Outcome exhaustive_oracle() {
  CommonParams cp;
  cp.k = 2;
  cp.l_max = 1;
  cp.m = 2;
  cp.q = Ratio(1, 10);
  cp.zeta = Ratio(1, 4);
  cp.r1 = Ratio(1, 2);
  cp.r2 = Ratio(1);
  const auto net = build_high(tree(2, 1), cp);
  const ConceptId c{1, 0};
  const auto e = enumerate_exact(net, net.hierarchy().leaves(c), c, cp.q);
  const double exact = static_cast<double>(e.failure);
  const std::int64_t trials = 100000;
  const auto st = run_point(net, c, BGen::FullLeaves, trials, kSeed, 0, 0);
  const double sigma = std::sqrt(exact * (1 - exact) / trials);
  const double d1 = delta_ff_high(cp)[1];
  const bool ok = std::fabs(exact - 0.232363) <= 1e-6 && std::fabs(st.rate - exact) <= 3 * sigma && d1 >= exact;
  return {ok, fmt("exact failure %.7f, MC %.5f (3 sigma %.5f), delta_1 %.4f", exact, st.rate, 3 * sigma, d1)};
}

Outcome theorem_high() {
  const auto spec = spec_for(ReprKind::HighFF);
  const auto net = build(tree(4, 2), spec);
  const auto st = run_point(net, kTarget, BGen::MinimalR2, 10000, kSeed, 1);
  const double floor = (spec.common.p() * (Ratio(1) - spec.common.zeta)).to_double();
  const bool ok = st.ci.lo <= st.delta_exact && st.mean_fired_fraction >= floor;
  return {ok, fmt("failures %lld/10000, CI [%.2e, %.2e], delta_2 %.3e, mean fired fraction %.4f (floor %.4f)",
                  static_cast<long long>(st.failures), st.ci.lo, st.ci.hi, st.delta_exact, st.mean_fired_fraction,
                  floor)};
}

Outcome determinism() {
  std::string detail;
  bool ok = true;
  for (const auto kind : {ReprKind::HighFF, ReprKind::LowFF, ReprKind::Lateral}) {
    auto spec = spec_for(kind);
    const Ratio sep = spec.common.r2 * spec.common.p() * (Ratio(1) - spec.common.zeta);
    spec.common.r1 = kind == ReprKind::HighFF ? sep : spec.conn.a * sep;
    const auto net = build(tree(4, 2), spec);
    std::int64_t v = 0;
    for (const auto g : {BGen::SubR1, BGen::SubR1Max})
      v += run_point(net, kTarget, g, 10000, kSeed, 2).nonfire_violations;
    ok = ok && v == 0;
    detail += fmt("%s %lld; ", to_string(kind), static_cast<long long>(v));
  }
  return {ok, "violations over 2x10^4 trials: " + detail.substr(0, detail.size() - 2)};
}

Outcome theorem_low() {
  const auto net = build(tree(4, 2), spec_for(ReprKind::LowFF));
  const auto st = run_point(net, kTarget, BGen::MinimalR2, 10000, kSeed, 3);
  const bool ok = st.rate <= st.delta_exact;
  return {ok, fmt("failures %lld/10000, rate %.2e, CI [%.2e, %.2e], delta_2 %.4e", static_cast<long long>(st.failures),
                  st.rate, st.ci.lo, st.ci.hi, st.delta_exact)};
}

Outcome theorem_lateral() {
  const auto h = tree(4, 2);
  const auto clean = build(h, spec_for(ReprKind::Lateral, Ratio(0)));
  bool timing = true;
  int worst = 0;
  for (const auto& b : {h->leaves(kTarget), minimal_support_set(*h, kTarget, Ratio(3, 4))}) {
    const auto s = lateral_schedule(clean, b);
    const auto o = run_lateral(clean, s, clean.no_failures(), kTarget);
    timing = timing && o.timing_ok.value_or(false) && o.first_stable_time && *o.first_stable_time <= 4;
    for (int t = 4; t <= s.horizon; ++t) timing = timing && o.fired_count[static_cast<std::size_t>(t)] == 640;
    worst = std::max(worst, o.first_stable_time.value_or(99));
  }
  const auto net = build(h, spec_for(ReprKind::Lateral));
  const auto st = run_point(net, kTarget, BGen::MinimalR2, 10000, kSeed, 4);
  const bool ok = timing && st.rate <= st.delta_exact;
  return {ok, fmt("q=0: all 640 reps stable from t=%d (<= 4): %s; q=1/32: failures %lld/10000, delta_2 %.4f%s", worst,
                  timing ? "yes" : "no", static_cast<long long>(st.failures), st.delta_exact,
                  st.delta_exact >= 1 ? " (vacuous)" : "")};
}

Outcome learning_equivalence() {
  const auto h = tree(4, 2);
  auto cp = common(8, 2, Ratio(0));
  LearnConfig cfg;
  cfg.target = kTarget;
  cfg.layer_concepts = 16;
  cfg.seed = kSeed;
  const auto res = learn_ff_high(h, cp, cfg);
  if (!res.net) return {false, "learning aborted: " + res.report.failure};
  const bool equiv = structurally_equivalent(res, build_high(h, cp, kTarget));
  const auto o = run_ff(*res.net, ff_schedule(*res.net, h->leaves(kTarget)), res.net->no_failures(), kTarget);
  return {equiv && o.recognized,
          fmt("structural equivalence %s, root recognized %s (%lld/8 reps)", equiv ? "yes" : "no",
              o.recognized ? "yes" : "no", static_cast<long long>(o.fired_count[2]))};
}

Outcome constraint2() {
  const auto terms = constraint2_terms(2, 4, 0.9, Ratio(1, 2), Ratio(3, 4));
  const double analytic = constraint2_analytic(2, 4, 0.9, Ratio(1, 2), Ratio(3, 4));
  const auto mc = constraint2_estimate(2, 4, 0.9, Ratio(1, 2), Ratio(3, 4), 1000000, kSeed);
  // Every sample in B is also in A here, so the standard error degenerates
  // to 0; allow rounding slack in the analytic value.
  const bool ok = std::fabs(mc.estimate - analytic) <= std::max(3 * mc.se, 1e-12);
  return {ok, fmt("analytic Pr(A|B) %.10f, MC %.10f (se %.2e, %lld samples in B); ratio form Pr(A)/Pr(B) = %.7f",
                  analytic, mc.estimate, mc.se, static_cast<long long>(mc.hits_b), terms.ratio)};
}

Outcome property_suites() {
  const std::int64_t n = 250;
  const props::PropResult rs[] = {props::support_monotone(n, kSeed), props::failure_monotone(n, kSeed),
                                  props::seeded_determinism(n, kSeed), props::learner_collapse(n, kSeed),
                                  props::builder_checker(n, kSeed)};
  bool ok = true;
  std::string detail;
  for (const auto& r : rs) {
    ok = ok && r.ok() && r.cases >= 200;
    if (!r.ok()) detail += r.failure + "; ";
  }
  // Learner failure rates are estimated, not asserted.
  CommonParams cp = common(16, 2, Ratio(0));
  cp.k = 2;
  LearnConfig lc;
  lc.algorithm = LearnAlgorithm::LateralTwoPhase;
  lc.target = kTarget;
  lc.layer_concepts = 4;
  lc.p_prime = 0.8;
  lc.b = Ratio(13, 16);
  lc.b1 = Ratio(3, 4);
  const auto th2 = estimate_theta(tree(2, 2), cp, {Ratio(3, 4), Ratio(5, 8), Ratio(1, 4), 12, 4}, lc, 200, kSeed);
  lc.algorithm = LearnAlgorithm::LateralMultiStep;
  lc.t_steps = 3;
  const auto th1 = estimate_theta(tree(2, 2), cp, {Ratio(3, 4), Ratio(5, 8), Ratio(1, 4), 12, 4}, lc, 200, kSeed);
  detail += fmt("5 suites x %lld cases; theta-hat two-phase %.3f [%.3f, %.3f], multi-step %.3f [%.3f, %.3f]",
                static_cast<long long>(n), static_cast<double>(th2.failures) / 200.0, th2.ci.lo, th2.ci.hi,
                static_cast<double>(th1.failures) / 200.0, th1.ci.lo, th1.ci.hi);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"bounds-high-worked-example", bounds_high},
      {"bounds-low-worked-example", bounds_low},
      {"bounds-lateral-worked-example", bounds_lateral},
      {"exhaustive-oracle", exhaustive_oracle},
      {"high-recognition-desk-scale", theorem_high},
      {"must-not-fire-determinism", determinism},
      {"low-recognition-desk-scale", theorem_low},
      {"lateral-timing-and-recognition", theorem_lateral},
      {"learning-equivalence", learning_equivalence},
      {"constraint2-cross-validation", constraint2},
      {"property-suites", property_suites},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
