#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcrep/bounds.hpp"
#include "hcrep/hierarchy.hpp"
#include "hcrep/network.hpp"
#include "hcrep/representation.hpp"
#include "hcrep/stats.hpp"

namespace hcrep {

enum class LearnAlgorithm { FFHigh, FFLow, LateralMultiStep, LateralTwoPhase };

inline const char* to_string(LearnAlgorithm a) {
  switch (a) {
    case LearnAlgorithm::FFHigh: return "ff-high";
    case LearnAlgorithm::FFLow: return "ff-low";
    case LearnAlgorithm::LateralMultiStep: return "lateral-multistep";
    case LearnAlgorithm::LateralTwoPhase: return "lateral-twophase";
  }
  return "?";
}

inline LearnAlgorithm parse_learn_algorithm(const std::string& s) {
  for (const auto a : {LearnAlgorithm::FFHigh, LearnAlgorithm::FFLow, LearnAlgorithm::LateralMultiStep,
                       LearnAlgorithm::LateralTwoPhase})
    if (s == to_string(a)) return a;
  throw std::invalid_argument("unknown learning algorithm '" + s + "'");
}

struct LearnConfig {
  LearnAlgorithm algorithm = LearnAlgorithm::FFHigh;
  std::optional<ConceptId> target;      ///< default: first top-level concept
  std::int64_t layer_concepts = 0;      ///< layer width n in concepts; 0 means leaves(target)
  double p_prime = 1.0;                 ///< initial wiring probability
  Ratio b{1};
  Ratio b1{1};
  int t_steps = 1;
  double rho = 0.1;                     ///< Oja learning rate
  double beta = 0.1;                    ///< Hebbian increase factor for the multi-step learner
  double eta = 0.05;                    ///< snap tolerance
  std::optional<double> w0;             ///< default 1/(k^l_max + 1)
  bool oja = false;                     ///< incremental weight path instead of one-shot
  int oja_max_iterations = 100000;
  std::uint64_t seed = 0;

  void validate(const CommonParams& cp, const ConnectivityParams& conn) const {
    if (!(p_prime >= 0 && p_prime <= 1)) throw std::invalid_argument("learn: p_prime must lie in [0,1]");
    if (t_steps < 1) throw std::invalid_argument("learn: t_steps must be >= 1");
    if (!(rho > 0)) throw std::invalid_argument("learn: rho must be > 0");
    if (!(beta >= 0)) throw std::invalid_argument("learn: beta must be >= 0");
    if (!(eta >= 0 && eta < 0.5)) throw std::invalid_argument("learn: eta must lie in [0, 0.5)");
    if (w0 && !(*w0 > 0 && *w0 < 1)) throw std::invalid_argument("learn: w0 must lie in (0,1)");
    if (algorithm != LearnAlgorithm::FFHigh) {
      conn.validate_low();
      if (!(conn.a < b && b <= Ratio(1))) throw std::invalid_argument("learn: invariant a < b ≤ 1 violated");
    }
    if (algorithm == LearnAlgorithm::LateralMultiStep || algorithm == LearnAlgorithm::LateralTwoPhase) {
      conn.validate(cp);
      if (!(conn.a1 <= b1 && b1 <= Ratio(1))) throw std::invalid_argument("learn: invariant a1 ≤ b1 ≤ 1 violated");
    }
  }
};

// ---------------------------------------------------------------------------
// m-WTA

class WtaStarvation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The `count` highest-potential available neurons, ties to the lowest index.
/// Returned in ascending index order.
inline std::vector<std::int64_t> m_wta(std::span<const double> potentials, std::span<const std::uint8_t> available,
                                       std::int64_t count) {
  if (!available.empty() && available.size() != potentials.size())
    throw std::invalid_argument("m_wta: availability length mismatch");
  std::vector<std::int64_t> idx;
  for (std::size_t i = 0; i < potentials.size(); ++i)
    if (available.empty() || available[i]) idx.push_back(static_cast<std::int64_t>(i));
  if (count < 0 || static_cast<std::int64_t>(idx.size()) < count)
    throw WtaStarvation("m_wta: only " + std::to_string(idx.size()) + " available neurons for " +
                        std::to_string(count) + " winners");
  const auto n = static_cast<std::ptrdiff_t>(count);
  std::partial_sort(idx.begin(), idx.begin() + n, idx.end(), [&](std::int64_t a, std::int64_t b) {
    const double pa = potentials[static_cast<std::size_t>(a)], pb = potentials[static_cast<std::size_t>(b)];
    return pa != pb ? pa > pb : a < b;
  });
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::vector<std::int64_t> m_wta(std::span<const double> potentials, std::int64_t count) {
  return m_wta(potentials, {}, count);
}

// ---------------------------------------------------------------------------
// Mutable view used during learning

/// Dense real-valued weights over one target subtree. Layer l holds
/// layer_concepts * m neurons; ff(l) maps layer l-1 into layer l and lat(l)
/// maps layer l into itself. Leaf i of the subtree is presented on layer-0
/// positions [i*m, (i+1)*m).
class MutableNetView {
 public:
  static constexpr std::int64_t kUnlabeled = -1;

  MutableNetView(int levels, std::int64_t m, std::int64_t layer_concepts, bool lateral)
      : levels_(levels), m_(m), width_(layer_concepts * m), lateral_(lateral) {
    const auto w = static_cast<std::size_t>(width_);
    for (int l = 0; l <= levels_; ++l) {
      ff_.emplace_back(l == 0 ? 0 : w * w, 0.0);
      lat_.emplace_back(lateral && l > 0 ? w * w : 0, 0.0);
      labels_.emplace_back(w, kUnlabeled);
      classes_.emplace_back(w, 0);
      engaged_.emplace_back(w, 0);
    }
    for (std::int64_t v = 0; v < width_; ++v) labels_[0][static_cast<std::size_t>(v)] = v / m_;
  }

  int levels() const { return levels_; }
  std::int64_t m() const { return m_; }
  std::int64_t width() const { return width_; }
  bool lateral() const { return lateral_; }

  double& ff(int l, std::int64_t v, std::int64_t u) { return ff_[static_cast<std::size_t>(l)][idx(v, u)]; }
  double ff(int l, std::int64_t v, std::int64_t u) const { return ff_[static_cast<std::size_t>(l)][idx(v, u)]; }
  double& lat(int l, std::int64_t v, std::int64_t u) { return lat_[static_cast<std::size_t>(l)][idx(v, u)]; }
  double lat(int l, std::int64_t v, std::int64_t u) const { return lat_[static_cast<std::size_t>(l)][idx(v, u)]; }

  /// Local concept index represented by neuron v of layer l, or kUnlabeled.
  std::int64_t label(int l, std::int64_t v) const { return labels_[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)]; }
  void set_label(int l, std::int64_t v, std::int64_t c) { labels_[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)] = c; }
  int rep_class(int l, std::int64_t v) const { return classes_[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)]; }
  void set_rep_class(int l, std::int64_t v, int c) { classes_[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(c); }
  bool engaged(int l, std::int64_t v) const { return engaged_[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)] != 0; }
  void engage(int l, std::int64_t v) { engaged_[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)] = 1; }

  std::vector<std::int64_t> reps_of(int l, std::int64_t c) const {
    std::vector<std::int64_t> out;
    for (std::int64_t v = 0; v < width_; ++v)
      if (label(l, v) == c) out.push_back(v);
    return out;
  }

  std::vector<std::uint8_t> available(int l) const {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width_));
    for (std::int64_t v = 0; v < width_; ++v) out[static_cast<std::size_t>(v)] = label(l, v) == kUnlabeled ? 1 : 0;
    return out;
  }

  /// Weighted input of every layer-l neuron from the given firing vectors.
  std::vector<double> potentials(int l, const std::vector<std::uint8_t>& below,
                                 const std::vector<std::uint8_t>* same = nullptr) const {
    std::vector<double> pot(static_cast<std::size_t>(width_), 0.0);
    for (std::int64_t v = 0; v < width_; ++v) {
      double s = 0;
      const double* row = &ff_[static_cast<std::size_t>(l)][idx(v, 0)];
      for (std::int64_t u = 0; u < width_; ++u)
        if (below[static_cast<std::size_t>(u)]) s += row[u];
      if (same && lateral_) {
        const double* lrow = &lat_[static_cast<std::size_t>(l)][idx(v, 0)];
        for (std::int64_t u = 0; u < width_; ++u)
          if ((*same)[static_cast<std::size_t>(u)]) s += lrow[u];
      }
      pot[static_cast<std::size_t>(v)] = s;
    }
    return pot;
  }

 private:
  std::size_t idx(std::int64_t v, std::int64_t u) const { return static_cast<std::size_t>(v * width_ + u); }

  int levels_;
  std::int64_t m_;
  std::int64_t width_;
  bool lateral_;
  std::vector<std::vector<double>> ff_;
  std::vector<std::vector<double>> lat_;
  std::vector<std::vector<std::int64_t>> labels_;
  std::vector<std::vector<std::uint8_t>> classes_;
  std::vector<std::vector<std::uint8_t>> engaged_;
};

// ---------------------------------------------------------------------------
// Reports

struct LearnedConcept {
  ConceptId concept_id;
  std::vector<std::int64_t> reps;                        ///< view positions, ascending
  std::vector<int> classes;                              ///< per rep, 1 or 2
  std::vector<std::vector<std::int64_t>> child_in_degree;  ///< [rep][child]
  std::vector<std::int64_t> lateral_in_degree;
  std::vector<std::int64_t> churn;                       ///< per later round (multi-step only)
  bool children_fired = true;                            ///< bottom-up soundness at this stage
  bool per_child_ok = true;                              ///< every (rep, child) >= ceil(a m)
  bool total_ok = true;                                  ///< every rep >= ceil(b k m)
  bool converged = true;
};

struct LearnReport {
  LearnAlgorithm algorithm = LearnAlgorithm::FFHigh;
  ConceptId target;
  Ratio learn_threshold;
  std::vector<LearnedConcept> concepts;
  bool soundness_ok = true;
  bool weights_binary = true;
  bool labels_disjoint = true;
  std::int64_t stray_edges = 0;  ///< weight-1 edges into reps from outside their children / class-1 peers
  std::vector<LowViolation> low_violations;
  std::optional<ClassReport> class_report;
  bool per_child_audit = true;
  bool total_audit = true;
  bool converged = true;
  std::string failure;          ///< non-empty when learning aborted (starvation, non-convergence)
  bool success = false;
};

struct LearnResult {
  std::shared_ptr<const LayeredNetwork> net;  ///< null when learning aborted
  LearnReport report;
  std::shared_ptr<const MutableNetView> view;
};

// ---------------------------------------------------------------------------
// Learners

namespace detail {

class Learner {
 public:
  Learner(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp, const ConnectivityParams& conn,
          const LearnConfig& cfg)
      : h_(std::move(h)), cp_(cp), conn_(conn), cfg_(cfg) {
    cp_.validate();
    cfg_.validate(cp_, conn_);
    target_ = cfg_.target.value_or(ConceptId{cp_.l_max, 0});
    h_->require(target_);
    if (target_.level < 1) throw std::invalid_argument("learn: target must be at level >= 1");
    L_ = target_.level;
    m_ = cp_.m;
    const std::int64_t leaves = checked_pow(cp_.k, L_);
    const std::int64_t n = cfg_.layer_concepts > 0 ? cfg_.layer_concepts : leaves;
    if (n < leaves)
      throw std::invalid_argument("learn: layer width n = " + std::to_string(n) + " is below the " +
                                  std::to_string(leaves) + " leaves of the target");
    lateral_ = cfg_.algorithm == LearnAlgorithm::LateralMultiStep || cfg_.algorithm == LearnAlgorithm::LateralTwoPhase;
    view_ = std::make_shared<MutableNetView>(L_, m_, n, lateral_);
    const std::int64_t km = cp_.k * m_;
    switch (cfg_.algorithm) {
      case LearnAlgorithm::FFHigh: threshold_ = Ratio(km); break;
      case LearnAlgorithm::FFLow:
      case LearnAlgorithm::LateralMultiStep: threshold_ = conn_.a * Ratio(km); break;
      case LearnAlgorithm::LateralTwoPhase: threshold_ = cfg_.b * Ratio(km); break;
    }
    // Layer-0 labels beyond the target's leaves stay unlabeled.
    for (std::int64_t v = 0; v < view_->width(); ++v)
      if (v / m_ >= leaves) view_->set_label(0, v, MutableNetView::kUnlabeled);
    wire();
  }

  LearnResult run() {
    LearnReport& rep = report_;
    rep.algorithm = cfg_.algorithm;
    rep.target = target_;
    rep.learn_threshold = threshold_;
    try {
      for (int l = 1; l <= L_; ++l) {
        const std::int64_t count = checked_pow(cp_.k, L_ - l);
        for (std::int64_t i = 0; i < count; ++i) learn_concept(l, i);
      }
    } catch (const WtaStarvation& e) {
      rep.failure = e.what();
    } catch (const NonConvergedError& e) {
      rep.failure = e.what();
    }
    LearnResult out;
    out.view = view_;
    if (rep.failure.empty()) {
      auto net = std::make_shared<LayeredNetwork>(to_network());
      audit(*net);
      out.net = net;
    }
    rep.success = rep.failure.empty() && checker_passes();
    out.report = rep;
    return out;
  }

 private:
  double threshold() const { return threshold_.to_double() - 1e-9; }

  ConceptId global(int l, std::int64_t local) const {
    return {l, target_.index * checked_pow(cp_.k, L_ - l) + local};
  }

  void wire() {
    Rng rng = make_rng(cfg_.seed, 0x30);
    std::bernoulli_distribution coin(cfg_.p_prime);
    const double w0 = cfg_.w0.value_or(1.0 / (static_cast<double>(checked_pow(cp_.k, cp_.l_max)) + 1.0));
    const bool full = cfg_.algorithm == LearnAlgorithm::FFHigh;
    const std::int64_t w = view_->width();
    for (int l = 1; l <= L_; ++l)
      for (std::int64_t v = 0; v < w; ++v) {
        for (std::int64_t u = 0; u < w; ++u)
          if (full || coin(rng)) view_->ff(l, v, u) = w0;
        if (lateral_)
          for (std::int64_t u = 0; u < w; ++u)
            if (u != v && coin(rng)) view_->lat(l, v, u) = w0;
      }
  }

  std::vector<std::uint8_t> leaf_input(int l, std::int64_t local) const {
    std::vector<std::uint8_t> x(static_cast<std::size_t>(view_->width()), 0);
    const std::int64_t width = checked_pow(cp_.k, l);
    for (std::int64_t leaf = local * width; leaf < (local + 1) * width; ++leaf)
      for (std::int64_t j = 0; j < m_; ++j) x[static_cast<std::size_t>(leaf * m_ + j)] = 1;
    return x;
  }

  std::vector<std::uint8_t> threshold_fire(const std::vector<double>& pot) const {
    std::vector<std::uint8_t> f(pot.size(), 0);
    for (std::size_t i = 0; i < pot.size(); ++i) f[i] = pot[i] >= threshold() ? 1 : 0;
    return f;
  }

  /// Firing of layers 0..top after presenting leaves(concept at level l,
  /// local index i), simulated at the learning threshold.
  std::vector<std::vector<std::uint8_t>> cascade(int l, std::int64_t i, int top) const {
    std::vector<std::vector<std::uint8_t>> f(static_cast<std::size_t>(top) + 1,
                                             std::vector<std::uint8_t>(static_cast<std::size_t>(view_->width()), 0));
    f[0] = leaf_input(l, i);
    if (!lateral_) {
      for (int x = 1; x <= top; ++x) f[static_cast<std::size_t>(x)] = threshold_fire(view_->potentials(x, f[static_cast<std::size_t>(x - 1)]));
      return f;
    }
    for (int t = 0; t < 2 * top + 2; ++t) {
      auto next = f;
      for (int x = 1; x <= top; ++x)
        next[static_cast<std::size_t>(x)] =
            threshold_fire(view_->potentials(x, f[static_cast<std::size_t>(x - 1)], &f[static_cast<std::size_t>(x)]));
      f = std::move(next);
    }
    return f;
  }

  bool is_child_rep(int l, std::int64_t u, std::int64_t local) const {
    const std::int64_t lab = view_->label(l - 1, u);
    return lab != MutableNetView::kUnlabeled && lab / cp_.k == local;
  }

  /// One-shot: nonzero forward in-edges from child reps become 1, the rest 0;
  /// lateral in-edges from `peers` likewise.
  void finalize(int l, std::int64_t local, std::int64_t v, const std::vector<std::int64_t>* peers) {
    const std::int64_t w = view_->width();
    if (cfg_.oja) {
      oja_finalize(l, local, v);
    } else {
      for (std::int64_t u = 0; u < w; ++u) {
        double& e = view_->ff(l, v, u);
        e = (e != 0.0 && is_child_rep(l, u, local)) ? 1.0 : 0.0;
      }
    }
    if (lateral_) {
      std::vector<std::uint8_t> keep(static_cast<std::size_t>(w), 0);
      if (peers)
        for (const auto p : *peers) keep[static_cast<std::size_t>(p)] = 1;
      for (std::int64_t u = 0; u < w; ++u) {
        double& e = view_->lat(l, v, u);
        e = (e != 0.0 && keep[static_cast<std::size_t>(u)] && u != v) ? 1.0 : 0.0;
      }
    }
  }

  /// Incremental path: Oja's rule on the nonzero forward in-edges with the
  /// child reps as input, rescaled by sqrt(#active inputs), then snapped.
  void oja_finalize(int l, std::int64_t local, std::int64_t v) {
    const std::int64_t w = view_->width();
    std::vector<std::int64_t> present;
    for (std::int64_t u = 0; u < w; ++u)
      if (view_->ff(l, v, u) != 0.0) present.push_back(u);
    std::vector<double> ws;
    std::vector<std::uint8_t> xs;
    std::int64_t active = 0;
    for (const auto u : present) {
      ws.push_back(view_->ff(l, v, u));
      xs.push_back(is_child_rep(l, u, local) ? 1 : 0);
      active += xs.back();
    }
    for (int it = 0; it < cfg_.oja_max_iterations; ++it) {
      auto next = oja_update(ws, xs, cfg_.rho);
      double delta = 0;
      for (std::size_t i = 0; i < ws.size(); ++i) delta = std::max(delta, std::fabs(next[i] - ws[i]));
      ws = std::move(next);
      if (!std::isfinite(delta)) break;
      if (delta < 1e-12) break;
    }
    const double scale = std::sqrt(static_cast<double>(std::max<std::int64_t>(active, 1)));
    for (auto& x : ws) x *= scale;
    const auto snapped = clamp_learned_weights(ws, cfg_.eta);
    for (std::int64_t u = 0; u < w; ++u) view_->ff(l, v, u) = 0.0;
    for (std::size_t i = 0; i < present.size(); ++i) view_->ff(l, v, present[i]) = snapped[i];
  }

  void hebbian(int l, std::int64_t v, const std::vector<std::uint8_t>& below, const std::vector<std::int64_t>& peers) {
    const std::int64_t w = view_->width();
    double before = 0, after = 0;
    for (std::int64_t u = 0; u < w; ++u) before += view_->ff(l, v, u) + view_->lat(l, v, u);
    for (std::int64_t u = 0; u < w; ++u)
      if (below[static_cast<std::size_t>(u)]) view_->ff(l, v, u) *= 1.0 + cfg_.beta;
    for (const auto u : peers)
      if (u != v) view_->lat(l, v, u) *= 1.0 + cfg_.beta;
    for (std::int64_t u = 0; u < w; ++u) after += view_->ff(l, v, u) + view_->lat(l, v, u);
    if (after <= 0) return;
    const double s = before / after;
    for (std::int64_t u = 0; u < w; ++u) {
      view_->ff(l, v, u) *= s;
      view_->lat(l, v, u) *= s;
    }
  }

  void label(int l, std::int64_t local, const std::vector<std::int64_t>& chosen, int cls) {
    for (const auto v : chosen) {
      view_->set_label(l, v, local);
      view_->set_rep_class(l, v, cls);
      view_->engage(l, v);
    }
  }

  void learn_concept(int l, std::int64_t local) {
    LearnedConcept lc;
    lc.concept_id = global(l, local);
    const auto f = cascade(l, local, l - 1);
    const auto& below = f[static_cast<std::size_t>(l - 1)];
    if (l >= 2) {
      for (int g = 0; g < cp_.k; ++g)
        for (const auto u : view_->reps_of(l - 1, local * cp_.k + g))
          if (!below[static_cast<std::size_t>(u)]) lc.children_fired = false;
    }
    report_.soundness_ok = report_.soundness_ok && lc.children_fired;
    auto avail = view_->available(l);
    const auto pot = view_->potentials(l, below);

    switch (cfg_.algorithm) {
      case LearnAlgorithm::FFHigh:
      case LearnAlgorithm::FFLow: {
        const auto chosen = m_wta(pot, avail, m_);
        label(l, local, chosen, 1);
        for (const auto v : chosen) finalize(l, local, v, nullptr);
        break;
      }
      case LearnAlgorithm::LateralMultiStep: {
        std::vector<std::int64_t> cur = m_wta(pot, avail, m_);
        for (const auto v : cur) hebbian(l, v, below, {});
        for (int r = 2; r <= cfg_.t_steps; ++r) {
          std::vector<std::uint8_t> same(static_cast<std::size_t>(view_->width()), 0);
          for (const auto v : cur) same[static_cast<std::size_t>(v)] = 1;
          const auto p2 = view_->potentials(l, below, &same);
          auto next = m_wta(p2, avail, m_);
          std::int64_t churn = 0;
          for (const auto v : next)
            if (!std::binary_search(cur.begin(), cur.end(), v)) ++churn;
          lc.churn.push_back(churn);
          for (const auto v : next) hebbian(l, v, below, cur);
          cur = std::move(next);
        }
        lc.converged = lc.churn.empty() || lc.churn.back() == 0;
        report_.converged = report_.converged && lc.converged;
        label(l, local, cur, 1);
        for (const auto v : cur) finalize(l, local, v, &cur);
        // Declared class follows the per-child rule.
        const std::int64_t q1 = ceil_mul(conn_.a, m_);
        for (const auto v : cur) {
          bool all = true;
          for (int g = 0; g < cp_.k; ++g) {
            std::int64_t n = 0;
            for (const auto u : view_->reps_of(l - 1, local * cp_.k + g)) n += view_->ff(l, v, u) == 1.0 ? 1 : 0;
            all = all && n >= q1;
          }
          view_->set_rep_class(l, v, all ? 1 : 2);
        }
        break;
      }
      case LearnAlgorithm::LateralTwoPhase: {
        const auto c1 = m_wta(pot, avail, conn_.m1);
        label(l, local, c1, 1);
        for (const auto v : c1) finalize(l, local, v, nullptr);
        for (const auto v : c1) avail[static_cast<std::size_t>(v)] = 0;
        std::vector<std::uint8_t> same(static_cast<std::size_t>(view_->width()), 0);
        for (const auto v : c1) same[static_cast<std::size_t>(v)] = 1;
        const auto p2 = view_->potentials(l, below, &same);
        const auto c2 = m_wta(p2, avail, conn_.m2);
        label(l, local, c2, 2);
        for (const auto v : c2) finalize(l, local, v, &c1);
        lc.churn = {0};
        break;
      }
    }
    lc.reps = view_->reps_of(l, local);
    report_.concepts.push_back(std::move(lc));
  }

  LayeredNetwork to_network() const {
    const ReprKind kind = lateral_ ? ReprKind::Lateral
                                   : (cfg_.algorithm == LearnAlgorithm::FFHigh ? ReprKind::HighFF : ReprKind::LowFF);
    LayeredNetwork net(h_, cp_, kind, target_);
    for (int l = 1; l <= L_; ++l)
      for (std::int64_t i = 0; i < checked_pow(cp_.k, L_ - l); ++i) {
        const ConceptId c = global(l, i);
        const auto reps = view_->reps_of(l, i);
        for (std::size_t j = 0; j < reps.size(); ++j) {
          const std::int64_t v = reps[j];
          for (int g = 0; g < cp_.k; ++g) {
            const auto child = view_->reps_of(l - 1, i * cp_.k + g);
            auto blk = net.ff_block(c, static_cast<std::int64_t>(j), g);
            for (std::size_t b = 0; b < child.size(); ++b)
              if (view_->ff(l, v, child[b]) == 1.0) set_bit(blk, b);
          }
          if (lateral_) {
            auto blk = net.lat_block(c, static_cast<std::int64_t>(j));
            for (std::size_t b = 0; b < reps.size(); ++b)
              if (view_->lat(l, v, reps[b]) == 1.0) set_bit(blk, b);
          }
          // Declared class is re-derived: a phase-2 winner may well meet the
          // Class-1 floor, which is not a defect of the learned network.
          bool first = true;
          for (int g = 0; g < cp_.k; ++g)
            first = first && static_cast<std::int64_t>(popcount(net.ff_block(c, static_cast<std::int64_t>(j), g))) >=
                                 ceil_mul(conn_.a, m_);
          net.set_declared_class(c, static_cast<std::int64_t>(j), first ? 1 : 2);
        }
      }
    switch (kind) {
      case ReprKind::HighFF: net.set_tau(tau_high(cp_)); break;
      case ReprKind::LowFF:
        net.set_tau(tau_low(cp_, conn_.a));
        net.set_connectivity(ConnectivityParams::low(conn_.a, m_));
        break;
      case ReprKind::Lateral:
        net.set_tau(tau_lateral(cp_, conn_.a));
        net.set_connectivity(conn_);
        break;
    }
    net.set_learn_tau(threshold_);
    net.build_info() = {std::string("learned:") + to_string(cfg_.algorithm), cfg_.seed, 0};
    return net;
  }

  void audit(const LayeredNetwork& net) {
    LearnReport& rep = report_;
    const std::int64_t w = view_->width();
    const std::int64_t qa = ceil_mul(conn_.a, m_);
    const std::int64_t qb = ceil_mul(cfg_.b, cp_.k * m_);
    for (auto& lc : rep.concepts) {
      const int l = lc.concept_id.level;
      const std::int64_t local = lc.concept_id.index - target_.index * checked_pow(cp_.k, L_ - l);
      if (static_cast<std::int64_t>(lc.reps.size()) != m_) rep.labels_disjoint = false;
      for (const auto v : lc.reps) {
        std::vector<std::int64_t> per(static_cast<std::size_t>(cp_.k), 0);
        std::int64_t lat = 0, total = 0;
        for (std::int64_t u = 0; u < w; ++u) {
          const double e = view_->ff(l, v, u);
          if (e != 0.0 && e != 1.0) rep.weights_binary = false;
          if (e == 1.0) {
            if (is_child_rep(l, u, local))
              ++per[static_cast<std::size_t>(view_->label(l - 1, u) % cp_.k)];
            else
              ++rep.stray_edges;
          }
          if (lateral_) {
            const double le = view_->lat(l, v, u);
            if (le != 0.0 && le != 1.0) rep.weights_binary = false;
            if (le == 1.0) {
              if (view_->label(l, u) == local)
                ++lat;
              else
                ++rep.stray_edges;
            }
          }
        }
        for (const auto n : per) {
          total += n;
          if (n < qa) lc.per_child_ok = false;
        }
        if (total < qb) lc.total_ok = false;
        lc.child_in_degree.push_back(per);
        lc.lateral_in_degree.push_back(lat);
        lc.classes.push_back(view_->rep_class(l, v));
      }
      rep.per_child_audit = rep.per_child_audit && lc.per_child_ok;
      rep.total_audit = rep.total_audit && lc.total_ok;
    }
    // Every labeled neuron belongs to exactly one concept by construction of
    // the label array; check the counts per layer as well.
    for (int l = 1; l <= L_; ++l) {
      std::int64_t labeled = 0;
      for (std::int64_t v = 0; v < w; ++v) labeled += view_->label(l, v) != MutableNetView::kUnlabeled ? 1 : 0;
      if (labeled != checked_pow(cp_.k, L_ - l) * m_) rep.labels_disjoint = false;
    }
    switch (cfg_.algorithm) {
      case LearnAlgorithm::FFHigh: rep.low_violations = check_low_connectivity(net, Ratio(1)); break;
      case LearnAlgorithm::FFLow: rep.low_violations = check_low_connectivity(net, conn_.a); break;
      default: rep.class_report = check_class_assumption(net); break;
    }
  }

  bool checker_passes() const {
    if (!report_.weights_binary || !report_.labels_disjoint) return false;
    if (report_.class_report) return report_.class_report->pass();
    return report_.low_violations.empty();
  }

  std::shared_ptr<const ConceptHierarchy> h_;
  CommonParams cp_;
  ConnectivityParams conn_;
  LearnConfig cfg_;
  ConceptId target_;
  int L_ = 0;
  std::int64_t m_ = 0;
  bool lateral_ = false;
  Ratio threshold_;
  std::shared_ptr<MutableNetView> view_;
  LearnReport report_;
};

}  // namespace detail

inline LearnResult learn(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp,
                         const ConnectivityParams& conn, const LearnConfig& cfg) {
  return detail::Learner(std::move(h), cp, conn, cfg).run();
}

inline LearnResult learn_ff_high(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp, LearnConfig cfg) {
  cfg.algorithm = LearnAlgorithm::FFHigh;
  return learn(std::move(h), cp, ConnectivityParams::low(Ratio(1), cp.m), cfg);
}

inline LearnResult learn_ff_low(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp,
                                const ConnectivityParams& conn, LearnConfig cfg) {
  cfg.algorithm = LearnAlgorithm::FFLow;
  return learn(std::move(h), cp, conn, cfg);
}

inline LearnResult learn_lateral_multistep(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp,
                                           const ConnectivityParams& conn, LearnConfig cfg) {
  cfg.algorithm = LearnAlgorithm::LateralMultiStep;
  return learn(std::move(h), cp, conn, cfg);
}

inline LearnResult learn_lateral_twophase(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp,
                                          const ConnectivityParams& conn, LearnConfig cfg) {
  cfg.algorithm = LearnAlgorithm::LateralTwoPhase;
  return learn(std::move(h), cp, conn, cfg);
}

/// Same 0/1 incidence (forward and lateral) over a's wired concepts.
inline bool same_structure(const LayeredNetwork& a, const LayeredNetwork& b) {
  if (a.m() != b.m() || a.k() != b.k() || a.topology() != b.topology()) return false;
  if (a.wired_concepts() != b.wired_concepts()) return false;
  for (const auto& c : a.wired_concepts())
    for (std::int64_t j = 0; j < a.m(); ++j) {
      for (int g = 0; g < a.k(); ++g) {
        const auto x = a.ff_block(c, j, g), y = b.ff_block(c, j, g);
        if (!std::equal(x.begin(), x.end(), y.begin())) return false;
      }
      if (a.topology() == Topology::Lateral) {
        const auto x = a.lat_block(c, j), y = b.lat_block(c, j);
        if (!std::equal(x.begin(), x.end(), y.begin())) return false;
      }
    }
  return true;
}

/// Learned network equals `built` once each concept's reps are relabeled by
/// ascending position, and no weight-1 edge exists outside that structure.
inline bool structurally_equivalent(const LearnResult& learned, const LayeredNetwork& built) {
  if (!learned.net) return false;
  const auto& r = learned.report;
  return r.weights_binary && r.labels_disjoint && r.stray_edges == 0 && same_structure(*learned.net, built);
}

// ---------------------------------------------------------------------------
// Constraint estimates

struct Constraint2Estimate {
  std::int64_t samples = 0;
  std::int64_t hits_b = 0;
  std::int64_t hits_ab = 0;
  double estimate = 0;  ///< Pr(A | B)
  double se = 0;
};

/// Monte Carlo for the bridging experiment: k groups of m candidate edges,
/// each present with probability p_prime. A: every group >= ceil(a m);
/// B: total >= ceil(b k m).
inline Constraint2Estimate constraint2_estimate(int k, std::int64_t m, double p_prime, Ratio a, Ratio b,
                                                std::int64_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("constraint2_estimate: samples must be >= 1");
  if (a > b || b > Ratio(1) || a < Ratio(0)) throw std::invalid_argument("constraint2_estimate: need 0 ≤ a ≤ b ≤ 1");
  Rng rng = make_rng(seed, 0x40);
  std::binomial_distribution<std::int64_t> group(m, p_prime);
  const std::int64_t qa = ceil_mul(a, m), qb = ceil_mul(b, k * m);
  Constraint2Estimate e;
  e.samples = samples;
  for (std::int64_t s = 0; s < samples; ++s) {
    std::int64_t total = 0;
    bool all = true;
    for (int g = 0; g < k; ++g) {
      const std::int64_t n = group(rng);
      total += n;
      all = all && n >= qa;
    }
    if (total >= qb) {
      ++e.hits_b;
      if (all) ++e.hits_ab;
    }
  }
  if (e.hits_b > 0) {
    e.estimate = static_cast<double>(e.hits_ab) / static_cast<double>(e.hits_b);
    e.se = std::sqrt(e.estimate * (1 - e.estimate) / static_cast<double>(e.hits_b));
  }
  return e;
}

struct ProportionEstimate {
  std::int64_t trials = 0;
  std::int64_t hits = 0;
  double estimate = 0;
  Interval ci;
};

/// Pr[at least m of the n*m layer neurons get >= ceil(b k m) random in-edges
/// from a fixed set of k*m neurons].
inline ProportionEstimate constraint1_estimate(int k, std::int64_t m, std::int64_t n, double p_prime, Ratio b,
                                               std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("constraint1_estimate: trials must be >= 1");
  if (b < Ratio(0) || b > Ratio(1)) throw std::invalid_argument("constraint1_estimate: b must lie in [0,1]");
  if (!(p_prime >= 0 && p_prime <= 1)) throw std::invalid_argument("constraint1_estimate: p_prime must lie in [0,1]");
  Rng rng = make_rng(seed, 0x50);
  std::binomial_distribution<std::int64_t> indeg(k * m, p_prime);
  const std::int64_t qb = ceil_mul(b, k * m);
  ProportionEstimate e;
  e.trials = trials;
  for (std::int64_t t = 0; t < trials; ++t) {
    std::int64_t good = 0;
    for (std::int64_t v = 0; v < n * m && good < m; ++v) good += indeg(rng) >= qb ? 1 : 0;
    if (good >= m) ++e.hits;
  }
  e.estimate = static_cast<double>(e.hits) / static_cast<double>(trials);
  e.ci = wilson(e.hits, trials);
  return e;
}

/// Closed form of the same event: Bin(n m, pi) >= m with pi = Pr[Bin(k m, p') >= ceil(b k m)].
inline double constraint1_exact(int k, std::int64_t m, std::int64_t n, double p_prime, Ratio b) {
  const double pi = binomial_upper_tail(k * m, p_prime, ceil_mul(b, k * m));
  return binomial_upper_tail(n * m, pi, m);
}

struct ThetaEstimate {
  LearnAlgorithm algorithm = LearnAlgorithm::FFHigh;
  std::int64_t runs = 0;
  std::int64_t failures = 0;
  Interval ci;                      ///< Wilson 95 % interval of the failure rate
  std::int64_t clause_a = 0;        ///< runs with a per-child (clause a) violation
  std::int64_t clause_b = 0;        ///< runs with a lateral (clause b) violation
  std::int64_t per_child = 0;       ///< runs failing the ceil(a m) per-child audit
  std::int64_t total = 0;           ///< runs failing the ceil(b k m) total audit
  std::int64_t unsound = 0;         ///< runs where some stage's children did not all fire
  std::int64_t nonconverged = 0;
  std::int64_t aborted = 0;
};

/// Failure rate of a learner over seeds base_seed + 0 .. runs - 1.
inline ThetaEstimate estimate_theta(std::shared_ptr<const ConceptHierarchy> h, const CommonParams& cp,
                                    const ConnectivityParams& conn, LearnConfig cfg, std::int64_t runs,
                                    std::uint64_t base_seed) {
  ThetaEstimate th;
  th.algorithm = cfg.algorithm;
  th.runs = runs;
  for (std::int64_t r = 0; r < runs; ++r) {
    cfg.seed = derive_seed(base_seed, 0x60, static_cast<std::uint64_t>(r));
    const auto res = learn(h, cp, conn, cfg);
    const auto& rep = res.report;
    if (!rep.success) ++th.failures;
    if (!rep.failure.empty()) ++th.aborted;
    if (!rep.per_child_audit) ++th.per_child;
    if (!rep.total_audit) ++th.total;
    if (!rep.soundness_ok) ++th.unsound;
    if (!rep.converged) ++th.nonconverged;
    if (rep.class_report) {
      bool a = false, b = false;
      for (const auto& c : rep.class_report->concepts)
        for (const auto& v : c.violations)
          for (const auto& cl : v.clauses) {
            a = a || cl == "a";
            b = b || cl == "b";
          }
      th.clause_a += a ? 1 : 0;
      th.clause_b += b ? 1 : 0;
    }
  }
  th.ci = wilson(th.failures, runs);
  return th;
}

}  // namespace hcrep
