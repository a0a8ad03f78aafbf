#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcrep/bounds.hpp"
#include "hcrep/hierarchy.hpp"
#include "hcrep/network.hpp"

namespace hcrep {

enum class PresentMode { OnceAtZero, Continuous };

inline const char* to_string(PresentMode m) { return m == PresentMode::OnceAtZero ? "once" : "continuous"; }

struct PresentationSchedule {
  LeafSet B;
  PresentMode mode = PresentMode::OnceAtZero;
  int horizon = 0;
};

/// Feed-forward default: present once, run to l_max.
inline PresentationSchedule ff_schedule(const LayeredNetwork& net, LeafSet b) {
  return {std::move(b), PresentMode::OnceAtZero, net.params().l_max};
}

/// Lateral default: present continuously, run two steps past 2*l_max.
inline PresentationSchedule lateral_schedule(const LayeredNetwork& net, LeafSet b) {
  return {std::move(b), PresentMode::Continuous, 2 * net.params().l_max + 2};
}

inline PresentationSchedule default_schedule(const LayeredNetwork& net, LeafSet b) {
  return net.topology() == Topology::Lateral ? lateral_schedule(net, std::move(b)) : ff_schedule(net, std::move(b));
}

/// Writes layer 0 at time t: surviving reps of B fire, everything else is silent.
inline void present_into(const LayeredNetwork& net, const PresentationSchedule& s, const FailureMask& mask, int t,
                         LayerBits& firing) {
  firing.clear_layer(0);
  if (s.mode == PresentMode::OnceAtZero && t != 0) return;
  const std::int64_t m = net.m();
  s.B.bits().for_each_set([&](std::size_t leaf) {
    const ConceptId b{0, static_cast<std::int64_t>(leaf)};
    auto dst = net.block(firing, b);
    const auto failed = net.block(mask.failed, b);
    for (std::size_t w = 0; w < dst.size(); ++w) dst[w] = ~failed[w];
    const std::size_t valid = static_cast<std::size_t>(m % static_cast<std::int64_t>(kWordBits));
    if (valid != 0) dst[dst.size() - 1] &= (Word{1} << valid) - 1;
  });
}

inline std::vector<Word> present(const LayeredNetwork& net, const PresentationSchedule& s, const FailureMask& mask,
                                 int t) {
  LayerBits bits = net.empty_bits();
  present_into(net, s, mask, t, bits);
  const auto l0 = bits.layer(0);
  return {l0.begin(), l0.end()};
}

/// Runs times 0..horizon, calling observer(t, firing) after each time step.
/// Keeps two buffers so repeated trials do not reallocate.
class Simulator {
 public:
  explicit Simulator(const LayeredNetwork& net) : net_(net), cur_(net.empty_bits()), next_(net.empty_bits()) {}

  template <typename Observer>
  void run(const PresentationSchedule& s, const FailureMask& mask, Observer&& observer) {
    cur_.clear();
    present_into(net_, s, mask, 0, cur_);
    observer(0, static_cast<const LayerBits&>(cur_));
    for (int t = 1; t <= s.horizon; ++t) {
      net_.step_into(cur_, mask, next_);
      present_into(net_, s, mask, t, next_);
      std::swap(cur_, next_);
      observer(t, static_cast<const LayerBits&>(cur_));
    }
  }

  const LayeredNetwork& network() const { return net_; }

 private:
  const LayeredNetwork& net_;
  LayerBits cur_;
  LayerBits next_;
};

template <typename Observer>
void simulate(const LayeredNetwork& net, const PresentationSchedule& s, const FailureMask& mask, Observer&& obs) {
  Simulator sim(net);
  sim.run(s, mask, std::forward<Observer>(obs));
}

struct RecognitionOutcome {
  ConceptId target;
  std::vector<std::int64_t> fired_count;  ///< reps of target firing at t = 0..horizon
  int check_time = 0;                     ///< feed-forward: level(target)
  bool recognized = false;
  bool fired_when_checked = false;        ///< any target rep fired at the checked time(s)
  std::optional<int> first_stable_time;
  std::optional<bool> timing_ok;          ///< lateral, failure-free runs only
  std::vector<std::string> notes;
};

inline bool is_failure_free(const FailureMask& mask) {
  for (int l = 0; l < mask.failed.layer_count(); ++l)
    for (const Word w : mask.failed.layer(l))
      if (w != 0) return false;
  return true;
}

inline RecognitionOutcome run_ff(Simulator& sim, const PresentationSchedule& s, const FailureMask& mask,
                                 ConceptId target) {
  const LayeredNetwork& net = sim.network();
  net.hierarchy().require(target);
  if (net.topology() != Topology::FeedForward) throw std::invalid_argument("run_ff: network is not feed-forward");
  if (s.mode != PresentMode::OnceAtZero) throw std::invalid_argument("run_ff: needs a once-at-0 schedule");
  if (s.horizon < target.level) throw std::invalid_argument("run_ff: horizon shorter than level(target)");
  RecognitionOutcome out;
  out.target = target;
  out.check_time = target.level;
  sim.run(s, mask, [&](int, const LayerBits& f) { out.fired_count.push_back(net.count(f, target)); });
  const std::int64_t fired = out.fired_count[static_cast<std::size_t>(target.level)];
  out.recognized = at_least(fired, firing_floor(net.params()));
  out.fired_when_checked = fired > 0;
  return out;
}

inline RecognitionOutcome run_ff(const LayeredNetwork& net, const PresentationSchedule& s, const FailureMask& mask,
                                 ConceptId target) {
  Simulator sim(net);
  return run_ff(sim, s, mask, target);
}

namespace detail {

/// Per-concept earliest times from which reps must keep firing when nothing
/// has failed: Class 1 from 2l-1, Class 2 from 2l, inputs from 0.
struct TimingCheck {
  std::vector<ConceptId> concepts;
  std::vector<bool> ok;

  void observe(const LayeredNetwork& net, int t, const LayerBits& f, std::vector<std::string>& notes) {
    for (std::size_t i = 0; i < concepts.size(); ++i) {
      const ConceptId c = concepts[i];
      for (std::int64_t j = 0; j < net.m(); ++j) {
        const int cls = c.level == 0 ? 1 : net.declared_class(c, j);
        const int from = c.level == 0 ? 0 : (cls == 1 ? 2 * c.level - 1 : 2 * c.level);
        if (t < from) continue;
        if (!test_bit(net.block(f, c), static_cast<std::size_t>(j)) && ok[i]) {
          ok[i] = false;
          notes.push_back("timing: rep " + std::to_string(j) + " of " + c.str() + " (class " + std::to_string(cls) +
                          ") silent at t = " + std::to_string(t));
        }
      }
    }
  }
};

}  // namespace detail

/// Lateral recognition: at least the firing floor of target reps fire at
/// every time of [t*, T] for some t* <= T - holdoff.
///
/// When the mask is failure-free the timing of every r2-supported descendant
/// is checked as well: Class-1 reps of a level-l concept fire at all
/// t >= 2l - 1 and Class-2 reps at all t >= 2l.
inline RecognitionOutcome run_lateral(Simulator& sim, const PresentationSchedule& s, const FailureMask& mask,
                                      ConceptId target, int holdoff = 2) {
  const LayeredNetwork& net = sim.network();
  const auto& h = net.hierarchy();
  h.require(target);
  if (net.topology() != Topology::Lateral) throw std::invalid_argument("run_lateral: network is not lateral kind");
  if (s.mode != PresentMode::Continuous) throw std::invalid_argument("run_lateral: needs a continuous schedule");
  if (s.horizon < 2 * target.level)
    throw std::invalid_argument("run_lateral: horizon T = " + std::to_string(s.horizon) + " is below 2*level(target) = " +
                                std::to_string(2 * target.level));
  if (holdoff < 0 || holdoff > s.horizon) throw std::invalid_argument("run_lateral: holdoff out of range");
  RecognitionOutcome out;
  out.target = target;
  out.check_time = s.horizon;

  std::optional<detail::TimingCheck> timing;
  if (is_failure_free(mask)) {
    const SupportSet sup = support(h, s.B, net.params().r2);
    timing.emplace();
    for (const ConceptId& c : h.descendants(target))
      if (sup.contains(c) && (c.level == 0 || net.wired(c))) timing->concepts.push_back(c);
    timing->ok.assign(timing->concepts.size(), true);
  }

  sim.run(s, mask, [&](int t, const LayerBits& f) {
    out.fired_count.push_back(net.count(f, target));
    if (timing) timing->observe(net, t, f, out.notes);
  });

  const Ratio floor = firing_floor(net.params());
  int start = s.horizon + 1;
  while (start > 0 && at_least(out.fired_count[static_cast<std::size_t>(start - 1)], floor)) --start;
  if (start <= s.horizon) out.first_stable_time = start;
  out.recognized = out.first_stable_time && *out.first_stable_time <= s.horizon - holdoff;
  for (const auto n : out.fired_count) out.fired_when_checked = out.fired_when_checked || n > 0;
  if (timing) {
    bool all = true;
    for (const bool b : timing->ok) all = all && b;
    out.timing_ok = all;
  }
  return out;
}

inline RecognitionOutcome run_lateral(const LayeredNetwork& net, const PresentationSchedule& s,
                                      const FailureMask& mask, ConceptId target, int holdoff = 2) {
  Simulator sim(net);
  return run_lateral(sim, s, mask, target, holdoff);
}

inline RecognitionOutcome run_recognition(Simulator& sim, const PresentationSchedule& s, const FailureMask& mask,
                                          ConceptId target) {
  return sim.network().topology() == Topology::Lateral ? run_lateral(sim, s, mask, target)
                                                       : run_ff(sim, s, mask, target);
}

enum class SupportStatus { Supported, BelowR1, Gap };
enum class Verdict { Recognized, NotRecognized, MustNotFireViolated, Unconstrained };

inline const char* to_string(SupportStatus s) {
  switch (s) {
    case SupportStatus::Supported: return "supported";
    case SupportStatus::BelowR1: return "below-r1";
    case SupportStatus::Gap: return "gap";
  }
  return "?";
}

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Recognized: return "recognized";
    case Verdict::NotRecognized: return "not-recognized";
    case Verdict::MustNotFireViolated: return "must-not-fire-violated";
    case Verdict::Unconstrained: return "unconstrained";
  }
  return "?";
}

inline SupportStatus support_status(const ConceptHierarchy& h, const LeafSet& b, ConceptId target, Ratio r1, Ratio r2) {
  if (support(h, b, r2).contains(target)) return SupportStatus::Supported;
  if (!support(h, b, r1).contains(target)) return SupportStatus::BelowR1;
  return SupportStatus::Gap;
}

inline Verdict verdict(const RecognitionOutcome& o, SupportStatus status) {
  switch (status) {
    case SupportStatus::Supported: return o.recognized ? Verdict::Recognized : Verdict::NotRecognized;
    case SupportStatus::BelowR1: return o.fired_when_checked ? Verdict::MustNotFireViolated : Verdict::NotRecognized;
    case SupportStatus::Gap: return Verdict::Unconstrained;
  }
  return Verdict::Unconstrained;
}

}  // namespace hcrep
