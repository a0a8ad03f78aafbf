#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcrep/bitvec.hpp"
#include "hcrep/bounds.hpp"
#include "hcrep/hierarchy.hpp"
#include "hcrep/ratio.hpp"

namespace hcrep {

enum class Topology { FeedForward, Lateral };
enum class ThresholdMode { Recognition, Learning };

inline const char* to_string(Topology t) { return t == Topology::FeedForward ? "feed-forward" : "lateral"; }

struct NeuronId {
  int layer = 0;
  std::int64_t index = 0;  ///< in [0, n*m)
  friend auto operator<=>(const NeuronId&, const NeuronId&) = default;
};

/// Storage layout of one layer. Concept i of the layer owns the word block
/// [i*W, (i+1)*W) with W = words_for(m), so every rep block starts on a word
/// boundary. Neurons that represent no concept follow in a tail region.
struct LayerLayout {
  std::int64_t m = 0;
  std::int64_t concepts = 0;
  std::int64_t width = 0;  ///< n*m
  std::size_t block_words = 0;

  std::size_t rep_words() const { return static_cast<std::size_t>(concepts) * block_words; }
  std::int64_t tail_bits() const { return width - concepts * m; }
  std::size_t total_words() const { return rep_words() + words_for(static_cast<std::size_t>(tail_bits())); }

  std::size_t bit_of(std::int64_t index) const {
    if (index < concepts * m)
      return static_cast<std::size_t>(index / m) * block_words * kWordBits + static_cast<std::size_t>(index % m);
    return rep_words() * kWordBits + static_cast<std::size_t>(index - concepts * m);
  }
};

/// One bit per neuron in every layer, stored in the padded layout.
class LayerBits {
 public:
  LayerBits() = default;
  explicit LayerBits(const std::vector<LayerLayout>& layout) {
    for (const auto& l : layout) layers_.emplace_back(l.total_words(), 0);
  }

  std::span<Word> layer(int l) { return layers_.at(static_cast<std::size_t>(l)); }
  std::span<const Word> layer(int l) const { return layers_.at(static_cast<std::size_t>(l)); }
  int layer_count() const { return static_cast<int>(layers_.size()); }

  void clear() {
    for (auto& l : layers_) std::fill(l.begin(), l.end(), Word{0});
  }
  void clear_layer(int l) { std::fill(layers_[static_cast<std::size_t>(l)].begin(), layers_[static_cast<std::size_t>(l)].end(), Word{0}); }

  friend bool operator==(const LayerBits&, const LayerBits&) = default;

 private:
  std::vector<std::vector<Word>> layers_;
};

/// Survival bits for one trial. Stored as "failed" bits; zero means survives.
struct FailureMask {
  LayerBits failed;
};

struct FiringState {
  LayerBits firing;
  int t = 0;
};

struct BuildInfo {
  std::string sampling = "exact-quota";
  std::uint64_t seed = 0;
  std::int64_t rejections = 0;  ///< Bernoulli redraws of under-quota groups
};

/// Immutable layered network: rep positions, 0/1 incidence sets, threshold.
///
/// Only concepts inside the scope (a subtree, or the whole forest) carry
/// incoming edges. Every other neuron has potential 0.
class LayeredNetwork {
 public:
  LayeredNetwork(std::shared_ptr<const ConceptHierarchy> h, CommonParams cp, ReprKind kind,
                 std::optional<ConceptId> scope = std::nullopt, std::int64_t layer_concepts = 0)
      : h_(std::move(h)), cp_(cp), kind_(kind), scope_(scope) {
    if (!h_) throw std::invalid_argument("network: null hierarchy");
    if (cp_.k != h_->k() || cp_.l_max != h_->l_max())
      throw std::invalid_argument("network: k / l_max differ between params and hierarchy");
    if (scope_) h_->require(*scope_);
    topology_ = kind == ReprKind::Lateral ? Topology::Lateral : Topology::FeedForward;
    const std::int64_t n = layer_concepts > 0 ? layer_concepts : h_->params().n;
    const std::size_t w = words_for(static_cast<std::size_t>(cp_.m));
    for (int l = 0; l <= cp_.l_max; ++l) {
      if (h_->count_at(l) > n) throw std::invalid_argument("network: layer too narrow for its concepts");
      layout_.push_back({cp_.m, h_->count_at(l), n * cp_.m, w});
    }
    slot_.assign(static_cast<std::size_t>(h_->size()), -1);
    std::vector<ConceptId> roots;
    if (scope_) {
      roots.push_back(*scope_);
    } else {
      for (std::int64_t i = 0; i < h_->count_at(cp_.l_max); ++i) roots.push_back({cp_.l_max, i});
    }
    for (int l = 1; l <= cp_.l_max; ++l)
      for (const auto& r : roots) {
        if (r.level < l) continue;
        const std::int64_t width = checked_pow(cp_.k, r.level - l);
        for (std::int64_t i = 0; i < width; ++i) {
          const ConceptId c{l, r.index * width + i};
          slot_[static_cast<std::size_t>(h_->dense(c))] = static_cast<std::int64_t>(wired_.size());
          wired_.push_back(c);
        }
      }
    const std::size_t slots = wired_.size();
    ff_.assign(slots * static_cast<std::size_t>(cp_.m * cp_.k) * w, 0);
    if (topology_ == Topology::Lateral) lat_.assign(slots * static_cast<std::size_t>(cp_.m) * w, 0);
    labels_.assign(slots * static_cast<std::size_t>(cp_.m), 1);
  }

  const ConceptHierarchy& hierarchy() const { return *h_; }
  std::shared_ptr<const ConceptHierarchy> hierarchy_ptr() const { return h_; }
  const CommonParams& params() const { return cp_; }
  ReprKind kind() const { return kind_; }
  Topology topology() const { return topology_; }
  std::optional<ConceptId> scope() const { return scope_; }
  const std::vector<LayerLayout>& layout() const { return layout_; }
  const LayerLayout& layout(int l) const { return layout_.at(static_cast<std::size_t>(l)); }
  std::int64_t m() const { return cp_.m; }
  int k() const { return cp_.k; }
  std::size_t block_words() const { return layout_[0].block_words; }

  const std::optional<ConnectivityParams>& connectivity() const { return conn_; }
  void set_connectivity(const ConnectivityParams& c) { conn_ = c; }
  const BuildInfo& build_info() const { return info_; }
  BuildInfo& build_info() { return info_; }

  // Thresholds -------------------------------------------------------------

  Ratio tau() const { return tau_; }
  Ratio learn_tau() const { return learn_tau_; }
  void set_tau(Ratio t) { tau_ = t; }
  void set_learn_tau(Ratio t) { learn_tau_ = t; }
  ThresholdMode mode() const { return mode_; }
  void set_mode(ThresholdMode m) { mode_ = m; }
  Ratio active_tau() const { return mode_ == ThresholdMode::Recognition ? tau_ : learn_tau_; }

  // Reps -------------------------------------------------------------------

  NeuronId rep(ConceptId c, std::int64_t j) const { return {c.level, c.index * cp_.m + j}; }

  std::vector<NeuronId> reps(ConceptId c) const {
    h_->require(c);
    std::vector<NeuronId> out;
    for (std::int64_t j = 0; j < cp_.m; ++j) out.push_back(rep(c, j));
    return out;
  }

  /// rep^{-1}: the concept a neuron represents, if any.
  std::optional<ConceptId> concept_of(NeuronId v) const {
    if (v.layer < 0 || v.layer > cp_.l_max) return std::nullopt;
    const std::int64_t c = v.index / cp_.m;
    if (v.index < 0 || c >= layout(v.layer).concepts) return std::nullopt;
    return ConceptId{v.layer, c};
  }

  std::int64_t neuron_count() const {
    std::int64_t s = 0;
    for (const auto& l : layout_) s += l.width;
    return s;
  }

  // Incidence --------------------------------------------------------------

  bool wired(ConceptId c) const { return c.level >= 1 && slot(c) >= 0; }
  const std::vector<ConceptId>& wired_concepts() const { return wired_; }

  /// inc(v, child g) for v = rep j of c, as an m-bit set over reps(child).
  std::span<Word> ff_block(ConceptId c, std::int64_t j, int g) {
    return {ff_.data() + ff_index(c, j, g), block_words()};
  }
  std::span<const Word> ff_block(ConceptId c, std::int64_t j, int g) const {
    return {ff_.data() + ff_index(c, j, g), block_words()};
  }
  /// inc(v, c) for lateral networks.
  std::span<Word> lat_block(ConceptId c, std::int64_t j) { return {lat_.data() + lat_index(c, j), block_words()}; }
  std::span<const Word> lat_block(ConceptId c, std::int64_t j) const {
    return {lat_.data() + lat_index(c, j), block_words()};
  }

  /// Declared class (1 or 2) of rep j of c. Feed-forward reps are all Class 1.
  int declared_class(ConceptId c, std::int64_t j) const { return labels_[label_index(c, j)]; }
  void set_declared_class(ConceptId c, std::int64_t j, int cls) {
    labels_[label_index(c, j)] = static_cast<std::uint8_t>(cls);
  }

  // Firing state helpers ---------------------------------------------------

  std::span<const Word> block(const LayerBits& bits, ConceptId c) const {
    return bits.layer(c.level).subspan(static_cast<std::size_t>(c.index) * block_words(), block_words());
  }
  std::span<Word> block(LayerBits& bits, ConceptId c) const {
    return bits.layer(c.level).subspan(static_cast<std::size_t>(c.index) * block_words(), block_words());
  }
  bool test(const LayerBits& bits, NeuronId v) const { return test_bit(bits.layer(v.layer), layout(v.layer).bit_of(v.index)); }
  void set(LayerBits& bits, NeuronId v, bool on = true) const {
    const auto b = layout(v.layer).bit_of(v.index);
    if (on)
      set_bit(bits.layer(v.layer), b);
    else
      clear_bit(bits.layer(v.layer), b);
  }
  std::int64_t count(const LayerBits& bits, ConceptId c) const {
    return static_cast<std::int64_t>(popcount(block(bits, c)));
  }

  LayerBits empty_bits() const { return LayerBits(layout_); }
  FiringState initial_state() const { return {empty_bits(), 0}; }
  FailureMask no_failures() const { return {empty_bits()}; }
  FailureMask all_failed() const {
    FailureMask f{empty_bits()};
    for (int l = 0; l <= cp_.l_max; ++l)
      for (std::int64_t i = 0; i < layout(l).width; ++i) set(f.failed, {l, i});
    return f;
  }

  // Dynamics ---------------------------------------------------------------

  /// Count of firing in-neighbours across v's weight-1 incidence sets.
  std::int64_t potential(ConceptId c, std::int64_t j, const LayerBits& firing) const {
    if (!wired(c)) return 0;
    std::int64_t pot = 0;
    for (int g = 0; g < cp_.k; ++g)
      pot += static_cast<std::int64_t>(and_count(ff_block(c, j, g), block(firing, h_->child(c, g))));
    if (topology_ == Topology::Lateral) pot += static_cast<std::int64_t>(and_count(lat_block(c, j), block(firing, c)));
    return pot;
  }

  std::int64_t potential(NeuronId v, const FiringState& s) const {
    const auto c = concept_of(v);
    if (!c || v.layer == 0) return 0;
    return potential(*c, v.index % cp_.m, s.firing);
  }

  /// One synchronous step: every surviving non-input neuron fires iff its
  /// potential from the time-t snapshot is >= the active threshold. Layer 0
  /// comes back empty for the presenter to fill.
  FiringState step(const FiringState& s, const FailureMask& mask) const {
    FiringState next{empty_bits(), s.t + 1};
    step_into(s.firing, mask, next.firing);
    return next;
  }

  /// Allocation-free variant of step(): writes layers >= 1 of `out`.
  void step_into(const LayerBits& cur, const FailureMask& mask, LayerBits& out) const {
    const Ratio tau = active_tau();
    const bool floor_fires = tau <= Ratio(0);
    const std::int64_t need = ceil_mul(tau, 1);
    for (int l = 1; l <= cp_.l_max; ++l) {
      auto dst = out.layer(l);
      if (floor_fires) {
        const auto failed = mask.failed.layer(l);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = ~failed[i];
        trim_layer(out, l);
      } else {
        std::fill(dst.begin(), dst.end(), Word{0});
      }
    }
    for (const ConceptId& c : wired_) {
      auto dst = block(out, c);
      const auto failed = block(mask.failed, c);
      for (std::int64_t j = 0; j < cp_.m; ++j) {
        const auto bit = static_cast<std::size_t>(j);
        if (test_bit(failed, bit)) {
          clear_bit(dst, bit);
          continue;
        }
        if (potential(c, j, cur) >= need)
          set_bit(dst, bit);
        else
          clear_bit(dst, bit);
      }
    }
  }

 private:
  std::int64_t slot(ConceptId c) const { return slot_[static_cast<std::size_t>(h_->dense(c))]; }

  std::int64_t checked_slot(ConceptId c) const {
    if (!h_->contains(c) || c.level < 1) throw std::out_of_range("network: concept " + c.str() + " has no incoming edges");
    const std::int64_t s = slot(c);
    if (s < 0) throw std::out_of_range("network: concept " + c.str() + " outside the wired scope");
    return s;
  }
  std::size_t ff_index(ConceptId c, std::int64_t j, int g) const {
    return (static_cast<std::size_t>(checked_slot(c) * cp_.m + j) * static_cast<std::size_t>(cp_.k) +
            static_cast<std::size_t>(g)) *
           block_words();
  }
  std::size_t lat_index(ConceptId c, std::int64_t j) const {
    if (topology_ != Topology::Lateral) throw std::logic_error("network: not lateral kind");
    return static_cast<std::size_t>(checked_slot(c) * cp_.m + j) * block_words();
  }
  std::size_t label_index(ConceptId c, std::int64_t j) const {
    return static_cast<std::size_t>(checked_slot(c) * cp_.m + j);
  }

  /// Clears padding bits so only real neurons are ever set.
  void trim_layer(LayerBits& bits, int l) const {
    const auto& lay = layout(l);
    auto words = bits.layer(l);
    const std::size_t valid = static_cast<std::size_t>(lay.m % static_cast<std::int64_t>(kWordBits));
    if (valid != 0)
      for (std::int64_t c = 0; c < lay.concepts; ++c)
        words[static_cast<std::size_t>(c + 1) * lay.block_words - 1] &= (Word{1} << valid) - 1;
    const std::size_t tail = static_cast<std::size_t>(lay.tail_bits());
    const std::size_t first = lay.rep_words();
    for (std::size_t i = 0; first + i < words.size(); ++i) {
      const std::size_t lo = i * kWordBits;
      if (lo >= tail)
        words[first + i] = 0;
      else if (tail - lo < kWordBits)
        words[first + i] &= (Word{1} << (tail - lo)) - 1;
    }
  }

  std::shared_ptr<const ConceptHierarchy> h_;
  CommonParams cp_;
  ReprKind kind_;
  Topology topology_ = Topology::FeedForward;
  std::optional<ConceptId> scope_;
  std::optional<ConnectivityParams> conn_;
  Ratio tau_{0};
  Ratio learn_tau_{0};
  ThresholdMode mode_ = ThresholdMode::Recognition;
  BuildInfo info_;
  std::vector<LayerLayout> layout_;
  std::vector<std::int64_t> slot_;
  std::vector<ConceptId> wired_;
  std::vector<Word> ff_;
  std::vector<Word> lat_;
  std::vector<std::uint8_t> labels_;
};

/// Explicit 0/1 weight matrix of layer l (rows: layer-l neurons; columns:
/// layer l-1 neurons, then layer-l neurons). Brute-force oracle for tests.
inline std::vector<std::vector<std::uint8_t>> explicit_weights(const LayeredNetwork& net, int l) {
  const std::int64_t w = net.layout(l).width, wprev = net.layout(l - 1).width;
  std::vector<std::vector<std::uint8_t>> out(static_cast<std::size_t>(w),
                                             std::vector<std::uint8_t>(static_cast<std::size_t>(wprev + w), 0));
  const auto& h = net.hierarchy();
  for (std::int64_t ci = 0; ci < h.count_at(l); ++ci) {
    const ConceptId c{l, ci};
    if (!net.wired(c)) continue;
    for (std::int64_t j = 0; j < net.m(); ++j) {
      auto& row = out[static_cast<std::size_t>(ci * net.m() + j)];
      for (int g = 0; g < net.k(); ++g) {
        const ConceptId ch = h.child(c, g);
        const auto blk = net.ff_block(c, j, g);
        for (std::int64_t b = 0; b < net.m(); ++b)
          if (test_bit(blk, static_cast<std::size_t>(b))) row[static_cast<std::size_t>(ch.index * net.m() + b)] = 1;
      }
      if (net.topology() == Topology::Lateral) {
        const auto blk = net.lat_block(c, j);
        for (std::int64_t b = 0; b < net.m(); ++b)
          if (test_bit(blk, static_cast<std::size_t>(b))) row[static_cast<std::size_t>(wprev + ci * net.m() + b)] = 1;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Real-valued weight rules used during learning

/// w' = w + rho * pot * (x - pot * w), pot = w . x.
inline std::vector<double> oja_update(std::span<const double> w, std::span<const std::uint8_t> x, double rho) {
  if (w.size() != x.size()) throw std::invalid_argument("oja_update: length mismatch");
  if (!(rho > 0)) throw std::invalid_argument("oja_update: rho must be > 0");
  double pot = 0;
  for (std::size_t i = 0; i < w.size(); ++i) pot += w[i] * x[i];
  std::vector<double> out(w.begin(), w.end());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] + rho * pot * (x[i] - pot * w[i]);
  return out;
}

class NonConvergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Snaps weights within eta of 0 or 1 to exactly 0 or 1.
inline std::vector<double> clamp_learned_weights(std::span<const double> w, double eta = 0.05) {
  if (!(eta >= 0 && eta < 0.5)) throw std::invalid_argument("clamp_learned_weights: eta must lie in [0, 0.5)");
  std::vector<double> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::fabs(w[i]) <= eta)
      out.push_back(0.0);
    else if (std::fabs(w[i] - 1.0) <= eta)
      out.push_back(1.0);
    else
      throw NonConvergedError("clamp_learned_weights: non-converged weight " + std::to_string(w[i]) + " at index " +
                              std::to_string(i));
  }
  return out;
}

}  // namespace hcrep
