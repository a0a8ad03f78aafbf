#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcrep/bitvec.hpp"
#include "hcrep/ratio.hpp"

namespace hcrep {

struct HierarchyParams {
  int k = 0;           ///< branching factor and number of top-level concepts
  int l_max = 0;       ///< maximum concept level
  std::int64_t n = 0;  ///< size of the universal level-0 set

  void validate() const;
};

/// Concept identifier: level plus index within that level.
struct ConceptId {
  int level = 0;
  std::int64_t index = 0;

  friend auto operator<=>(const ConceptId&, const ConceptId&) = default;
  std::string str() const { return std::to_string(level) + ":" + std::to_string(index); }
};

inline std::int64_t checked_pow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > INT64_MAX / base) throw std::overflow_error("hierarchy size overflows 64 bits");
    r *= base;
  }
  return r;
}

/// (k^(l+1) - 1) / (k - 1): number of descendants of a level-l concept, itself included.
inline std::int64_t descendant_count(int k, int level) {
  if (k == 1) return level + 1;
  return (checked_pow(k, level + 1) - 1) / (k - 1);
}

inline void HierarchyParams::validate() const {
  if (k < 1) throw std::invalid_argument("hierarchy: k must be >= 1");
  if (l_max < 1) throw std::invalid_argument("hierarchy: l_max must be >= 1");
  const std::int64_t leaves = checked_pow(k, l_max + 1);
  if (n < leaves)
    throw std::invalid_argument("hierarchy: n = " + std::to_string(n) + " is smaller than the " +
                                std::to_string(leaves) + " leaves of the forest (k^(l_max+1))");
}

/// Set of level-0 concepts, indexed over the hierarchy's C_0.
class LeafSet {
 public:
  LeafSet() = default;
  explicit LeafSet(std::int64_t universe) : bits_(static_cast<std::size_t>(universe)) {}

  void insert(std::int64_t leaf) { bits_.set(static_cast<std::size_t>(leaf)); }
  void erase(std::int64_t leaf) { bits_.reset(static_cast<std::size_t>(leaf)); }
  bool contains(std::int64_t leaf) const { return bits_.test(static_cast<std::size_t>(leaf)); }
  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }
  std::int64_t universe() const { return static_cast<std::int64_t>(bits_.size()); }
  const BitVec& bits() const { return bits_; }
  bool subset_of(const LeafSet& o) const { return bits_.subset_of(o.bits_); }

  std::vector<std::int64_t> members() const {
    std::vector<std::int64_t> out;
    bits_.for_each_set([&](std::size_t i) { out.push_back(static_cast<std::int64_t>(i)); });
    return out;
  }

  friend bool operator==(const LeafSet&, const LeafSet&) = default;

 private:
  BitVec bits_;
};

/// supp_r(B) stored as one membership bitset per level.
class SupportSet {
 public:
  explicit SupportSet(std::vector<BitVec> per_level) : levels_(std::move(per_level)) {}

  bool contains(ConceptId c) const { return levels_.at(c.level).test(static_cast<std::size_t>(c.index)); }
  const BitVec& level(int l) const { return levels_.at(l); }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : levels_) n += b.count();
    return n;
  }
  bool subset_of(const SupportSet& o) const {
    for (std::size_t l = 0; l < levels_.size(); ++l)
      if (!levels_[l].subset_of(o.levels_[l])) return false;
    return true;
  }
  std::vector<ConceptId> members() const {
    std::vector<ConceptId> out;
    for (int l = static_cast<int>(levels_.size()) - 1; l >= 0; --l)
      levels_[l].for_each_set([&](std::size_t i) { out.push_back({l, static_cast<std::int64_t>(i)}); });
    return out;
  }

 private:
  std::vector<BitVec> levels_;
};

/// k-ary leveled forest with k roots and height l_max.
///
/// Ids are level-major and breadth-first: concept (l, i) has children
/// (l-1, i*k), ..., (l-1, i*k + k - 1). Dense ids start at the top level.
class ConceptHierarchy {
 public:
  explicit ConceptHierarchy(HierarchyParams params) : params_(params) {
    params_.validate();
    offsets_.assign(static_cast<std::size_t>(params_.l_max) + 1, 0);
    std::int64_t off = 0;
    for (int l = params_.l_max; l >= 0; --l) {
      offsets_[static_cast<std::size_t>(l)] = off;
      off += count_at(l);
    }
    total_ = off;
  }

  const HierarchyParams& params() const { return params_; }
  int k() const { return params_.k; }
  int l_max() const { return params_.l_max; }

  std::int64_t count_at(int level) const { return checked_pow(params_.k, params_.l_max - level + 1); }
  std::int64_t leaf_count() const { return count_at(0); }
  std::int64_t size() const { return total_; }

  bool contains(ConceptId c) const {
    return c.level >= 0 && c.level <= params_.l_max && c.index >= 0 && c.index < count_at(c.level);
  }
  void require(ConceptId c) const {
    if (!contains(c)) throw std::out_of_range("hierarchy: no concept " + c.str());
  }

  std::int64_t dense(ConceptId c) const { return offsets_[static_cast<std::size_t>(c.level)] + c.index; }
  ConceptId from_dense(std::int64_t id) const {
    for (int l = params_.l_max; l >= 0; --l) {
      const std::int64_t off = offsets_[static_cast<std::size_t>(l)];
      if (id >= off && id < off + count_at(l)) return {l, id - off};
    }
    throw std::out_of_range("hierarchy: dense id out of range");
  }

  ConceptId child(ConceptId c, int j) const { return {c.level - 1, c.index * params_.k + j}; }

  std::vector<ConceptId> children(ConceptId c) const {
    require(c);
    std::vector<ConceptId> out;
    if (c.level == 0) return out;
    out.reserve(static_cast<std::size_t>(params_.k));
    for (int j = 0; j < params_.k; ++j) out.push_back(child(c, j));
    return out;
  }

  std::optional<ConceptId> parent(ConceptId c) const {
    require(c);
    if (c.level == params_.l_max) return std::nullopt;
    return ConceptId{c.level + 1, c.index / params_.k};
  }

  /// c and everything below it, level-major from c's level down.
  std::vector<ConceptId> descendants(ConceptId c) const {
    require(c);
    std::vector<ConceptId> out;
    std::int64_t first = c.index, width = 1;
    for (int l = c.level; l >= 0; --l) {
      for (std::int64_t i = 0; i < width; ++i) out.push_back({l, first + i});
      first *= params_.k;
      width *= params_.k;
    }
    return out;
  }

  /// Contiguous index range [first, first + count) of c's leaves.
  std::pair<std::int64_t, std::int64_t> leaf_range(ConceptId c) const {
    require(c);
    const std::int64_t width = checked_pow(params_.k, c.level);
    return {c.index * width, width};
  }

  LeafSet leaves(ConceptId c) const {
    LeafSet out(leaf_count());
    const auto [first, count] = leaf_range(c);
    for (std::int64_t i = 0; i < count; ++i) out.insert(first + i);
    return out;
  }

  /// Is `a` a descendant of `b` (or equal)?
  bool is_descendant(ConceptId a, ConceptId b) const {
    if (a.level > b.level) return false;
    return a.index / checked_pow(params_.k, b.level - a.level) == b.index;
  }

  LeafSet empty_leaf_set() const { return LeafSet(leaf_count()); }

 private:
  HierarchyParams params_;
  std::vector<std::int64_t> offsets_;
  std::int64_t total_ = 0;
};

inline ConceptHierarchy build_hierarchy(const HierarchyParams& params) { return ConceptHierarchy(params); }

/// supp_r(B): bottom-up, B(l) = { c : |children(c) ∩ B(l-1)| >= r*k }.
inline SupportSet support(const ConceptHierarchy& h, const LeafSet& b, Ratio r) {
  if (b.universe() != h.leaf_count()) throw std::invalid_argument("support: leaf set does not match hierarchy");
  const Ratio need = r * Ratio(h.k());
  std::vector<BitVec> levels;
  levels.reserve(static_cast<std::size_t>(h.l_max()) + 1);
  levels.push_back(b.bits());
  for (int l = 1; l <= h.l_max(); ++l) {
    const BitVec& below = levels.back();
    BitVec cur(static_cast<std::size_t>(h.count_at(l)));
    for (std::int64_t i = 0; i < h.count_at(l); ++i) {
      std::int64_t cnt = 0;
      for (int j = 0; j < h.k(); ++j)
        if (below.test(static_cast<std::size_t>(i * h.k() + j))) ++cnt;
      if (at_least(cnt, need)) cur.set(static_cast<std::size_t>(i));
    }
    levels.push_back(std::move(cur));
  }
  return SupportSet(std::move(levels));
}

namespace detail {
inline void keep_first_children(const ConceptHierarchy& h, ConceptId c, std::int64_t keep, LeafSet& out) {
  if (c.level == 0) {
    out.insert(c.index);
    return;
  }
  for (std::int64_t j = 0; j < keep && j < h.k(); ++j) keep_first_children(h, h.child(c, static_cast<int>(j)), keep, out);
}
}  // namespace detail

/// Leaf set that keeps the first ceil(r*k) children of every kept node under c.
/// c is r-supported by it, and dropping any leaf breaks that.
inline LeafSet minimal_support_set(const ConceptHierarchy& h, ConceptId c, Ratio r) {
  h.require(c);
  if (r <= Ratio(0)) throw std::invalid_argument("minimal_support_set: r must be > 0");
  if (r > Ratio(1)) throw std::invalid_argument("minimal_support_set: r must be <= 1");
  LeafSet out = h.empty_leaf_set();
  detail::keep_first_children(h, c, ceil_mul(r, h.k()), out);
  return out;
}

/// Leaf set under c keeping ceil(r1*k) - 1 children per node, so c is not r1-supported.
inline LeafSet sub_support_set(const ConceptHierarchy& h, ConceptId c, Ratio r1) {
  h.require(c);
  if (r1 <= Ratio(0)) throw std::invalid_argument("sub_support_set: r1 must be > 0");
  LeafSet out = h.empty_leaf_set();
  const std::int64_t keep = ceil_mul(r1, h.k()) - 1;
  if (c.level == 0) return out;
  detail::keep_first_children(h, c, keep, out);
  return out;
}

/// Harder non-firing input: ceil(r1*k) - 1 children of c presented in full, the
/// rest absent. Every kept child is fully supported, yet c itself is not.
inline LeafSet saturated_sub_support_set(const ConceptHierarchy& h, ConceptId c, Ratio r1) {
  h.require(c);
  if (r1 <= Ratio(0)) throw std::invalid_argument("saturated_sub_support_set: r1 must be > 0");
  LeafSet out = h.empty_leaf_set();
  if (c.level == 0) return out;
  const std::int64_t keep = ceil_mul(r1, h.k()) - 1;
  for (std::int64_t j = 0; j < keep && j < h.k(); ++j) {
    const auto [first, count] = h.leaf_range(h.child(c, static_cast<int>(j)));
    for (std::int64_t i = 0; i < count; ++i) out.insert(first + i);
  }
  return out;
}

}  // namespace hcrep
