#include <gtest/gtest.h>

#include "hcrep/hierarchy.hpp"

using namespace hcrep;

namespace {

ConceptHierarchy make(int k, int l_max) { return build_hierarchy({k, l_max, checked_pow(k, l_max + 1)}); }

// Counts kept children recursively; independent of support().
bool supported_by_count(const ConceptHierarchy& h, const LeafSet& b, ConceptId c, Ratio r) {
  if (c.level == 0) return b.contains(c.index);
  std::int64_t n = 0;
  for (const auto& ch : h.children(c)) n += supported_by_count(h, b, ch, r) ? 1 : 0;
  return Ratio(n) >= r * Ratio(h.k());
}

}  // namespace

TEST(Hierarchy, DescendantCountOfFourAryTree) {
  const auto h = make(4, 4);
  EXPECT_EQ(h.descendants({4, 0}).size(), 341u);
  EXPECT_EQ(descendant_count(4, 4), 341);
}

TEST(Hierarchy, DegenerateChain) {
  const auto h = make(1, 1);
  EXPECT_EQ(h.count_at(1), 1);
  EXPECT_EQ(h.children({1, 0}).size(), 1u);
  EXPECT_EQ(h.descendants({1, 0}).size(), 2u);
}

TEST(Hierarchy, BinaryTreeWithOneLevel) {
  const auto h = make(2, 1);
  EXPECT_EQ(h.descendants({1, 0}).size(), 3u);
  EXPECT_EQ(h.count_at(1), 2);
  EXPECT_EQ(h.size(), 6);
}

TEST(Hierarchy, StructuralInvariants) {
  const auto h = make(3, 3);
  EXPECT_EQ(h.count_at(h.l_max()), 3);
  std::vector<int> seen(static_cast<std::size_t>(h.leaf_count()), 0);
  for (std::int64_t i = 0; i < h.count_at(1); ++i)
    for (const auto& c : h.children({1, i})) {
      EXPECT_EQ(c.level, 0);
      ++seen[static_cast<std::size_t>(c.index)];
      EXPECT_EQ(h.parent(c)->index, i);
    }
  for (int s : seen) EXPECT_EQ(s, 1);
  for (std::int64_t id = 0; id < h.size(); ++id) EXPECT_EQ(h.dense(h.from_dense(id)), id);
  EXPECT_EQ(h.from_dense(0).level, 3);
}

TEST(Hierarchy, RejectsTooFewLevelZeroConcepts) {
  EXPECT_THROW(build_hierarchy({4, 2, 63}), std::invalid_argument);
  EXPECT_NO_THROW(build_hierarchy({4, 2, 100}));
  EXPECT_THROW(build_hierarchy({0, 2, 10}), std::invalid_argument);
  EXPECT_THROW(build_hierarchy({2, 0, 10}), std::invalid_argument);
}

TEST(Support, FullLeavesSupportsEveryDescendant) {
  const auto h = make(4, 2);
  const auto s = support(h, h.leaves({2, 1}), Ratio(1));
  for (const auto& d : h.descendants({2, 1})) EXPECT_TRUE(s.contains(d));
  EXPECT_FALSE(s.contains({2, 0}));
}

TEST(Support, EmptyInput) {
  const auto h = make(4, 2);
  EXPECT_EQ(support(h, h.empty_leaf_set(), Ratio(1, 4)).size(), 0u);
}

TEST(Support, ThreeOfFourRecursively) {
  const auto h = make(4, 2);
  const LeafSet b = minimal_support_set(h, {2, 0}, Ratio(3, 4));
  EXPECT_TRUE(support(h, b, Ratio(3, 4)).contains({2, 0}));
  EXPECT_FALSE(support(h, b, Ratio(7, 8)).contains({2, 0}));
  EXPECT_EQ(supported_by_count(h, b, {2, 0}, Ratio(3, 4)), true);
}

TEST(Support, ExactTieCounts) {
  // r*k = 2 exactly: two supported children suffice.
  const auto h = make(4, 1);
  LeafSet b = h.empty_leaf_set();
  b.insert(0);
  b.insert(1);
  EXPECT_TRUE(support(h, b, Ratio(1, 2)).contains({1, 0}));
  EXPECT_FALSE(support(h, b, Ratio(1, 2) + Ratio(1, 1000000)).contains({1, 0}));
}

TEST(MinimalSupportSet, SizesAndMinimality) {
  const auto h = make(4, 3);
  EXPECT_EQ(minimal_support_set(h, {3, 0}, Ratio(1)), h.leaves({3, 0}));
  EXPECT_EQ(minimal_support_set(h, {2, 0}, Ratio(3, 4)).size(), 9u);
  const ConceptId c{2, 3};
  const LeafSet b = minimal_support_set(h, c, Ratio(3, 4));
  ASSERT_TRUE(support(h, b, Ratio(3, 4)).contains(c));
  for (const auto leaf : b.members()) {
    LeafSet smaller = b;
    smaller.erase(leaf);
    EXPECT_FALSE(support(h, smaller, Ratio(3, 4)).contains(c)) << "leaf " << leaf;
  }
  EXPECT_THROW(minimal_support_set(h, c, Ratio(0)), std::invalid_argument);
}

TEST(SubSupportSet, Unsupported) {
  const auto h = make(4, 3);
  const LeafSet b = sub_support_set(h, {3, 1}, Ratio(1, 2));
  EXPECT_EQ(b.size(), 1u);
  EXPECT_FALSE(support(h, b, Ratio(1, 2)).contains({3, 1}));
  EXPECT_TRUE(sub_support_set(h, {3, 1}, Ratio(1, 4)).empty());
  const LeafSet s = saturated_sub_support_set(h, {3, 1}, Ratio(3, 4));
  EXPECT_EQ(s.size(), 32u);
  EXPECT_FALSE(support(h, s, Ratio(3, 4)).contains({3, 1}));
  EXPECT_TRUE(support(h, s, Ratio(3, 4)).contains({2, 4}));
}

TEST(Support, AgreesWithRecursiveCount) {
  const auto h = make(3, 3);
  std::uint64_t x = 12345;
  for (int trial = 0; trial < 50; ++trial) {
    LeafSet b = h.empty_leaf_set();
    for (std::int64_t i = 0; i < h.leaf_count(); ++i) {
      x = x * 6364136223846793005ULL + 1442695040888963407ULL;
      if ((x >> 33) % 3 != 0) b.insert(i);
    }
    for (const Ratio r : {Ratio(1, 3), Ratio(2, 3), Ratio(1)}) {
      const auto s = support(h, b, r);
      for (std::int64_t id = 0; id < h.size(); ++id) {
        const auto c = h.from_dense(id);
        EXPECT_EQ(s.contains(c), supported_by_count(h, b, c, r));
      }
    }
  }
}
