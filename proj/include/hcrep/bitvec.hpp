#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hcrep {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }

/// popcount(a & b) over equally sized word spans.
inline std::size_t and_count(std::span<const Word> a, std::span<const Word> b) {
  assert(a.size() == b.size());
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
  return n;
}

inline std::size_t popcount(std::span<const Word> a) {
  std::size_t n = 0;
  for (const Word w : a) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

inline bool test_bit(std::span<const Word> a, std::size_t i) { return (a[i / kWordBits] >> (i % kWordBits)) & 1U; }
inline void set_bit(std::span<Word> a, std::size_t i) { a[i / kWordBits] |= Word{1} << (i % kWordBits); }
inline void clear_bit(std::span<Word> a, std::size_t i) { a[i / kWordBits] &= ~(Word{1} << (i % kWordBits)); }

/// Fixed-size dynamic bitset; unused high bits of the last word stay zero.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t bits) : words_(words_for(bits), 0), size_(bits) {}

  std::size_t size() const { return size_; }

  bool test(std::size_t i) const {
    assert(i < size_);
    return test_bit(words_, i);
  }
  void set(std::size_t i, bool value = true) {
    assert(i < size_);
    if (value)
      set_bit(words_, i);
    else
      clear_bit(words_, i);
  }
  void reset(std::size_t i) { set(i, false); }

  void set_all() {
    for (auto& w : words_) w = ~Word{0};
    trim();
  }
  void clear() {
    for (auto& w : words_) w = 0;
  }

  std::size_t count() const { return popcount(words_); }
  bool any() const {
    for (const Word w : words_)
      if (w != 0) return true;
    return false;
  }
  bool none() const { return !any(); }

  std::span<const Word> words() const { return words_; }
  std::span<Word> words() { return words_; }

  BitVec& operator|=(const BitVec& o) {
    assert(o.size_ == size_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }

  /// True if every set bit of *this is also set in o.
  bool subset_of(const BitVec& o) const {
    assert(o.size_ == size_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if ((words_[i] & ~o.words_[i]) != 0) return false;
    return true;
  }

  template <typename F>
  void for_each_set(F&& f) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      Word w = words_[wi];
      while (w != 0) {
        const int b = std::countr_zero(w);
        f(wi * kWordBits + static_cast<std::size_t>(b));
        w &= w - 1;
      }
    }
  }

  friend bool operator==(const BitVec&, const BitVec&) = default;

 private:
  void trim() {
    if (size_ % kWordBits != 0 && !words_.empty()) words_.back() &= (Word{1} << (size_ % kWordBits)) - 1;
  }

  std::vector<Word> words_;
  std::size_t size_ = 0;
};

}  // namespace hcrep
