#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hcrep {

/// Exact rational number with a positive, reduced denominator.
///
/// Thresholds such as r*k or a*r2*k*m*p*(1-zeta) are compared against integer
/// counts; doing that comparison in floating point flips ties, so every
/// coefficient that feeds a threshold is kept as a Ratio.
class Ratio {
 public:
  constexpr Ratio() = default;

  Ratio(std::int64_t num, std::int64_t den = 1) { assign(num, den); }
  template <std::floating_point F>
  Ratio(F) = delete;  // use from_double()

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// Best rational approximation by continued fractions; exact for dyadic
  /// values such as 0.75 or 0.03125 and for short decimals such as 0.1.
  static Ratio from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("ratio: non-finite value");
    const bool neg = x < 0;
    double v = std::fabs(x);
    constexpr std::int64_t max_den = 1'000'000'000;
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double frac = v;
    for (int i = 0; i < 64; ++i) {
      const double a_d = std::floor(frac);
      if (a_d > 9e15) break;
      const auto a = static_cast<std::int64_t>(a_d);
      const std::int64_t h2 = a * h1 + h0;
      const std::int64_t k2 = a * k1 + k0;
      if (k2 > max_den) break;
      h0 = h1; h1 = h2; k0 = k1; k1 = k2;
      const double approx = static_cast<double>(h1) / static_cast<double>(k1);
      if (std::fabs(approx - v) <= 1e-13 * std::max(1.0, v)) break;
      const double rem = frac - a_d;
      if (rem <= 0) break;
      frac = 1.0 / rem;
    }
    return Ratio(neg ? -h1 : h1, k1);
  }

  /// Accepts "3/4", "0.75", "1", "-2/3".
  static Ratio parse(std::string_view s) {
    auto trim = [](std::string_view t) {
      while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
      while (!t.empty() && (t.back() == ' ' || t.back() == '\t')) t.remove_suffix(1);
      return t;
    };
    s = trim(s);
    if (s.empty()) throw std::invalid_argument("ratio: empty string");
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
      const Ratio n = parse(s.substr(0, slash));
      const Ratio d = parse(s.substr(slash + 1));
      if (d.num_ == 0) throw std::invalid_argument("ratio: zero denominator in '" + std::string(s) + "'");
      return n / d;
    }
    bool neg = false;
    std::size_t i = 0;
    if (s[0] == '-' || s[0] == '+') {
      neg = s[0] == '-';
      i = 1;
    }
    std::int64_t num = 0, den = 1;
    bool seen_dot = false, any_digit = false;
    for (; i < s.size(); ++i) {
      const char ch = s[i];
      if (ch == '.') {
        if (seen_dot) throw std::invalid_argument("ratio: malformed '" + std::string(s) + "'");
        seen_dot = true;
        continue;
      }
      if (ch < '0' || ch > '9') throw std::invalid_argument("ratio: malformed '" + std::string(s) + "'");
      any_digit = true;
      if (num > (INT64_MAX - 9) / 10 || (seen_dot && den > INT64_MAX / 10))
        throw std::overflow_error("ratio: too many digits in '" + std::string(s) + "'");
      num = num * 10 + (ch - '0');
      if (seen_dot) den *= 10;
    }
    if (!any_digit) throw std::invalid_argument("ratio: malformed '" + std::string(s) + "'");
    return Ratio(neg ? -num : num, den);
  }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Ratio operator+(Ratio a, Ratio b) {
    return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Ratio operator-(Ratio a, Ratio b) {
    return make(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Ratio operator*(Ratio a, Ratio b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Ratio operator/(Ratio a, Ratio b) {
    if (b.num_ == 0) throw std::domain_error("ratio: division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  friend Ratio operator-(Ratio a) { return Ratio(-a.num_, a.den_); }

  friend bool operator==(const Ratio&, const Ratio&) = default;
  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs < rhs ? std::strong_ordering::less
                     : (lhs > rhs ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Ratio make(__int128 num, __int128 den) {
    if (den == 0) throw std::domain_error("ratio: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const __int128 g = gcd128(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    if (num > INT64_MAX || num < -INT64_MAX || den > INT64_MAX)
      throw std::overflow_error("ratio: arithmetic overflow");
    Ratio r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  void assign(std::int64_t num, std::int64_t den) { *this = make(num, den); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Smallest integer >= r * n.
inline std::int64_t ceil_mul(Ratio r, std::int64_t n) {
  const __int128 p = static_cast<__int128>(r.num()) * n;
  const __int128 d = r.den();
  __int128 q = p / d;
  if (p % d != 0 && p > 0) ++q;
  return static_cast<std::int64_t>(q);
}

/// count >= r, exactly.
inline bool at_least(std::int64_t count, Ratio r) {
  return static_cast<__int128>(count) * r.den() >= static_cast<__int128>(r.num());
}

inline Ratio operator""_r(const char* s, std::size_t n) { return Ratio::parse(std::string_view(s, n)); }

}  // namespace hcrep
