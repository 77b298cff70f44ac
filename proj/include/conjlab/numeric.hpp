#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace conjlab {

// Extended-real sentinel. Arithmetic paths must branch on is_finite() before
// touching a value; the infinity never flows through +,*,exp.
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline bool is_finite(double v) { return std::isfinite(v); }

// x ln x with the 0 ln 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Kahan-Babuska (Neumaier) compensated accumulator. value() folds the carry,
// so two accumulators merge associatively via add(s) + add(c).
struct KahanSum {
  double s = 0.0;
  double c = 0.0;

  void add(double v) {
    double t = s + v;
    if (std::abs(s) >= std::abs(v)) {
      c += (s - t) + v;
    } else {
      c += (v - t) + s;
    }
    s = t;
  }

  void merge(const KahanSum& other) {
    add(other.s);
    add(other.c);
  }

  double value() const { return s + c; }
};

inline double compensated_sum(std::span<const double> xs) {
  KahanSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

inline double compensated_dot(std::span<const double> a, std::span<const double> b) {
  KahanSum acc;
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) acc.add(a[i] * b[i]);
  return acc.value();
}

// Max-shifted ln sum exp(args[i]); exact partial sum, no tail estimate.
// -inf entries are allowed and contribute nothing.
inline double log_sum_exp(std::span<const double> args) {
  double shift = kNegInf;
  for (double a : args) shift = std::max(shift, a);
  if (!is_finite(shift)) return shift;  // empty or all -inf
  KahanSum acc;
  for (double a : args) acc.add(std::exp(a - shift));
  return shift + std::log(acc.value());
}

// Deterministic uniform sampler. Draws are produced from raw mt19937_64 output
// so results do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform in [0,1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::size_t index(std::size_t n) {
    return std::min<std::size_t>(static_cast<std::size_t>(uniform() * static_cast<double>(n)),
                                 n - 1);
  }

  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 eng_;
};

// Formats a real for reports and CSV: 17 significant digits round-trips a
// double bit-exactly; the +inf sentinel is spelled "+inf".
inline std::string format_real(double v) {
  if (v == kPosInf) return "+inf";
  if (v == kNegInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline double parse_real(const std::string& s) {
  if (s == "+inf" || s == "inf") return kPosInf;
  if (s == "-inf") return kNegInf;
  return std::stod(s);
}

// Runs body(begin, end) over a static partition of [0, n). Callers must make
// the result independent of the partition (disjoint writes, or reductions
// combined with an order-insensitive operation).
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads <= 1 || n < 2) {
    body(0, n);
    return;
  }
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace conjlab
