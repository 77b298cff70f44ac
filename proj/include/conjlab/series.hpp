#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <conjlab/errors.hpp>
#include <conjlab/numeric.hpp>

namespace conjlab {

// Truncated coefficient sequence c_0..c_N. Entries must be finite; the
// truncation order is always length-1.
class CoefficientSeq {
 public:
  explicit CoefficientSeq(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw NonFiniteCoefficient(0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
      if (!is_finite(coeffs_[i])) throw NonFiniteCoefficient(i);
  }

  static CoefficientSeq zeros(std::size_t trunc_n) {
    return CoefficientSeq(std::vector<double>(trunc_n + 1, 0.0));
  }

  std::size_t trunc_n() const { return coeffs_.size() - 1; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double operator[](std::size_t n) const { return coeffs_[n]; }

 private:
  std::vector<double> coeffs_;
};

// Nonnegative weights t_0..t_N summing to 1 within 1e-12. The mean index
// sum n*t_n is finite automatically under truncation.
class SimplexWeights {
 public:
  static constexpr double kSumTol = 1e-12;

  explicit SimplexWeights(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw InvalidSimplexPoint("no weights");
    KahanSum total;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      double w = weights_[i];
      if (!(w >= 0.0) || !is_finite(w))
        throw InvalidSimplexPoint("weight at index " + std::to_string(i) + " is negative or not finite");
      total.add(w);
    }
    if (std::abs(total.value() - 1.0) > kSumTol)
      throw InvalidSimplexPoint("weights sum to " + std::to_string(total.value()) + ", not 1");
  }

  static SimplexWeights point_mass(std::size_t at, std::size_t trunc_n) {
    std::vector<double> w(trunc_n + 1, 0.0);
    w.at(at) = 1.0;
    return SimplexWeights(std::move(w));
  }

  static bool is_valid(const std::vector<double>& weights) {
    if (weights.empty()) return false;
    KahanSum total;
    for (double w : weights) {
      if (!(w >= 0.0) || !is_finite(w)) return false;
      total.add(w);
    }
    return std::abs(total.value() - 1.0) <= kSumTol;
  }

  std::size_t trunc_n() const { return weights_.size() - 1; }
  const std::vector<double>& weights() const { return weights_; }
  double operator[](std::size_t n) const { return weights_[n]; }

 private:
  std::vector<double> weights_;
};

namespace detail {

// ln sum_{n<=N} exp(c_n + n*lam) for a log-radius lam in [-inf, +inf).
// The n = 0 term is c_0 alone so lam = -inf never multiplies 0.
inline double log_partition_at_log_radius(const CoefficientSeq& c, double lam, std::size_t N) {
  std::vector<double> terms(N + 1);
  for (std::size_t n = 0; n <= N; ++n)
    terms[n] = (n == 0) ? c[0] : c[n] + static_cast<double>(n) * lam;
  return log_sum_exp(terms);
}

}  // namespace detail

// ln sum_{n<=N} e^{c_n} rho^n as an exact partial sum in shifted form.
inline double log_partition(const CoefficientSeq& c, double rho, std::size_t N) {
  if (!(rho > 0.0) || !is_finite(rho)) throw NonPositiveRho(rho);
  if (N > c.trunc_n()) throw TruncationMismatch(N, c.trunc_n());
  return detail::log_partition_at_log_radius(c, std::log(rho), N);
}

// The maximizing weights t_n proportional to e^{c_n} rho^n.
inline SimplexWeights gibbs_maximizer(const CoefficientSeq& c, double rho, std::size_t N) {
  if (!(rho > 0.0) || !is_finite(rho)) throw NonPositiveRho(rho);
  if (N > c.trunc_n()) throw TruncationMismatch(N, c.trunc_n());
  double lam = std::log(rho);
  double shift = kNegInf;
  std::vector<double> terms(N + 1);
  for (std::size_t n = 0; n <= N; ++n) {
    terms[n] = (n == 0) ? c[0] : c[n] + static_cast<double>(n) * lam;
    shift = std::max(shift, terms[n]);
  }
  KahanSum total;
  for (std::size_t n = 0; n <= N; ++n) {
    terms[n] = std::exp(terms[n] - shift);
    total.add(terms[n]);
  }
  double z = total.value();
  for (double& w : terms) w /= z;
  return SimplexWeights(std::move(terms));
}

inline double mean_index(const SimplexWeights& t) {
  KahanSum acc;
  for (std::size_t n = 1; n <= t.trunc_n(); ++n) acc.add(static_cast<double>(n) * t[n]);
  return acc.value();
}

// Smallest N with tail bound e^{sup c} rho^{N+1} / (1-rho) <= eps. Only
// meaningful for rho < 1, where the full series converges.
inline std::size_t suggest_truncation(const CoefficientSeq& c, double rho, double eps) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw RhoOutOfRange(rho);
  double sup = *std::max_element(c.coeffs().begin(), c.coeffs().end());
  double need = (std::log(eps) + std::log1p(-rho) - sup) / std::log(rho);
  if (!(need > 1.0)) return 0;
  return static_cast<std::size_t>(std::ceil(need)) - 1;
}

}  // namespace conjlab
