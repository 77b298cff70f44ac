#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <conjlab/errors.hpp>
#include <conjlab/grid.hpp>
#include <conjlab/numeric.hpp>
#include <conjlab/series.hpp>

namespace conjlab {

// Finite state space {0..m-1} with a total self-map and an L^p exponent.
// The exponent is carried for reporting; the spectral radius of a finite
// matrix does not depend on the norm, so p never enters the computations.
class FiniteDynSystem {
 public:
  FiniteDynSystem(std::size_t m, std::vector<std::size_t> alpha, double p)
      : m_(m), alpha_(std::move(alpha)), p_(p) {
    if (m_ == 0) throw ConfigInvalid("system needs at least one state");
    if (alpha_.size() != m_)
      throw ConfigInvalid("map has " + std::to_string(alpha_.size()) + " entries for " +
                          std::to_string(m_) + " states");
    for (std::size_t x = 0; x < m_; ++x)
      if (alpha_[x] >= m_)
        throw ConfigInvalid("map entry at index " + std::to_string(x) + " equals " +
                            std::to_string(alpha_[x]) + ", outside [0, " + std::to_string(m_) + ")");
    if (!(p_ >= 1.0) || !is_finite(p_))
      throw ConfigInvalid("exponent p must be a finite real >= 1");
  }

  std::size_t states() const { return m_; }
  std::size_t image(std::size_t x) const { return alpha_[x]; }
  const std::vector<std::size_t>& map() const { return alpha_; }
  double p() const { return p_; }

  bool is_bijective() const {
    std::vector<unsigned> hits(m_, 0);
    for (std::size_t x = 0; x < m_; ++x) ++hits[alpha_[x]];
    return std::all_of(hits.begin(), hits.end(), [](unsigned h) { return h == 1; });
  }

 private:
  std::size_t m_;
  std::vector<std::size_t> alpha_;
  double p_;
};

class FiniteMeasure {
 public:
  explicit FiniteMeasure(std::vector<double> mass) : mass_(std::move(mass)) {
    for (std::size_t i = 0; i < mass_.size(); ++i)
      if (!(mass_[i] >= 0.0) || !is_finite(mass_[i]))
        throw NegativeEntry("mass at index " + std::to_string(i) + " is negative or not finite");
  }

  static FiniteMeasure zero(std::size_t m) { return FiniteMeasure(std::vector<double>(m, 0.0)); }

  std::size_t size() const { return mass_.size(); }
  const std::vector<double>& mass() const { return mass_; }
  double operator[](std::size_t i) const { return mass_[i]; }

  double total() const { return compensated_sum(mass_); }

 private:
  std::vector<double> mass_;
};

class WeightFunction {
 public:
  explicit WeightFunction(std::vector<double> phi) : phi_(std::move(phi)) {
    for (std::size_t i = 0; i < phi_.size(); ++i)
      if (!is_finite(phi_[i])) throw NonFiniteCoefficient(i);
  }

  std::size_t size() const { return phi_.size(); }
  const std::vector<double>& phi() const { return phi_; }
  double operator[](std::size_t i) const { return phi_[i]; }

 private:
  std::vector<double> phi_;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimensionMismatch(a.cols, b.rows);
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

// One row per state: A[x, alpha(x)] = e^{phi(x)}.
inline Matrix transfer_matrix(const FiniteDynSystem& sys, const WeightFunction& phi) {
  if (phi.size() != sys.states()) throw DimensionMismatch(phi.size(), sys.states());
  Matrix a(sys.states(), sys.states());
  for (std::size_t x = 0; x < sys.states(); ++x) a.at(x, sys.image(x)) = std::exp(phi[x]);
  return a;
}

namespace detail {

inline double max_entry(const Matrix& a) {
  double best = 0.0;
  for (double v : a.data) best = std::max(best, v);
  return best;
}

inline double inf_norm(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    KahanSum row;
    for (std::size_t j = 0; j < a.cols; ++j) row.add(std::abs(a.at(i, j)));
    best = std::max(best, row.value());
  }
  return best;
}

// ln rho via norm-normalized repeated squaring:
// ln rho = sum_k ln(n_k)/2^{k-1} + ln||A_K||/2^K. Sixty doublings drive the
// 2^-K factor far below double precision.
inline double gelfand_log_radius(Matrix m, int doublings = 60) {
  double factor = 1.0;
  KahanSum acc;
  for (int k = 0; k < doublings; ++k) {
    double n = inf_norm(m);
    if (n == 0.0) return kNegInf;
    acc.add(factor * std::log(n));
    double inv = 1.0 / n;
    for (double& v : m.data) v *= inv;
    m = multiply(m, m);
    factor *= 0.5;
  }
  double n = inf_norm(m);
  if (n == 0.0) return kNegInf;
  acc.add(factor * std::log(n));
  return acc.value();
}

struct PowerIterationResult {
  double value = 0.0;
  bool converged = false;
};

// Power iteration on A + eps*I; the shift separates the Perron root from the
// rest of the peripheral spectrum of periodic matrices.
inline PowerIterationResult power_iteration(const Matrix& a, double eps, int max_iter = 10000) {
  std::size_t n = a.rows;
  std::vector<double> v(n, 1.0), w(n, 0.0);
  double lam = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      KahanSum acc;
      for (std::size_t j = 0; j < n; ++j) acc.add(a.at(i, j) * v[j]);
      acc.add(eps * v[i]);
      w[i] = acc.value();
    }
    double next = *std::max_element(w.begin(), w.end());
    if (next <= 0.0) return {0.0 - eps, true};
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / next;
    if (iter > 0 && std::abs(next - lam) <= 1e-13 * std::max(1.0, next))
      return {next - eps, true};
    lam = next;
  }
  return {lam - eps, false};
}

}  // namespace detail

// Spectral radius of a nonnegative matrix to 1e-10 relative accuracy: power
// iteration with a diagonal shift, cross-checked against the norm-doubling
// estimate; on disagreement or non-convergence the doubling estimate wins.
inline double spectral_radius(const Matrix& a) {
  if (a.rows != a.cols) throw NonSquare(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      if (!(a.at(i, j) >= 0.0) || !is_finite(a.at(i, j)))
        throw NegativeEntry("entry (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is negative or not finite");
  double scale = detail::max_entry(a);
  if (scale == 0.0) return 0.0;
  double log_gel = detail::gelfand_log_radius(a);
  double gel = (log_gel == kNegInf) ? 0.0 : std::exp(log_gel);
  detail::PowerIterationResult pi = detail::power_iteration(a, 1e-3 * scale);
  if (pi.converged && gel > 0.0 && std::abs(pi.value - gel) <= 1e-11 * gel) return pi.value;
  return gel;
}

// Margin within which the eigensolver cannot certify a strict inequality:
// the 1e-10 relative radius bound translates to 1e-10 in the exponent near
// the critical radius 1.
inline constexpr double kSpectralCertTol = 1e-10;

// ln r(e^phi T_alpha); -inf when the radius vanishes.
inline double spectral_exponent(const FiniteDynSystem& sys, const WeightFunction& phi) {
  double rho = spectral_radius(transfer_matrix(sys, phi));
  return rho > 0.0 ? std::log(rho) : kNegInf;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> permutation_cycles(const FiniteDynSystem& sys) {
  std::vector<bool> seen(sys.states(), false);
  std::vector<std::vector<std::size_t>> cycles;
  for (std::size_t s = 0; s < sys.states(); ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> cycle;
    std::size_t x = s;
    while (!seen[x]) {
      seen[x] = true;
      cycle.push_back(x);
      x = sys.image(x);
    }
    cycles.push_back(std::move(cycle));
  }
  return cycles;
}

}  // namespace detail

// One uniform probability measure per cycle; the invariant probability
// measures are exactly the convex hull of these.
inline std::vector<FiniteMeasure> invariant_measure_hull(const FiniteDynSystem& sys) {
  if (!sys.is_bijective()) {
    std::vector<unsigned> hits(sys.states(), 0);
    for (std::size_t x = 0; x < sys.states(); ++x) ++hits[sys.image(x)];
    for (std::size_t s = 0; s < sys.states(); ++s)
      if (hits[s] != 1) throw NotBijective(s);
  }
  std::vector<FiniteMeasure> hull;
  for (const auto& cycle : detail::permutation_cycles(sys)) {
    std::vector<double> mass(sys.states(), 0.0);
    double w = 1.0 / static_cast<double>(cycle.size());
    for (std::size_t x : cycle) mass[x] = w;
    hull.emplace_back(std::move(mass));
  }
  return hull;
}

// Deviation of a probability vector from its cycle-averaged projection; zero
// exactly on the invariant hull.
inline double hull_distance(const FiniteDynSystem& sys, const FiniteMeasure& nu) {
  if (nu.size() != sys.states()) throw DimensionMismatch(nu.size(), sys.states());
  double worst = std::abs(nu.total() - 1.0);
  for (const auto& cycle : detail::permutation_cycles(sys)) {
    KahanSum acc;
    for (std::size_t x : cycle) acc.add(nu[x]);
    double avg = acc.value() / static_cast<double>(cycle.size());
    for (std::size_t x : cycle) worst = std::max(worst, std::abs(nu[x] - avg));
  }
  return worst;
}

struct LambdaConjugateEstimate {
  double value;
  double box_radius;
  bool saturated;  // value > box_radius/2: grows with the box, read as +inf
};

// Grid estimate of the conjugate of the spectral exponent at a measure nu:
// max over phi nodes of <nu,phi> - lambda(phi). The same box axis is used in
// every coordinate.
inline LambdaConjugateEstimate lambda_conjugate_numeric(const FiniteDynSystem& sys,
                                                        const FiniteMeasure& nu, GridAxis box_axis,
                                                        int threads = 1) {
  if (nu.size() != sys.states()) throw DimensionMismatch(nu.size(), sys.states());
  std::size_t m = sys.states();
  std::size_t total = 1;
  for (std::size_t k = 0; k < m; ++k) total *= box_axis.count;

  constexpr std::size_t kChunk = 1024;
  std::size_t chunks = (total + kChunk - 1) / kChunk;
  std::vector<double> best(chunks, kNegInf);
  parallel_for(chunks, threads, [&](std::size_t cb, std::size_t ce) {
    std::vector<double> phi(m);
    for (std::size_t ci = cb; ci < ce; ++ci) {
      std::size_t lo = ci * kChunk;
      std::size_t hi = std::min(total, lo + kChunk);
      for (std::size_t flat = lo; flat < hi; ++flat) {
        std::size_t rem = flat;
        for (std::size_t k = m; k-- > 0;) {
          phi[k] = box_axis.node(rem % box_axis.count);
          rem /= box_axis.count;
        }
        double lam = spectral_exponent(sys, WeightFunction(phi));
        if (lam == kNegInf) continue;
        double val = compensated_dot(nu.mass(), phi) - lam;
        best[ci] = std::max(best[ci], val);
      }
    }
  });
  double value = *std::max_element(best.begin(), best.end());
  double radius = std::max(std::abs(box_axis.lo), std::abs(box_axis.hi));
  return LambdaConjugateEstimate{value, radius, value > 0.5 * radius};
}

struct OperatorSeriesRadius {
  double via_matrix;  // r( sum e^{c_n} A^n )
  double via_scalar;  // sum e^{c_n} r(A)^n
};

// Truncated power series of the transfer operator, evaluated two ways. For
// nonnegative matrices and positive series coefficients the two radii agree
// exactly at any truncation order.
inline OperatorSeriesRadius operator_series_radius(const CoefficientSeq& c,
                                                   const FiniteDynSystem& sys,
                                                   const WeightFunction& phi, std::size_t N) {
  if (N > c.trunc_n()) throw TruncationMismatch(N, c.trunc_n());
  Matrix a = transfer_matrix(sys, phi);
  double rho = spectral_radius(a);
  // A radius within the certification margin of 1 cannot be called
  // subcritical.
  if (!(rho < 1.0 - kSpectralCertTol)) throw RadiusNotSubcritical(rho);

  KahanSum scalar;
  double pow_rho = 1.0;
  Matrix series(a.rows, a.cols);
  Matrix power = Matrix::identity(a.rows);
  for (std::size_t n = 0; n <= N; ++n) {
    if (n > 0) {
      power = multiply(power, a);
      pow_rho *= rho;
    }
    double w = std::exp(c[n]);
    scalar.add(w * pow_rho);
    for (std::size_t i = 0; i < series.data.size(); ++i) series.data[i] += w * power.data[i];
  }
  return OperatorSeriesRadius{spectral_radius(series), scalar.value()};
}

}  // namespace conjlab
