#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <conjlab/errors.hpp>
#include <conjlab/numeric.hpp>
#include <conjlab/series.hpp>

namespace conjlab {

// Raw partial-sum data at increasing cutoffs. Limit behavior is exposed as
// checkpoints, never collapsed to a single scalar.
struct PartialSumTrace {
  struct Checkpoint {
    std::int64_t n;
    double value;
  };
  std::vector<Checkpoint> checkpoints;
};

inline double neg_entropy(const SimplexWeights& t) {
  KahanSum acc;
  for (double w : t.weights()) acc.add(xlogx(w));
  return acc.value();
}

// sum t_n (ln t_n - ref_n); zero weights contribute nothing.
inline double relative_entropy(const SimplexWeights& t, const CoefficientSeq& ref_log_weights) {
  if (t.weights().size() != ref_log_weights.coeffs().size())
    throw LengthMismatch(t.weights().size(), ref_log_weights.coeffs().size());
  KahanSum acc;
  for (std::size_t n = 0; n < t.weights().size(); ++n) {
    double w = t[n];
    if (w > 0.0) acc.add(w * (std::log(w) - ref_log_weights[n]));
  }
  return acc.value();
}

// sum t_n ln t_n - ln(rho) * sum n t_n on valid weights.
inline double g_r(const SimplexWeights& t, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw RhoOutOfRange(rho);
  return neg_entropy(t) - std::log(rho) * mean_index(t);
}

// Non-validating entry point: weight vectors outside the simplex take the
// +inf branch instead of throwing.
inline double g_r(const std::vector<double>& raw, double rho) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw RhoOutOfRange(rho);
  if (!SimplexWeights::is_valid(raw)) return kPosInf;
  return g_r(SimplexWeights(raw), rho);
}

struct TiltedSolution {
  SimplexWeights weights;
  double tilt;   // +-inf at the boundary point masses
  double value;  // sum t_n ln(t_n / a_n) at the solution
};

namespace detail {

inline std::vector<double> tilted_weights(const CoefficientSeq& a_log, double beta, std::size_t N) {
  double shift = kNegInf;
  std::vector<double> w(N + 1);
  for (std::size_t n = 0; n <= N; ++n) {
    w[n] = a_log[n] + beta * static_cast<double>(n);
    shift = std::max(shift, w[n]);
  }
  KahanSum total;
  for (double& v : w) {
    v = std::exp(v - shift);
    total.add(v);
  }
  double z = total.value();
  for (double& v : w) v /= z;
  return w;
}

inline double tilted_mean(const CoefficientSeq& a_log, double beta, std::size_t N) {
  std::vector<double> w = tilted_weights(a_log, beta, N);
  KahanSum acc;
  for (std::size_t n = 1; n <= N; ++n) acc.add(static_cast<double>(n) * w[n]);
  return acc.value();
}

}  // namespace detail

// Minimizes sum t_n ln(t_n/a_n) subject to sum t_n = 1, sum n t_n = target.
// Interior solutions are exponential tilts of a; the tilt is found by
// bisection on the strictly increasing mean.
inline TiltedSolution tilted_min_entropy(const CoefficientSeq& a_log, double target_mean,
                                         std::size_t N) {
  if (N > a_log.trunc_n()) throw TruncationMismatch(N, a_log.trunc_n());
  if (!(target_mean >= 0.0) || !(target_mean <= static_cast<double>(N)))
    throw TargetMeanOutOfRange(target_mean, N);

  if (target_mean == 0.0 || N == 0) {
    SimplexWeights t = SimplexWeights::point_mass(0, N);
    return TiltedSolution{t, kNegInf, -a_log[0]};
  }
  if (target_mean == static_cast<double>(N)) {
    SimplexWeights t = SimplexWeights::point_mass(N, N);
    return TiltedSolution{t, kPosInf, -a_log[N]};
  }

  constexpr double kMeanTol = 1e-10;
  constexpr double kBracketTol = 1e-13;
  double lo = -1.0, hi = 1.0;
  while (detail::tilted_mean(a_log, lo, N) > target_mean && lo > -1e4) lo *= 2.0;
  while (detail::tilted_mean(a_log, hi, N) < target_mean && hi < 1e4) hi *= 2.0;
  double beta = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    beta = 0.5 * (lo + hi);
    double mean = detail::tilted_mean(a_log, beta, N);
    if (std::abs(mean - target_mean) <= kMeanTol || (hi - lo) <= kBracketTol) break;
    if (mean < target_mean) {
      lo = beta;
    } else {
      hi = beta;
    }
  }

  SimplexWeights t(detail::tilted_weights(a_log, beta, N));
  return TiltedSolution{t, beta, relative_entropy(t, a_log)};
}

enum class SeriesGenerator { inverse_square, inverse_n_log_sq };

namespace detail {

// Normalizer sum_{n>=2} 1/(n ln^2 n): ascending compensated partial sum to
// 1e6 plus the midpoint-rule tail 1/ln(N+1/2); remaining error is far below
// double rounding of the sum itself.
inline double inverse_n_log_sq_normalizer() {
  static const double a = [] {
    constexpr std::int64_t kTerms = 1000000;
    KahanSum acc;
    for (std::int64_t n = 2; n <= kTerms; ++n) {
      double ln = std::log(static_cast<double>(n));
      acc.add(1.0 / (static_cast<double>(n) * ln * ln));
    }
    return acc.value() + 1.0 / std::log(static_cast<double>(kTerms) + 0.5);
  }();
  return a;
}

inline double entropy_term(SeriesGenerator gen, std::int64_t n) {
  double x = static_cast<double>(n);
  if (gen == SeriesGenerator::inverse_square) {
    constexpr double kPi = 3.14159265358979323846;
    double t = 6.0 / (kPi * kPi * x * x);
    return t * std::log(t);
  }
  double ln = std::log(x);
  double t = 1.0 / (x * ln * ln * inverse_n_log_sq_normalizer());
  return t * std::log(t);
}

inline std::int64_t first_index(SeriesGenerator gen) {
  return gen == SeriesGenerator::inverse_square ? 1 : 2;
}

}  // namespace detail

// Partial sums of sum t_n ln t_n at the scheduled cutoffs, ascending order
// with compensated accumulation. Chunks are summed independently and merged
// in index order, so the result does not depend on the thread count.
inline PartialSumTrace divergence_diagnostic(SeriesGenerator gen,
                                             const std::vector<std::int64_t>& schedule,
                                             int threads = 1) {
  if (schedule.empty()) throw EmptySchedule();
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1]) throw ScheduleNotIncreasing(i);
  std::int64_t start = detail::first_index(gen);

  PartialSumTrace trace;
  KahanSum acc;
  std::int64_t next = start;
  for (std::int64_t cutoff : schedule) {
    std::int64_t count = cutoff - next + 1;
    if (count > 0) {
      constexpr std::int64_t kChunk = 1 << 16;
      std::size_t chunks = static_cast<std::size_t>((count + kChunk - 1) / kChunk);
      std::vector<KahanSum> partial(chunks);
      parallel_for(chunks, threads, [&](std::size_t cb, std::size_t ce) {
        for (std::size_t ci = cb; ci < ce; ++ci) {
          std::int64_t lo = next + static_cast<std::int64_t>(ci) * kChunk;
          std::int64_t hi = std::min(cutoff, lo + kChunk - 1);
          for (std::int64_t n = lo; n <= hi; ++n) partial[ci].add(detail::entropy_term(gen, n));
        }
      });
      for (const KahanSum& p : partial) acc.merge(p);
      next = cutoff + 1;
    }
    trace.checkpoints.push_back({cutoff, acc.value()});
  }
  return trace;
}

}  // namespace conjlab
