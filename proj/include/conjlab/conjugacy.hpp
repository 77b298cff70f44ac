#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <conjlab/dynsys.hpp>
#include <conjlab/entropy.hpp>
#include <conjlab/errors.hpp>
#include <conjlab/grid.hpp>
#include <conjlab/numeric.hpp>
#include <conjlab/series.hpp>

namespace conjlab {

// Shared membership tolerances for the composite domains.
inline constexpr double kMeanMatchTol = 1e-10;
inline constexpr double kHullTol = 1e-8;

// ln sum_{n<=N} e^{c_n + n*lam} on negative log-radii, +inf from 0 upward.
inline double tilde_lambda(const CoefficientSeq& c, double lam, std::size_t N) {
  if (N > c.trunc_n()) throw TruncationMismatch(N, c.trunc_n());
  if (!(lam < 0.0)) return kPosInf;
  return detail::log_partition_at_log_radius(c, lam, N);
}

// Entropy pinned to the mean: finite only when a agrees with the mean index.
inline double f_t_value(const SimplexWeights& t, double a) {
  if (!(std::abs(a - mean_index(t)) <= kMeanMatchTol)) return kPosInf;
  return neg_entropy(t);
}

struct TildePoint {
  SimplexWeights t;
  double a;
};

inline bool in_tilde_domain(const TildePoint& pt) {
  return std::abs(pt.a - mean_index(pt.t)) <= kMeanMatchTol;
}

inline double tilde_tau(const TildePoint& pt) { return f_t_value(pt.t, pt.a); }

inline double hat_lambda(const CoefficientSeq& c, const FiniteDynSystem& sys,
                         const WeightFunction& phi, std::size_t N) {
  // The exponent comes from the eigensolver, so negativity must clear its
  // certification margin; an uncertifiable exponent yields the sentinel.
  double lam = spectral_exponent(sys, phi);
  if (!(lam < -kSpectralCertTol)) return kPosInf;
  return tilde_lambda(c, lam, N);
}

struct HatDualPoint {
  SimplexWeights t;
  FiniteMeasure mu_bar;
};

using LambdaStarOracle = std::function<double(const FiniteMeasure&)>;

// Exact conjugate for measure-preserving finite systems: zero on the
// invariant probability hull, +inf off it.
inline LambdaStarOracle indicator_lambda_star(const FiniteDynSystem& sys) {
  return [sys](const FiniteMeasure& nu) {
    return hull_distance(sys, nu) <= kHullTol ? 0.0 : kPosInf;
  };
}

inline LambdaStarOracle numeric_lambda_star(const FiniteDynSystem& sys, GridAxis box,
                                            int threads = 1) {
  return [sys, box, threads](const FiniteMeasure& nu) {
    LambdaConjugateEstimate est = lambda_conjugate_numeric(sys, nu, box, threads);
    return est.saturated ? kPosInf : est.value;
  };
}

// Grid estimate where the sweep is affordable, hull indicator beyond.
inline LambdaStarOracle default_lambda_star(const FiniteDynSystem& sys) {
  if (sys.states() <= 3) return numeric_lambda_star(sys, GridAxis{-4.0, 4.0, 41});
  return indicator_lambda_star(sys);
}

inline bool in_hat_domain(const HatDualPoint& pt, const FiniteDynSystem& sys) {
  double a = mean_index(pt.t);
  if (a == 0.0) return false;  // the point mass at index 0 is excluded
  if (std::abs(pt.mu_bar.total() - a) > kMeanMatchTol) return false;
  std::vector<double> nu(pt.mu_bar.mass());
  for (double& v : nu) v /= a;
  return hull_distance(sys, FiniteMeasure(std::move(nu))) <= kHullTol;
}

// a*lambda_star(mu_bar/a) + sum t ln t with a = mean index of t. The pair
// (point mass at 0, zero measure) takes value 0; everything else outside the
// domain takes +inf.
inline double hat_tau(const HatDualPoint& pt, const FiniteDynSystem& sys,
                      const LambdaStarOracle& lambda_star) {
  if (pt.mu_bar.size() != sys.states()) throw DimensionMismatch(pt.mu_bar.size(), sys.states());
  double a = mean_index(pt.t);
  double mass = pt.mu_bar.total();
  if (a == 0.0) return mass == 0.0 ? 0.0 : kPosInf;
  if (std::abs(mass - a) > kMeanMatchTol) return kPosInf;
  std::vector<double> nu(pt.mu_bar.mass());
  for (double& v : nu) v /= a;
  double star = lambda_star(FiniteMeasure(std::move(nu)));
  if (std::isnan(star)) throw OracleFailure("lambda-star oracle returned NaN");
  if (!is_finite(star)) return kPosInf;
  return a * star + neg_entropy(pt.t);
}

inline double hat_tau(const HatDualPoint& pt, const FiniteDynSystem& sys) {
  return hat_tau(pt, sys, default_lambda_star(sys));
}

struct VerifyOptions {
  std::size_t gap_probes = 100;
  std::size_t bruteforce_probes = 20;
  GridAxis coeff_axis{-4.0, 4.0, 81};  // joint-conjugate grid, one per coefficient
  GridAxis phi_axis{-3.0, -0.05, 60};  // kept negative so the exponent stays admissible
  std::size_t bruteforce_max_dim = 4;
  LambdaStarOracle lambda_star;  // empty: pick default_lambda_star(sys)
};

struct ProbeRecord {
  double gap;
  double mean;  // mean index of the sampled weights
};

struct ConjugacyReport {
  double lambda_hat;
  double fenchel_young_min_gap;
  double attainment_residual;
  std::optional<double> bruteforce_max_discrepancy;
  std::vector<ProbeRecord> probes;
};

namespace detail {

inline SimplexWeights sample_simplex(Rng& rng, std::size_t trunc_n) {
  std::vector<double> w(trunc_n + 1);
  KahanSum total;
  for (double& v : w) {
    v = rng.exponential();
    total.add(v);
  }
  double z = total.value();
  for (double& v : w) v /= z;
  return SimplexWeights(std::move(w));
}

inline FiniteMeasure sample_hull_measure(Rng& rng, const std::vector<FiniteMeasure>& hull,
                                         double scale) {
  std::vector<double> theta(hull.size());
  KahanSum total;
  for (double& v : theta) {
    v = rng.exponential();
    total.add(v);
  }
  double z = total.value();
  std::size_t m = hull.front().size();
  std::vector<double> mass(m, 0.0);
  for (std::size_t j = 0; j < hull.size(); ++j)
    for (std::size_t x = 0; x < m; ++x) mass[x] += scale * (theta[j] / z) * hull[j][x];
  return FiniteMeasure(std::move(mass));
}

}  // namespace detail

// End-to-end duality check: Fenchel-Young gaps over sampled admissible dual
// points, exact attainment at the analytic maximizer, and (in low dimension)
// a brute-force joint conjugate over a (coefficients, weights) grid.
inline ConjugacyReport verify_hat_conjugacy(const CoefficientSeq& c, const FiniteDynSystem& sys,
                                            const WeightFunction& phi, std::size_t N,
                                            const VerifyOptions& options, std::uint64_t seed) {
  double lam = spectral_exponent(sys, phi);
  if (!(lam < -kSpectralCertTol))
    throw DomainViolation("spectral exponent is " + std::to_string(lam) +
                          ", need a certified negative value");
  double lambda_hat = tilde_lambda(c, lam, N);
  std::vector<FiniteMeasure> hull = invariant_measure_hull(sys);
  LambdaStarOracle oracle = options.lambda_star ? options.lambda_star : default_lambda_star(sys);

  Rng rng(seed);
  ConjugacyReport report;
  report.lambda_hat = lambda_hat;
  report.fenchel_young_min_gap = kPosInf;

  for (std::size_t i = 0; i < options.gap_probes; ++i) {
    SimplexWeights t = detail::sample_simplex(rng, N);
    double a = mean_index(t);
    FiniteMeasure mu_bar = detail::sample_hull_measure(rng, hull, a);
    HatDualPoint pt{t, mu_bar};
    double tau = hat_tau(pt, sys, oracle);
    double bracket = compensated_dot(c.coeffs(), t.weights()) +
                     compensated_dot(mu_bar.mass(), phi.phi());
    double gap = lambda_hat + tau - bracket;
    report.probes.push_back({gap, a});
    report.fenchel_young_min_gap = std::min(report.fenchel_young_min_gap, gap);
  }

  // Attainment: the tilted weights at radius e^lambda, paired with the hull
  // vertex whose average weight attains the exponent.
  SimplexWeights t_star = gibbs_maximizer(c, std::exp(lam), N);
  double a_star = mean_index(t_star);
  std::size_t best_vertex = 0;
  double best_avg = kNegInf;
  for (std::size_t j = 0; j < hull.size(); ++j) {
    double avg = compensated_dot(hull[j].mass(), phi.phi());
    if (avg > best_avg) {
      best_avg = avg;
      best_vertex = j;
    }
  }
  std::vector<double> mu_mass(sys.states());
  for (std::size_t x = 0; x < sys.states(); ++x) mu_mass[x] = a_star * hull[best_vertex][x];
  FiniteMeasure mu_star(std::move(mu_mass));
  double tau_star = hat_tau(HatDualPoint{t_star, mu_star}, sys, oracle);
  double bracket_star = compensated_dot(c.coeffs(), t_star.weights()) +
                        compensated_dot(mu_star.mass(), phi.phi());
  report.attainment_residual = std::abs(lambda_hat + tau_star - bracket_star);

  // Brute-force joint conjugate over the (c, phi) grid when the total
  // dimension stays desk-sized.
  std::size_t joint_dim = (N + 1) + sys.states();
  if (joint_dim <= options.bruteforce_max_dim) {
    std::vector<GridAxis> axes(N + 1, options.coeff_axis);
    axes.insert(axes.end(), sys.states(), options.phi_axis);

    std::size_t phi_total = 1;
    for (std::size_t k = 0; k < sys.states(); ++k) phi_total *= options.phi_axis.count;
    std::vector<double> lam_at(phi_total);
    {
      std::vector<double> phi_node(sys.states());
      for (std::size_t pf = 0; pf < phi_total; ++pf) {
        std::size_t rem = pf;
        for (std::size_t k = sys.states(); k-- > 0;) {
          phi_node[k] = options.phi_axis.node(rem % options.phi_axis.count);
          rem /= options.phi_axis.count;
        }
        lam_at[pf] = spectral_exponent(sys, WeightFunction(phi_node));
      }
    }
    std::size_t coeff_total = 1;
    for (std::size_t k = 0; k <= N; ++k) coeff_total *= options.coeff_axis.count;
    std::vector<double> values(coeff_total * phi_total);
    std::vector<double> c_node(N + 1);
    for (std::size_t cf = 0; cf < coeff_total; ++cf) {
      std::size_t rem = cf;
      for (std::size_t k = N + 1; k-- > 0;) {
        c_node[k] = options.coeff_axis.node(rem % options.coeff_axis.count);
        rem /= options.coeff_axis.count;
      }
      CoefficientSeq c_grid(c_node);
      for (std::size_t pf = 0; pf < phi_total; ++pf)
        values[cf * phi_total + pf] = tilde_lambda(c_grid, lam_at[pf], N);
    }
    GriddedFunction lambda_grid(axes, std::move(values));

    double worst = 0.0;
    std::vector<double> s(joint_dim);
    for (std::size_t i = 0; i < options.bruteforce_probes; ++i) {
      SimplexWeights t = detail::sample_simplex(rng, N);
      double a = mean_index(t);
      FiniteMeasure mu_bar = detail::sample_hull_measure(rng, hull, a);
      double tau = hat_tau(HatDualPoint{t, mu_bar}, sys, oracle);
      for (std::size_t k = 0; k <= N; ++k) s[k] = t[k];
      for (std::size_t x = 0; x < sys.states(); ++x) s[N + 1 + x] = mu_bar[x];
      double brute = conjugate_at(lambda_grid, s);
      worst = std::max(worst, std::abs(brute - tau));
    }
    report.bruteforce_max_discrepancy = worst;
  }

  return report;
}

}  // namespace conjlab
