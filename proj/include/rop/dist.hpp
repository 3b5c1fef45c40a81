#pragma once

// Exact distribution functions used by the meta-analysis null models:
// regularized incomplete beta/gamma, standard normal, and binomial tails.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rop/error.hpp"

namespace rop {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_contfrac(double a, double b, double x) {
  constexpr int max_iter = 400;
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= eps) return h;
  }
  throw compute_error("incomplete beta did not converge (a=" + std::to_string(a) +
                      ", b=" + std::to_string(b) + ", x=" + std::to_string(x) + ")");
}

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 1; n <= 1000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw compute_error("incomplete gamma series did not converge (a=" +
                      std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

inline double gamma_q_contfrac(double a, double x) {
  constexpr double fpmin = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw compute_error("incomplete gamma continued fraction did not converge (a=" +
                      std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b); the CDF of Beta(a, b) at x.
/// Uses the continued fraction with the symmetry switch at x = (a+1)/(a+b+2).
inline double beta_cdf(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("beta_cdf: shape parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("beta_cdf: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_contfrac(a, b, x) / a;
  return 1.0 - front * detail::beta_contfrac(b, a, 1.0 - x) / b;
}

/// Inverse of beta_cdf in x. Bracketed bisection: simple and monotone-safe;
/// the result satisfies |beta_cdf(x, a, b) - p| <= 1e-10 over (0, 1).
inline double beta_quantile(double p, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("beta_quantile: shape parameters must be positive");
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("beta_quantile: p must lie strictly in (0, 1)");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_cdf(mid, a, b) < p)
      lo = mid;
    else
      hi = mid;
  }
  const double x = 0.5 * (lo + hi);
  if (std::fabs(beta_cdf(x, a, b) - p) > 1e-10)
    throw compute_error("beta_quantile: did not converge (p=" + std::to_string(p) +
                        ", a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
  return x;
}

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("gamma_p: shape must be positive");
  if (x < 0.0) throw std::domain_error("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("gamma_q: shape must be positive");
  if (x < 0.0) throw std::domain_error("gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_contfrac(a, x);
}

inline double chisq_cdf(double x, double df) {
  if (!(df > 0.0)) throw std::domain_error("chisq_cdf: df must be positive");
  if (x < 0.0) throw std::domain_error("chisq_cdf: x must be nonnegative");
  return gamma_p(0.5 * df, 0.5 * x);
}

/// Chi-square survival function P(X > x).
inline double chisq_sf(double x, double df) {
  if (!(df > 0.0)) throw std::domain_error("chisq_sf: df must be positive");
  if (x < 0.0) throw std::domain_error("chisq_sf: x must be nonnegative");
  return gamma_q(0.5 * df, 0.5 * x);
}

inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

inline double std_normal_sf(double z) {
  return 0.5 * std::erfc(z * 0.7071067811865475244);
}

/// Standard normal quantile, Wichura's AS 241 (PPND16). Absolute error is
/// well below 1e-12 over the full open interval.
inline double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("std_normal_quantile: p must lie strictly in (0, 1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

inline double log_choose(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double binom_pmf(int n, double p, int k) {
  if (n < 0) throw std::domain_error("binom_pmf: n must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binom_pmf: p must lie in [0, 1]");
  if (k < 0 || k > n) return 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(log_choose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

/// Upper binomial tail P(X >= k) for X ~ BIN(n, p), via the beta identity
/// P(X >= k) = I_p(k, n - k + 1).
inline double binom_tail_geq(int n, double p, int k) {
  if (n < 0) throw std::domain_error("binom_tail_geq: n must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("binom_tail_geq: p must lie in [0, 1]");
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  return beta_cdf(p, static_cast<double>(k), static_cast<double>(n - k + 1));
}

enum class DistFamily { beta, chi_square, std_normal, binomial };

/// Tagged CDF query over the null families the meta-analysis uses.
/// params: {a, b} for beta, {df} for chi-square, {} for the standard
/// normal, {n, p} for the binomial (point counts successes <= point).
struct DistributionQuery {
  DistFamily family = DistFamily::std_normal;
  std::vector<double> params;
  double point = 0.0;
};

inline double cdf(const DistributionQuery& q) {
  switch (q.family) {
    case DistFamily::beta:
      if (q.params.size() != 2)
        throw validation_error("beta query needs two shape parameters");
      return beta_cdf(q.point, q.params[0], q.params[1]);
    case DistFamily::chi_square:
      if (q.params.size() != 1)
        throw validation_error("chi-square query needs a df parameter");
      return chisq_cdf(q.point, q.params[0]);
    case DistFamily::std_normal:
      if (!q.params.empty())
        throw validation_error("standard normal query takes no parameters");
      return std_normal_cdf(q.point);
    case DistFamily::binomial: {
      if (q.params.size() != 2)
        throw validation_error("binomial query needs {n, p}");
      const int n = static_cast<int>(q.params[0]);
      if (n < 0 || q.params[0] != n)
        throw std::domain_error("binomial n must be a nonnegative integer");
      if (q.point < 0.0) return 0.0;
      const int at_most = std::min(n, static_cast<int>(std::floor(q.point)));
      return 1.0 - binom_tail_geq(n, q.params[1], at_most + 1);
    }
  }
  throw validation_error("unknown distribution family");
}

}  // namespace rop
