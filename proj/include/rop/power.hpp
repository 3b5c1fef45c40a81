#pragma once

// Exact power calculation for rOP: the two-population binomial convolution
// for equal effects, the Poisson-binomial dynamic program for unequal ones,
// asymptotic power curves, and the vote-counting comparison.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rop/dist.hpp"
#include "rop/error.hpp"
#include "rop/rng.hpp"
#include "rop/stat_tests.hpp"

namespace rop {

/// One power-calculation scenario. The rejection threshold beta is always
/// recomputed from (alpha, r, K), never stored.
struct PowerSpec {
  int k = 0;
  int r = 0;
  int r0 = 0;  // number of studies with nonzero effect
  double alpha = 0.05;
  double beta_prime = -1.0;           // per-study P(p <= beta | H_a), equal case
  std::vector<double> success_probs;  // K per-study success probabilities, unequal case

  double rejection_threshold() const {
    return beta_quantile(alpha, static_cast<double>(r),
                         static_cast<double>(k - r + 1));
  }

  void validate() const {
    if (k < 1) throw validation_error("power: K must be at least 1");
    if (r < 1 || r > k) throw validation_error("power: r must lie in [1, K]");
    if (r0 < 0 || r0 > k) throw validation_error("power: r0 must lie in [0, K]");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw validation_error("power: alpha must lie in (0, 1)");
    if (!success_probs.empty()) {
      if (success_probs.size() != static_cast<std::size_t>(k))
        throw validation_error("power: success_probs must have K entries");
      for (double p : success_probs)
        if (!(p >= 0.0 && p <= 1.0))
          throw validation_error("power: success probabilities must lie in [0, 1]");
    } else if (!(beta_prime >= 0.0 && beta_prime <= 1.0)) {
      throw validation_error("power: beta_prime must lie in [0, 1]");
    }
  }
};

/// P(at least r successes in K trials): r0 trials succeed with probability
/// beta_prime, the remaining K - r0 with the null rate beta.
inline double rop_power_equal(const PowerSpec& spec) {
  spec.validate();
  if (spec.success_probs.size() == static_cast<std::size_t>(spec.k) &&
      spec.beta_prime < 0.0)
    throw validation_error("rop_power_equal: spec carries success_probs, not beta_prime");
  const double beta = spec.rejection_threshold();
  const int k = spec.k, r = spec.r, r0 = spec.r0;
  const double bp = spec.beta_prime;
  double power = 0.0;
  for (int i = r; i <= k; ++i) {
    const int j_lo = std::max(0, i - (k - r0));
    const int j_hi = std::min(i, r0);
    for (int j = j_lo; j <= j_hi; ++j)
      power += binom_pmf(r0, bp, j) * binom_pmf(k - r0, beta, i - j);
  }
  return std::min(1.0, power);
}

/// Tail P(#successes >= r) of the Poisson-binomial distribution via the
/// O(K^2) dynamic program over partial success counts.
inline double poisson_binomial_tail_geq(std::span<const double> probs, int r) {
  if (r <= 0) return 1.0;
  if (static_cast<std::size_t>(r) > probs.size()) return 0.0;
  std::vector<double> f(probs.size() + 1, 0.0);
  f[0] = 1.0;
  std::size_t upper = 0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0))
      throw validation_error("poisson_binomial: probabilities must lie in [0, 1]");
    ++upper;
    for (std::size_t j = upper; j-- > 0;)
      f[j + 1] += f[j + 1] * (-p) + f[j] * p;  // f'[j+1] = f[j+1](1-p) + f[j] p
    f[0] *= 1.0 - p;
  }
  double tail = 0.0;
  for (std::size_t j = static_cast<std::size_t>(r); j < f.size(); ++j) tail += f[j];
  return std::min(1.0, tail);
}

/// Power with heterogeneous per-study success probabilities (the unequal
/// effects generalization); spec.success_probs holds all K entries.
inline double rop_power_poisson_binomial(const PowerSpec& spec) {
  spec.validate();
  if (spec.success_probs.size() != static_cast<std::size_t>(spec.k))
    throw validation_error("rop_power_poisson_binomial: spec needs K success_probs");
  return poisson_binomial_tail_geq(spec.success_probs, spec.r);
}

struct PowerCurve {
  std::string sweep;  // "r" or "r0"
  std::vector<int> x;
  std::vector<double> power;
};

/// Sweep r = 1..K at fixed r0.
inline PowerCurve power_curve_over_r(int k, int r0, double alpha, double beta_prime) {
  PowerCurve c;
  c.sweep = "r";
  for (int r = 1; r <= k; ++r) {
    PowerSpec s;
    s.k = k;
    s.r = r;
    s.r0 = r0;
    s.alpha = alpha;
    s.beta_prime = beta_prime;
    c.x.push_back(r);
    c.power.push_back(rop_power_equal(s));
  }
  return c;
}

/// Sweep r0 = 0..K at fixed r.
inline PowerCurve power_curve_over_r0(int k, int r, double alpha, double beta_prime) {
  PowerCurve c;
  c.sweep = "r0";
  for (int r0 = 0; r0 <= k; ++r0) {
    PowerSpec s;
    s.k = k;
    s.r = r;
    s.r0 = r0;
    s.alpha = alpha;
    s.beta_prime = beta_prime;
    c.x.push_back(r0);
    c.power.push_back(rop_power_equal(s));
  }
  return c;
}

/// Smallest count c with P(BIN(K, null_p) >= c) <= level; K + 1 when even
/// requiring all K successes exceeds the level.
inline int vote_critical_count(int k, double null_p, double level) {
  if (k < 1) throw validation_error("vote_critical_count: K must be at least 1");
  if (!(null_p > 0.0 && null_p < 1.0))
    throw validation_error("vote_critical_count: null probability must lie in (0, 1)");
  if (!(level > 0.0 && level < 1.0))
    throw validation_error("vote_critical_count: level must lie in (0, 1)");
  for (int c = 0; c <= k; ++c)
    if (binom_tail_geq(k, null_p, c) <= level) return c;
  return k + 1;
}

/// Power of the vote-counting test: the count null is BIN(K, null_p) (alpha
/// framing or the pi0 framing, per the caller), each study succeeds with
/// probability single_study_power under the alternative.
inline double vote_counting_power(int k, double null_p, double single_study_power,
                                  double level = 0.05) {
  if (!(single_study_power >= 0.0 && single_study_power <= 1.0))
    throw validation_error("vote_counting_power: study power must lie in [0, 1]");
  const int crit = vote_critical_count(k, null_p, level);
  if (crit > k) return 0.0;
  return binom_tail_geq(k, single_study_power, crit);
}

/// Map a two-sample t-test scenario to the per-study success probability
/// beta' = P(p <= threshold | effect). Monte Carlo, so approximate; the
/// standard error is about sqrt(beta'(1-beta')/draws).
inline double beta_prime_for_t_effect(double effect, int n_per_group, double threshold,
                                       int draws = 20000, std::uint64_t seed = 1) {
  if (n_per_group < 2)
    throw validation_error("beta_prime_for_t_effect: need at least 2 per group");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw validation_error("beta_prime_for_t_effect: threshold must lie in (0, 1)");
  auto rng = substream(seed, 0x9e3779b9);
  std::vector<double> a(n_per_group), b(n_per_group);
  int hits = 0;
  for (int d = 0; d < draws; ++d) {
    for (auto& v : a) v = effect + normal01(rng);
    for (auto& v : b) v = normal01(rng);
    if (welch_t_test(a, b, Tail::two_sided).p <= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace rop
