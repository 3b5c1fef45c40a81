#pragma once

// Per-gene p-value combination: the r-th ordered p-value (rOP) statistic with
// its Beta(r, K-r+1) null, the classical Fisher / Stouffer / minP / maxP
// statistics, the one-sided rOP correction, and vote counting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rop/dist.hpp"
#include "rop/error.hpp"

namespace rop {

enum class MetaMethod { rop, rop_one_sided, fisher, stouffer, minp, maxp, vote_count };

enum class Sidedness { two_sided, one_sided_pair };

inline std::string method_name(MetaMethod m) {
  switch (m) {
    case MetaMethod::rop: return "rop";
    case MetaMethod::rop_one_sided: return "rop-one-sided";
    case MetaMethod::fisher: return "fisher";
    case MetaMethod::stouffer: return "stouffer";
    case MetaMethod::minp: return "minp";
    case MetaMethod::maxp: return "maxp";
    case MetaMethod::vote_count: return "vote-count";
  }
  return "?";
}

/// True when smaller values of the combined statistic mean stronger evidence.
inline bool small_is_significant(MetaMethod m) {
  switch (m) {
    case MetaMethod::rop:
    case MetaMethod::rop_one_sided:
    case MetaMethod::minp:
    case MetaMethod::maxp:
      return true;
    case MetaMethod::fisher:
    case MetaMethod::stouffer:
    case MetaMethod::vote_count:
      return false;
  }
  return true;
}

struct MetaMethodSpec {
  MetaMethod method = MetaMethod::rop;
  int r = 0;               // rOP family only
  double alpha_vc = 0.05;  // vote counting only
  double pi0 = 0.5;        // vote counting only
  bool vote_pi0_null = false;  // use BIN(K, pi0) instead of BIN(K, alpha) as null

  void validate(std::size_t n_studies) const {
    const bool rop_family =
        method == MetaMethod::rop || method == MetaMethod::rop_one_sided;
    if (rop_family && (r < 1 || static_cast<std::size_t>(r) > n_studies))
      throw validation_error("rOP order r=" + std::to_string(r) +
                             " out of range for K=" + std::to_string(n_studies));
    if (method == MetaMethod::vote_count) {
      if (!(alpha_vc > 0.0 && alpha_vc < 1.0))
        throw validation_error("vote counting threshold must lie in (0, 1)");
      if (!(pi0 > 0.0 && pi0 < 1.0))
        throw validation_error("vote counting pi0 must lie in (0, 1)");
    }
  }
};

/// G x K matrix of per-study p-values, the unit of meta-analysis. In
/// one_sided_pair mode `values` holds the left-tail p-values and
/// `values_right` the right-tail ones; paired entries sum to 1.
struct PValueMatrix {
  std::vector<std::string> genes;
  std::vector<std::string> studies;
  std::vector<double> values;        // G x K, row-major
  std::vector<double> values_right;  // empty unless one_sided_pair
  Sidedness sidedness = Sidedness::two_sided;

  std::size_t n_genes() const { return genes.size(); }
  std::size_t n_studies() const { return studies.size(); }

  std::span<const double> row(std::size_t g) const {
    return {values.data() + g * n_studies(), n_studies()};
  }
  std::span<const double> row_right(std::size_t g) const {
    return {values_right.data() + g * n_studies(), n_studies()};
  }

  void validate() const {
    const std::size_t g = n_genes(), k = n_studies();
    if (g < 1) throw validation_error("p-value matrix needs at least one gene");
    if (k < 2) throw validation_error("p-value matrix needs at least two studies");
    if (values.size() != g * k)
      throw validation_error("p-value matrix shape mismatch");
    for (double v : values)
      if (!(v >= 0.0 && v <= 1.0))
        throw validation_error("p-values must lie in [0, 1]");
    if (sidedness == Sidedness::one_sided_pair) {
      if (values_right.size() != g * k)
        throw validation_error("one-sided pair matrix shape mismatch");
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values_right[i] >= 0.0 && values_right[i] <= 1.0))
          throw validation_error("p-values must lie in [0, 1]");
        if (std::fabs(values[i] + values_right[i] - 1.0) > 1e-9)
          throw validation_error("one-sided pair entries must sum to 1");
      }
    } else if (!values_right.empty()) {
      throw validation_error("two-sided matrix carries a right-tail block");
    }
  }
};

struct CombinedValue {
  double statistic = 0.0;
  double meta_p = 1.0;
};

namespace detail {

inline double kth_smallest(std::span<const double> v, int k) {
  std::vector<double> copy(v.begin(), v.end());
  std::nth_element(copy.begin(), copy.begin() + (k - 1), copy.end());
  return copy[k - 1];
}

inline void check_rop_r(std::size_t k, int r) {
  if (r < 1 || static_cast<std::size_t>(r) > k)
    throw validation_error("rOP order r=" + std::to_string(r) +
                           " out of range for K=" + std::to_string(k));
}

// Extreme inputs are clamped before log/quantile transforms so exact zeros
// and ones stay finite while preserving ordering.
constexpr double p_floor = 1e-300;
constexpr double p_ceil = 1.0 - 1e-16;

}  // namespace detail

/// rOP: statistic is the r-th smallest p-value, null Beta(r, K-r+1).
inline CombinedValue combine_rop(std::span<const double> pvals, int r) {
  detail::check_rop_r(pvals.size(), r);
  const double k = static_cast<double>(pvals.size());
  const double stat = detail::kth_smallest(pvals, r);
  return {stat, beta_cdf(stat, static_cast<double>(r), k - r + 1.0)};
}

/// Fisher: -2 * sum(log p), null chi-square with 2K degrees of freedom.
inline CombinedValue combine_fisher(std::span<const double> pvals) {
  double stat = 0.0;
  for (double p : pvals) stat += -2.0 * std::log(std::max(p, detail::p_floor));
  return {stat, chisq_sf(stat, 2.0 * static_cast<double>(pvals.size()))};
}

/// Stouffer: sum of inverse-normal transforms, null N(0, K).
inline CombinedValue combine_stouffer(std::span<const double> pvals) {
  double stat = 0.0;
  for (double p : pvals)
    stat += -std_normal_quantile(std::clamp(p, detail::p_floor, detail::p_ceil));
  return {stat, std_normal_sf(stat / std::sqrt(static_cast<double>(pvals.size())))};
}

/// minP: null Beta(1, K).
inline CombinedValue combine_minp(std::span<const double> pvals) {
  if (pvals.empty()) throw validation_error("combine_minp: empty input");
  const double stat = *std::min_element(pvals.begin(), pvals.end());
  return {stat, beta_cdf(stat, 1.0, static_cast<double>(pvals.size()))};
}

/// maxP: null Beta(K, 1).
inline CombinedValue combine_maxp(std::span<const double> pvals) {
  if (pvals.empty()) throw validation_error("combine_maxp: empty input");
  const double stat = *std::max_element(pvals.begin(), pvals.end());
  return {stat, beta_cdf(stat, static_cast<double>(pvals.size()), 1.0)};
}

/// One-sided rOP: the smaller of the two tail-wise rOP statistics; the
/// parametric p-value doubles the Beta tail (a Bonferroni bound on the min
/// of the two dependent order statistics). Exceeding it calls for the
/// permutation route.
inline CombinedValue combine_rop_one_sided(std::span<const double> p_left,
                                           std::span<const double> p_right, int r) {
  if (p_left.size() != p_right.size())
    throw validation_error("combine_rop_one_sided: unpaired inputs");
  detail::check_rop_r(p_left.size(), r);
  for (std::size_t i = 0; i < p_left.size(); ++i)
    if (std::fabs(p_left[i] + p_right[i] - 1.0) > 1e-9)
      throw validation_error("combine_rop_one_sided: tails do not sum to 1");
  const double k = static_cast<double>(p_left.size());
  const double stat = std::min(detail::kth_smallest(p_left, r),
                               detail::kth_smallest(p_right, r));
  const double tail = beta_cdf(stat, static_cast<double>(r), k - r + 1.0);
  return {stat, std::min(1.0, 2.0 * tail)};
}

struct VoteCountValue {
  int count = 0;
  double meta_p = 1.0;      // exceedance under BIN(K, alpha)
  double meta_p_pi0 = 1.0;  // exceedance under BIN(K, pi0)
  double alpha = 0.05;
  double pi0 = 0.5;
};

/// Vote counting: the number of studies with p < alpha, tested against the
/// binomial null by one-sided exceedance.
inline VoteCountValue vote_count(std::span<const double> pvals, double alpha_vc,
                                 double pi0 = 0.5) {
  if (!(alpha_vc > 0.0 && alpha_vc < 1.0))
    throw validation_error("vote_count: alpha must lie in (0, 1)");
  if (!(pi0 > 0.0 && pi0 < 1.0))
    throw validation_error("vote_count: pi0 must lie in (0, 1)");
  const int k = static_cast<int>(pvals.size());
  int count = 0;
  for (double p : pvals)
    if (p < alpha_vc) ++count;
  VoteCountValue v;
  v.count = count;
  v.alpha = alpha_vc;
  v.pi0 = pi0;
  v.meta_p = binom_tail_geq(k, alpha_vc, count);
  v.meta_p_pi0 = binom_tail_geq(k, pi0, count);
  return v;
}

/// Mask of the r studies contributing to the rOP statistic (the r smallest
/// p-values; ties broken by the lowest study index). Exactly r bits set.
inline std::vector<std::uint8_t> effective_mask(std::span<const double> pvals, int r) {
  detail::check_rop_r(pvals.size(), r);
  const std::size_t k = pvals.size();
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pvals[a] != pvals[b]) return pvals[a] < pvals[b];
    return a < b;
  });
  std::vector<std::uint8_t> mask(k, 0);
  for (int i = 0; i < r; ++i) mask[order[i]] = 1;
  return mask;
}

/// Per-gene combined results. q-values are NaN until a significance route
/// (BH, BY, or pooled permutation) fills them in.
struct MetaResult {
  MetaMethodSpec spec;
  std::vector<std::string> genes;
  std::vector<double> statistic;
  std::vector<double> meta_p;
  std::vector<double> q;
  std::vector<std::uint8_t> effective_masks;  // G x K, rOP family only
  std::vector<int> vote_counts;               // vote counting only
  std::size_t n_studies = 0;

  bool small_significant() const { return small_is_significant(spec.method); }
  std::span<const std::uint8_t> mask_row(std::size_t g) const {
    return {effective_masks.data() + g * n_studies, n_studies};
  }
};

/// Row-wise combination over the whole matrix. Deterministic; row-level
/// errors are rethrown with the offending gene attached.
inline MetaResult combine_matrix(const PValueMatrix& matrix, const MetaMethodSpec& spec) {
  matrix.validate();
  spec.validate(matrix.n_studies());
  if (spec.method == MetaMethod::rop_one_sided &&
      matrix.sidedness != Sidedness::one_sided_pair)
    throw validation_error("one-sided rOP needs a one-sided pair matrix");
  if (spec.method != MetaMethod::rop_one_sided &&
      matrix.sidedness == Sidedness::one_sided_pair)
    throw validation_error("one-sided pair matrix requires the one-sided rOP method");

  const std::size_t g_count = matrix.n_genes();
  const std::size_t k = matrix.n_studies();
  MetaResult out;
  out.spec = spec;
  out.genes = matrix.genes;
  out.n_studies = k;
  out.statistic.resize(g_count);
  out.meta_p.resize(g_count);
  out.q.assign(g_count, std::numeric_limits<double>::quiet_NaN());
  const bool rop_family =
      spec.method == MetaMethod::rop || spec.method == MetaMethod::rop_one_sided;
  if (rop_family) out.effective_masks.resize(g_count * k);
  if (spec.method == MetaMethod::vote_count) out.vote_counts.resize(g_count);

  for (std::size_t g = 0; g < g_count; ++g) {
    try {
      const auto row = matrix.row(g);
      CombinedValue cv;
      switch (spec.method) {
        case MetaMethod::rop: cv = combine_rop(row, spec.r); break;
        case MetaMethod::rop_one_sided:
          cv = combine_rop_one_sided(row, matrix.row_right(g), spec.r);
          break;
        case MetaMethod::fisher: cv = combine_fisher(row); break;
        case MetaMethod::stouffer: cv = combine_stouffer(row); break;
        case MetaMethod::minp: cv = combine_minp(row); break;
        case MetaMethod::maxp: cv = combine_maxp(row); break;
        case MetaMethod::vote_count: {
          const auto v = vote_count(row, spec.alpha_vc, spec.pi0);
          out.vote_counts[g] = v.count;
          cv.statistic = static_cast<double>(v.count);
          cv.meta_p = spec.vote_pi0_null ? v.meta_p_pi0 : v.meta_p;
          break;
        }
      }
      out.statistic[g] = cv.statistic;
      out.meta_p[g] = cv.meta_p;
      if (rop_family) {
        // mask of the two-sided row; for the one-sided statistic, of the tail
        // that attains the minimum
        std::span<const double> mask_src = row;
        if (spec.method == MetaMethod::rop_one_sided &&
            detail::kth_smallest(matrix.row_right(g), spec.r) == cv.statistic &&
            detail::kth_smallest(row, spec.r) != cv.statistic)
          mask_src = matrix.row_right(g);
        const auto mask = effective_mask(mask_src, spec.r);
        std::copy(mask.begin(), mask.end(), out.effective_masks.begin() + g * k);
      }
    } catch (const std::exception& e) {
      throw validation_error("gene '" + matrix.genes[g] + "': " + e.what());
    }
  }
  return out;
}

}  // namespace rop
