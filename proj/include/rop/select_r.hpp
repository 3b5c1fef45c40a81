#pragma once

// Data-driven selection of the rOP order r: (1) the detrended DE-count
// criterion against a within-study p-value shuffle baseline, and (2) the
// pathway-association committee with sequential Wilcoxon testing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "rop/combine.hpp"
#include "rop/error.hpp"
#include "rop/fdr.hpp"
#include "rop/gene_sets.hpp"
#include "rop/permutation.hpp"
#include "rop/rng.hpp"
#include "rop/stat_tests.hpp"

namespace rop {

struct RDiagnostics {
  struct Row {
    int r = 0;
    double n_detected = 0.0;     // N_r
    double baseline_mean = 0.0;  // mean of N_r over the B shuffles
    double baseline_sd = 0.0;
    double adjusted = 0.0;       // N'_r = N_r - baseline_mean; may be negative
  };
  std::vector<Row> rows;  // r = 1..K
  int selected_r = 0;
  double fdr_threshold = 0.05;
  std::size_t n_genes = 0;
  std::size_t n_studies = 0;
};

namespace detail {

// DE counts for every r at once: sort each gene's p-vector, convert the r-th
// order statistic through its Beta null, and count BH rejections per r.
inline std::vector<double> de_counts_all_r(const std::vector<double>& values,
                                           std::size_t g_count, std::size_t k,
                                           double fdr) {
  std::vector<double> sorted_rows(values);
  for (std::size_t g = 0; g < g_count; ++g)
    std::sort(sorted_rows.begin() + g * k, sorted_rows.begin() + (g + 1) * k);
  std::vector<double> counts(k);
  std::vector<double> meta_p(g_count);
  for (std::size_t r = 1; r <= k; ++r) {
    const double a = static_cast<double>(r);
    const double b = static_cast<double>(k - r + 1);
    for (std::size_t g = 0; g < g_count; ++g)
      meta_p[g] = beta_cdf(sorted_rows[g * k + (r - 1)], a, b);
    const auto q = bh_adjust(meta_p);
    counts[r - 1] = static_cast<double>(count_rejections(q, fdr));
  }
  return counts;
}

}  // namespace detail

/// Tie rule for maximizing the adjusted DE count: among orders whose N'_r
/// reaches within 5% of the maximum, prefer the largest r.
inline int select_r_from_adjusted(const std::vector<RDiagnostics::Row>& rows) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& row : rows) best = std::max(best, row.adjusted);
  if (best <= 0.0) {
    // degenerate curve (no detections anywhere); fall back to the exact argmax,
    // largest r among ties
    int pick = rows.front().r;
    double val = rows.front().adjusted;
    for (const auto& row : rows)
      if (row.adjusted >= val) {
        val = row.adjusted;
        pick = row.r;
      }
    return pick;
  }
  const double cutoff = 0.95 * best;
  int pick = rows.front().r;
  for (const auto& row : rows)
    if (row.adjusted >= cutoff) pick = row.r;
  return pick;
}

/// DE-count criterion: N_r under BH at `fdr` for each r, a permutation
/// baseline from B independent within-study shuffles of the p-values across
/// genes, and the detrended N'_r = N_r - baseline mean.
inline RDiagnostics select_r_by_count(const PValueMatrix& matrix,
                                      const PermutationPlan& plan, double fdr = 0.05) {
  matrix.validate();
  if (matrix.sidedness != Sidedness::two_sided)
    throw validation_error("select_r_by_count: expects a two-sided p-value matrix");
  if (plan.scope != PermutationScope::pvalues_across_genes_within_study)
    throw validation_error(
        "select_r_by_count: plan scope must be pvalues_across_genes_within_study");
  if (plan.permutations < 1)
    throw validation_error("select_r_by_count: need at least one permutation");
  if (!(fdr > 0.0 && fdr < 1.0))
    throw validation_error("select_r_by_count: fdr must lie in (0, 1)");

  const std::size_t g_count = matrix.n_genes();
  const std::size_t k = matrix.n_studies();
  const auto observed = detail::de_counts_all_r(matrix.values, g_count, k, fdr);

  const std::size_t b_count = static_cast<std::size_t>(plan.permutations);
  std::vector<std::vector<double>> baseline(b_count);
  detail::parallel_for_index(b_count, [&](std::size_t b) {
    auto rng = substream(plan.seed, b + 1);
    // shuffle each study's column across genes, independently per study
    std::vector<double> permuted(g_count * k);
    std::vector<std::uint32_t> perm(g_count);
    for (std::size_t s = 0; s < k; ++s) {
      for (std::uint32_t i = 0; i < g_count; ++i) perm[i] = i;
      shuffle(perm, rng);
      for (std::size_t g = 0; g < g_count; ++g)
        permuted[g * k + s] = matrix.values[static_cast<std::size_t>(perm[g]) * k + s];
    }
    baseline[b] = detail::de_counts_all_r(permuted, g_count, k, fdr);
  });

  RDiagnostics diag;
  diag.fdr_threshold = fdr;
  diag.n_genes = g_count;
  diag.n_studies = k;
  for (std::size_t r = 1; r <= k; ++r) {
    RDiagnostics::Row row;
    row.r = static_cast<int>(r);
    row.n_detected = observed[r - 1];
    double mean = 0.0;
    for (const auto& rep : baseline) mean += rep[r - 1];
    mean /= static_cast<double>(b_count);
    double ss = 0.0;
    for (const auto& rep : baseline) {
      const double d = rep[r - 1] - mean;
      ss += d * d;
    }
    row.baseline_mean = mean;
    row.baseline_sd = b_count > 1 ? std::sqrt(ss / static_cast<double>(b_count - 1)) : 0.0;
    row.adjusted = row.n_detected - mean;
    diag.rows.push_back(row);
  }
  diag.selected_r = select_r_from_adjusted(diag.rows);
  return diag;
}

struct PathwayCommittee {
  std::vector<int> committee_r;  // floor(K/2)+1 .. K
  std::vector<std::string> pathway_names;
  std::vector<std::vector<double>> enrichment_p;  // [r index][pathway]
  std::vector<std::vector<double>> ranks;         // ranks of p within fixed r
  std::vector<double> rank_sums;                  // S_m over the committee
  std::vector<std::uint32_t> top_set;             // indices of the top-U set M
  struct SequentialTest {
    int r_high = 0;
    int r_low = 0;
    double p = 1.0;
    bool rejected = false;
  };
  std::vector<SequentialTest> sequential;
  int selected_r = 0;
  std::size_t n_genes = 0;
  std::size_t n_studies = 0;
};

namespace detail {

inline std::vector<double> midranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mid;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Pathway-association criterion. Step I scores every pathway by KS
/// enrichment of the rOP gene p-values for each committee order r in
/// {floor(K/2)+1, .., K}, ranks pathways within r, and keeps the top-U rank
/// sums as the pseudo disease-related set M. Step II walks r' down from K
/// with one-sided Wilcoxon signed-rank tests on the paired enrichment
/// p-values over M until the improvement stops being significant.
inline PathwayCommittee select_r_by_pathway(const PValueMatrix& matrix,
                                            const FilteredGeneSets& sets,
                                            int top_u = 100, double alpha = 0.05,
                                            Tail wilcoxon_tail = Tail::right) {
  matrix.validate();
  if (matrix.sidedness != Sidedness::two_sided)
    throw validation_error("select_r_by_pathway: expects a two-sided p-value matrix");
  const std::size_t k = matrix.n_studies();
  if (k < 3)
    throw validation_error("select_r_by_pathway: committee needs K >= 3");
  if (sets.universe_size != matrix.n_genes())
    throw validation_error("select_r_by_pathway: gene sets filtered on a different universe");
  if (sets.names.size() < 5)
    throw validation_error("select_r_by_pathway: committee too small, need at least "
                           "5 usable pathways, have " + std::to_string(sets.names.size()));
  if (top_u < 5) throw validation_error("select_r_by_pathway: top_u must be at least 5");

  const std::size_t g_count = matrix.n_genes();
  PathwayCommittee committee;
  committee.n_genes = g_count;
  committee.n_studies = k;
  committee.pathway_names = sets.names;
  const int r_lo = static_cast<int>(k) / 2 + 1;
  for (int r = r_lo; r <= static_cast<int>(k); ++r) committee.committee_r.push_back(r);

  // per-gene sorted p-vectors serve every committee r
  std::vector<double> sorted_rows(matrix.values);
  for (std::size_t g = 0; g < g_count; ++g)
    std::sort(sorted_rows.begin() + g * k, sorted_rows.begin() + (g + 1) * k);

  const std::size_t n_paths = sets.names.size();
  std::vector<std::uint8_t> in_set(g_count);
  std::vector<double> meta_p(g_count), inside, outside;
  for (int r : committee.committee_r) {
    const double a = static_cast<double>(r);
    const double b = static_cast<double>(k) - r + 1.0;
    for (std::size_t g = 0; g < g_count; ++g)
      meta_p[g] = beta_cdf(sorted_rows[g * k + (r - 1)], a, b);
    std::vector<double> p_row(n_paths);
    for (std::size_t m = 0; m < n_paths; ++m) {
      std::fill(in_set.begin(), in_set.end(), 0);
      for (auto idx : sets.members[m]) in_set[idx] = 1;
      inside.clear();
      outside.clear();
      for (std::size_t g = 0; g < g_count; ++g)
        (in_set[g] ? inside : outside).push_back(meta_p[g]);
      if (outside.empty())
        throw validation_error("select_r_by_pathway: pathway '" + sets.names[m] +
                               "' covers the whole universe");
      p_row[m] = ks_two_sample(inside, outside).p;
    }
    committee.ranks.push_back(detail::midranks(p_row));
    committee.enrichment_p.push_back(std::move(p_row));
  }

  committee.rank_sums.assign(n_paths, 0.0);
  for (const auto& rank_row : committee.ranks)
    for (std::size_t m = 0; m < n_paths; ++m) committee.rank_sums[m] += rank_row[m];

  const std::size_t u = std::min<std::size_t>(static_cast<std::size_t>(top_u), n_paths);
  std::vector<std::uint32_t> order(n_paths);
  std::iota(order.begin(), order.end(), std::uint32_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return committee.rank_sums[x] < committee.rank_sums[y];
  });
  committee.top_set.assign(order.begin(), order.begin() + u);

  // Step II: sequential one-sided tests, descending from r' = K
  int r_current = static_cast<int>(k);
  while (r_current - 1 >= r_lo) {
    const std::size_t hi_idx = static_cast<std::size_t>(r_current - r_lo);
    const std::size_t lo_idx = hi_idx - 1;
    std::vector<double> hi(u), lo(u);
    for (std::size_t i = 0; i < u; ++i) {
      hi[i] = committee.enrichment_p[hi_idx][committee.top_set[i]];
      lo[i] = committee.enrichment_p[lo_idx][committee.top_set[i]];
    }
    const auto test = wilcoxon_signed_rank(hi, lo, wilcoxon_tail);
    PathwayCommittee::SequentialTest seq;
    seq.r_high = r_current;
    seq.r_low = r_current - 1;
    seq.p = test.p;
    seq.rejected = !test.all_zero && test.p < alpha;
    committee.sequential.push_back(seq);
    if (!seq.rejected) break;
    --r_current;
  }
  committee.selected_r = r_current;
  return committee;
}

/// Plot-ready bundle combining both criteria (Fig-1-style series).
struct DiagnosticsBundle {
  struct CountRow {
    int r;
    double n_detected, baseline_mean, baseline_sd, adjusted;
  };
  struct PathwayRow {
    int r;
    double min, q1, median, q3, max;  // five-number summary of -log10 p over M
    double seq_p;                     // test against r+1; NaN for r = K
  };
  std::vector<CountRow> counts;
  std::vector<PathwayRow> pathway;
  int selected_r_counts = 0;
  int selected_r_pathways = 0;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline DiagnosticsBundle diagnostics_report(const RDiagnostics& counts,
                                            const PathwayCommittee& committee) {
  if (counts.n_genes != committee.n_genes || counts.n_studies != committee.n_studies)
    throw validation_error("diagnostics_report: criteria computed on different matrices");
  DiagnosticsBundle bundle;
  bundle.selected_r_counts = counts.selected_r;
  bundle.selected_r_pathways = committee.selected_r;
  for (const auto& row : counts.rows)
    bundle.counts.push_back(
        {row.r, row.n_detected, row.baseline_mean, row.baseline_sd, row.adjusted});
  for (std::size_t i = 0; i < committee.committee_r.size(); ++i) {
    std::vector<double> neglog;
    for (auto m : committee.top_set)
      neglog.push_back(-std::log10(std::max(committee.enrichment_p[i][m], 1e-300)));
    std::sort(neglog.begin(), neglog.end());
    DiagnosticsBundle::PathwayRow row;
    row.r = committee.committee_r[i];
    row.min = neglog.front();
    row.q1 = detail::quantile_sorted(neglog, 0.25);
    row.median = detail::quantile_sorted(neglog, 0.5);
    row.q3 = detail::quantile_sorted(neglog, 0.75);
    row.max = neglog.back();
    row.seq_p = std::numeric_limits<double>::quiet_NaN();
    for (const auto& seq : committee.sequential)
      if (seq.r_low == row.r) row.seq_p = seq.p;
    bundle.pathway.push_back(row);
  }
  return bundle;
}

}  // namespace rop
