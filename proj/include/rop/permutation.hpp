#pragma once

// Label-permutation null estimation. Class labels are permuted within each
// study, the whole DE + combination pipeline is replayed, and the resulting
// null statistics are pooled across genes and permutations.

#include <algorithm>
#include <cstdint>
#include <future>
#include <span>
#include <thread>
#include <vector>

#include "rop/combine.hpp"
#include "rop/error.hpp"
#include "rop/rng.hpp"
#include "rop/study.hpp"

namespace rop {

enum class PermutationScope { class_labels_within_study, pvalues_across_genes_within_study };

struct PermutationPlan {
  int permutations = 500;
  std::uint64_t seed = 0;
  PermutationScope scope = PermutationScope::class_labels_within_study;
};

/// Pooled null statistics: one G-vector per permutation, G*B values total.
struct NullPool {
  std::vector<double> values;
  std::size_t n_genes = 0;
  int permutations = 0;
  bool small_is_significant = true;
};

namespace detail {

template <typename Fn>
inline void parallel_for_index(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [=, &fn]() {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    }));
  }
  for (auto& f : futures) f.get();
}

// One permutation replicate: shuffle labels per study, redo DE tests and the
// combination, write G statistics into `out`.
inline void permuted_statistics(const StudySet& set, const MetaMethodSpec& spec,
                                Sidedness sides, std::mt19937_64 rng,
                                std::span<double> out) {
  const std::size_t g_count = set.n_genes();
  const std::size_t k = set.n_studies();
  std::vector<std::vector<std::uint8_t>> labels(k);
  for (std::size_t s = 0; s < k; ++s) {
    labels[s] = set.studies[s].labels;
    shuffle(labels[s], rng);
  }
  std::vector<double> cases, controls;
  std::vector<double> left(k), right(k);
  for (std::size_t g = 0; g < g_count; ++g) {
    for (std::size_t s = 0; s < k; ++s) {
      split_by_label(set.studies[s].gene_row(g), labels[s], controls, cases);
      const auto t = welch_t_test(cases, controls, Tail::two_sided);
      if (sides == Sidedness::two_sided) {
        left[s] = t.p;
      } else {
        left[s] = t.p_left;
        right[s] = t.p_right;
      }
    }
    double stat = 0.0;
    switch (spec.method) {
      case MetaMethod::rop: stat = combine_rop(left, spec.r).statistic; break;
      case MetaMethod::rop_one_sided:
        stat = combine_rop_one_sided(left, right, spec.r).statistic;
        break;
      case MetaMethod::fisher: stat = combine_fisher(left).statistic; break;
      case MetaMethod::stouffer: stat = combine_stouffer(left).statistic; break;
      case MetaMethod::minp: stat = combine_minp(left).statistic; break;
      case MetaMethod::maxp: stat = combine_maxp(left).statistic; break;
      case MetaMethod::vote_count:
        stat = static_cast<double>(vote_count(left, spec.alpha_vc, spec.pi0).count);
        break;
    }
    out[g] = stat;
  }
}

}  // namespace detail

/// Simulate the combined statistic's null by permuting class labels within
/// each study B times. Permutation b draws from substream(seed, b), so the
/// pool is identical no matter how the permutations are scheduled.
inline NullPool permute_labels(const StudySet& set, const PermutationPlan& plan,
                               Sidedness de_sides, const MetaMethodSpec& spec) {
  if (plan.scope != PermutationScope::class_labels_within_study)
    throw validation_error("permute_labels: plan scope must be class_labels_within_study");
  if (plan.permutations < 1)
    throw validation_error("permute_labels: need at least one permutation");
  spec.validate(set.n_studies());
  if ((spec.method == MetaMethod::rop_one_sided) !=
      (de_sides == Sidedness::one_sided_pair))
    throw validation_error("permute_labels: DE sidedness does not match the method");
  for (const auto& s : set.studies)
    if (s.class_count(0) < 2 || s.class_count(1) < 2)
      throw validation_error("study '" + s.id +
                             "': each class needs at least 2 samples");

  NullPool pool;
  pool.n_genes = set.n_genes();
  pool.permutations = plan.permutations;
  pool.small_is_significant = small_is_significant(spec.method);
  pool.values.resize(pool.n_genes * static_cast<std::size_t>(plan.permutations));
  detail::parallel_for_index(static_cast<std::size_t>(plan.permutations), [&](std::size_t b) {
    detail::permuted_statistics(
        set, spec, de_sides, substream(plan.seed, b + 1),
        std::span<double>(pool.values.data() + b * pool.n_genes, pool.n_genes));
  });
  return pool;
}

struct PooledInference {
  std::vector<double> meta_p;
  std::vector<double> q;
};

/// Pooled permutation p-values and q-values.
///   meta_p_g = (1 + #{pool at least as extreme}) / (1 + G*B)
///   q_g      = [(null count / B) / #{observed at least as extreme}], monotonized.
inline PooledInference pool_pvalues(std::span<const double> observed, const NullPool& pool) {
  if (pool.values.empty()) throw validation_error("pool_pvalues: empty null pool");
  if (observed.empty()) throw validation_error("pool_pvalues: no observed statistics");

  std::vector<double> sorted_pool(pool.values.begin(), pool.values.end());
  std::sort(sorted_pool.begin(), sorted_pool.end());
  const double total = static_cast<double>(sorted_pool.size());
  const std::size_t g_count = observed.size();

  std::vector<std::size_t> order(g_count);
  for (std::size_t i = 0; i < g_count; ++i) order[i] = i;
  const bool small = pool.small_is_significant;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return small ? observed[a] < observed[b] : observed[a] > observed[b];
  });

  PooledInference inf;
  inf.meta_p.resize(g_count);
  inf.q.resize(g_count);
  std::vector<double> raw_q(g_count);
  for (std::size_t rank = 0; rank < g_count;) {
    const double x = observed[order[rank]];
    std::size_t hi = rank;
    while (hi + 1 < g_count && observed[order[hi + 1]] == x) ++hi;
    const double null_extreme =
        small ? static_cast<double>(std::upper_bound(sorted_pool.begin(),
                                                     sorted_pool.end(), x) -
                                    sorted_pool.begin())
              : static_cast<double>(sorted_pool.end() -
                                    std::lower_bound(sorted_pool.begin(),
                                                     sorted_pool.end(), x));
    // tied observed values all share the at-least-as-extreme count
    const double obs_extreme = static_cast<double>(hi + 1);
    for (std::size_t i = rank; i <= hi; ++i) {
      const std::size_t g = order[i];
      inf.meta_p[g] = (1.0 + null_extreme) / (1.0 + total);
      raw_q[g] = std::min(
          1.0, (null_extreme / static_cast<double>(pool.permutations)) / obs_extreme);
    }
    rank = hi + 1;
  }
  double running = 1.0;
  for (std::size_t rank = g_count; rank-- > 0;) {
    running = std::min(running, raw_q[order[rank]]);
    inf.q[order[rank]] = running;
  }
  return inf;
}

}  // namespace rop
