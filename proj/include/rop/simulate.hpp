#pragma once

// Simulation benchmark: generate multi-study expression data with optional
// correlated gene clusters, planted DE structure of known per-gene breadth
// t_g, and score meta-analysis methods by FDR1 / FDR2 and per-t_g power.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "rop/combine.hpp"
#include "rop/error.hpp"
#include "rop/fdr.hpp"
#include "rop/mvn.hpp"
#include "rop/permutation.hpp"
#include "rop/power.hpp"
#include "rop/rng.hpp"
#include "rop/study.hpp"

namespace rop {

struct SimConfig {
  std::size_t n_genes = 10000;
  int n_clusters = 200;
  int cluster_size = 20;
  int n_studies = 10;
  int n_cases = 50;
  int n_controls = 50;
  std::size_t n_de_genes = 1000;
  double effect_min = 0.5;  // |mu| sampled uniformly from [effect_min, effect_max]
  double effect_max = 1.0;
  bool consistent_sign = false;  // force one sign per gene across studies
  int wishart_df = 60;
  double psi_identity_weight = 0.5;  // Psi = w_I * I + w_J * J
  double psi_ones_weight = 0.5;
  bool correlated = true;
  double fdr_level = 0.05;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_genes < 1) throw validation_error("sim: n_genes must be positive");
    if (n_studies < 2) throw validation_error("sim: need at least 2 studies");
    if (n_cases < 2 || n_controls < 2)
      throw validation_error("sim: need at least 2 cases and 2 controls");
    if (n_de_genes > n_genes)
      throw validation_error("sim: n_de_genes cannot exceed n_genes");
    if (correlated) {
      if (n_clusters < 1 || cluster_size < 2)
        throw validation_error("sim: clusters need at least 2 genes");
      if (static_cast<std::size_t>(n_clusters) * cluster_size > n_genes)
        throw validation_error("sim: clustered genes exceed n_genes");
      if (wishart_df <= cluster_size - 1)
        throw validation_error("sim: wishart_df must exceed cluster_size - 1");
      if (!(psi_identity_weight + psi_ones_weight > 0.0))
        throw validation_error("sim: Psi weights must give a positive definite scale");
    }
    if (!(effect_min > 0.0 && effect_max >= effect_min))
      throw validation_error("sim: effect range must satisfy 0 < min <= max");
    if (!(fdr_level > 0.0 && fdr_level < 1.0))
      throw validation_error("sim: fdr_level must lie in (0, 1)");
  }
};

struct SimTruth {
  std::vector<int> t_g;              // true number of DE studies per gene
  std::vector<std::uint8_t> delta;   // G x K DE indicators
  std::vector<double> mu;            // G x K effect sizes (0 where delta = 0)
  std::vector<int> cluster_of;       // cluster index, -1 when unclustered
};

struct SimulatedData {
  StudySet studies;
  SimTruth truth;
};

/// Cluster membership and DE truth. Drawn from substreams separate from the
/// noise so the truth can be regenerated without sampling expression data.
inline SimTruth generate_truth(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t g_count = cfg.n_genes;
  const std::size_t k = static_cast<std::size_t>(cfg.n_studies);
  SimTruth truth;
  truth.cluster_of.assign(g_count, -1);

  if (cfg.correlated) {
    auto rng_cluster = substream(cfg.seed, 0xC105);
    const auto chosen = sample_without_replacement(
        rng_cluster, static_cast<std::uint32_t>(g_count),
        static_cast<std::uint32_t>(cfg.n_clusters * cfg.cluster_size));
    for (int c = 0; c < cfg.n_clusters; ++c)
      for (int j = 0; j < cfg.cluster_size; ++j)
        truth.cluster_of[chosen[static_cast<std::size_t>(c) * cfg.cluster_size + j]] = c;
  }

  // t_g uniform on {1..K} for the DE genes, delta a uniform subset of size t_g
  auto rng = substream(cfg.seed, 0x7247);
  truth.t_g.assign(g_count, 0);
  truth.delta.assign(g_count * k, 0);
  truth.mu.assign(g_count * k, 0.0);
  for (std::size_t g = 0; g < cfg.n_de_genes; ++g) {
    const int tg = 1 + static_cast<int>(uniform_below(rng, k));
    truth.t_g[g] = tg;
    const auto which = sample_without_replacement(rng, static_cast<std::uint32_t>(k),
                                                  static_cast<std::uint32_t>(tg));
    const double gene_sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    for (auto s : which) {
      truth.delta[g * k + s] = 1;
      const double mag = uniform_range(rng, cfg.effect_min, cfg.effect_max);
      const double sign =
          cfg.consistent_sign ? gene_sign : (uniform01(rng) < 0.5 ? -1.0 : 1.0);
      truth.mu[g * k + s] = sign * mag;
    }
  }
  return truth;
}

/// Generate one dataset. All randomness flows from config.seed; the draw
/// order is fixed, so equal seeds give bit-identical data.
inline SimulatedData generate_dataset(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t g_count = cfg.n_genes;
  const std::size_t k = static_cast<std::size_t>(cfg.n_studies);
  const std::size_t n = static_cast<std::size_t>(cfg.n_cases + cfg.n_controls);
  auto rng = substream(cfg.seed, 0x401E);

  SimulatedData out;
  out.truth = generate_truth(cfg);
  const auto& truth = out.truth;

  // gene lists per cluster, ascending gene index
  std::vector<std::vector<std::uint32_t>> cluster_genes;
  if (cfg.correlated) {
    cluster_genes.resize(cfg.n_clusters);
    for (std::size_t g = 0; g < g_count; ++g)
      if (truth.cluster_of[g] >= 0)
        cluster_genes[static_cast<std::size_t>(truth.cluster_of[g])].push_back(
            static_cast<std::uint32_t>(g));
  }

  // Psi for the inverse-Wishart cluster covariances
  SquareMatrix psi(static_cast<std::size_t>(cfg.cluster_size));
  for (std::size_t i = 0; i < psi.dim; ++i)
    for (std::size_t j = 0; j < psi.dim; ++j)
      psi.at(i, j) = cfg.psi_ones_weight + (i == j ? cfg.psi_identity_weight : 0.0);

  out.studies.genes.reserve(g_count);
  for (std::size_t g = 0; g < g_count; ++g)
    out.studies.genes.push_back("gene" + std::to_string(g + 1));

  std::vector<double> draw;
  for (std::size_t s = 0; s < k; ++s) {
    Study study;
    study.id = "study" + std::to_string(s + 1);
    study.genes = out.studies.genes;
    for (std::size_t i = 0; i < n; ++i) {
      study.samples.push_back("s" + std::to_string(s + 1) + "_" + std::to_string(i + 1));
      study.labels.push_back(i < static_cast<std::size_t>(cfg.n_controls) ? 0 : 1);
    }
    study.expression.assign(g_count * n, 0.0);

    // noise: correlated within clusters, independent N(0,1) elsewhere
    if (cfg.correlated) {
      for (int c = 0; c < cfg.n_clusters; ++c) {
        const auto cov = inverse_wishart_sample(psi, cfg.wishart_df, rng);
        const auto corr = standardize_to_correlation(cov);
        const auto chol = cholesky_lower(corr);
        for (std::size_t i = 0; i < n; ++i) {
          mvn_sample(chol, rng, draw);
          for (int j = 0; j < cfg.cluster_size; ++j)
            study.expression[static_cast<std::size_t>(cluster_genes[c][j]) * n + i] =
                draw[j];
        }
      }
    }
    for (std::size_t g = 0; g < g_count; ++g) {
      if (truth.cluster_of[g] >= 0) continue;
      for (std::size_t i = 0; i < n; ++i)
        study.expression[g * n + i] = normal01(rng);
    }
    // shift case samples by the planted effect
    for (std::size_t g = 0; g < g_count; ++g) {
      if (!truth.delta[g * k + s]) continue;
      const double shift = truth.mu[g * k + s];
      for (std::size_t i = static_cast<std::size_t>(cfg.n_controls); i < n; ++i)
        study.expression[g * n + i] += shift;
    }
    out.studies.studies.push_back(std::move(study));
  }
  return out;
}

enum class InferenceRoute { parametric_bh, parametric_by, permutation };

inline std::string route_name(InferenceRoute r) {
  switch (r) {
    case InferenceRoute::parametric_bh: return "bh";
    case InferenceRoute::parametric_by: return "by";
    case InferenceRoute::permutation: return "permutation";
  }
  return "?";
}

struct BenchMethod {
  std::string label;
  MetaMethodSpec spec;
  InferenceRoute route = InferenceRoute::parametric_bh;
  int permutations = 500;  // permutation route only
};

struct BenchReport {
  struct MethodSummary {
    std::string label;
    double fdr1_mean = 0.0, fdr1_sd = 0.0;
    double fdr2_mean = 0.0, fdr2_sd = 0.0;
    double detected_mean = 0.0;
    std::vector<double> fdr1_reps, fdr2_reps, detected_reps;
    // per t_g in 1..K, aggregated over replicates
    std::vector<std::size_t> detected_by_tg, total_by_tg;
    std::vector<double> power_by_tg;
  };
  std::vector<MethodSummary> methods;
  SimConfig config;
  int n_replicates = 0;
  int reference_r = 6;  // the HS_r target behind FDR2
};

namespace detail {

struct ReplicateScores {
  std::vector<double> fdr1, fdr2, detected;        // per method
  std::vector<std::vector<std::size_t>> det_by_tg; // per method, per t_g
};

inline std::vector<double> route_q_values(const MetaResult& result,
                                          const BenchMethod& method,
                                          const SimulatedData& data,
                                          std::uint64_t perm_seed) {
  switch (method.route) {
    case InferenceRoute::parametric_bh: return bh_adjust(result.meta_p);
    case InferenceRoute::parametric_by: return by_adjust(result.meta_p);
    case InferenceRoute::permutation: {
      PermutationPlan plan;
      plan.permutations = method.permutations;
      plan.seed = perm_seed;
      plan.scope = PermutationScope::class_labels_within_study;
      const auto pool =
          permute_labels(data.studies, plan, Sidedness::two_sided, method.spec);
      return pool_pvalues(result.statistic, pool).q;
    }
  }
  throw validation_error("unknown inference route");
}

}  // namespace detail

/// Run the benchmark: per replicate, generate a dataset, run per-study Welch
/// tests, combine with each method, control FDR through its route, and score
/// FDR1 (t_g = 0 among detections) and FDR2 (t_g < reference_r). Replicates
/// use seed substreams, so reports are identical across schedules.
inline BenchReport run_benchmark(const SimConfig& cfg,
                                 const std::vector<BenchMethod>& methods,
                                 int n_replicates, int reference_r = 6) {
  cfg.validate();
  if (methods.empty()) throw validation_error("run_benchmark: no methods");
  if (n_replicates < 1) throw validation_error("run_benchmark: need replicates");
  if (reference_r < 1 || reference_r > cfg.n_studies)
    throw validation_error("run_benchmark: reference_r out of range");

  const std::size_t k = static_cast<std::size_t>(cfg.n_studies);
  std::vector<detail::ReplicateScores> reps(static_cast<std::size_t>(n_replicates));

  detail::parallel_for_index(static_cast<std::size_t>(n_replicates), [&](std::size_t rep) {
    SimConfig rep_cfg = cfg;
    rep_cfg.seed = derive_seed(cfg.seed, rep + 1);
    const auto data = generate_dataset(rep_cfg);
    const auto pvals = de_test_all(data.studies, Sidedness::two_sided);

    auto& scores = reps[rep];
    scores.fdr1.resize(methods.size());
    scores.fdr2.resize(methods.size());
    scores.detected.resize(methods.size());
    scores.det_by_tg.assign(methods.size(), std::vector<std::size_t>(k + 1, 0));
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto result = combine_matrix(pvals, methods[m].spec);
      std::vector<double> q;
      if (methods[m].spec.method == MetaMethod::vote_count) {
        // the classical count test: fixed critical value from the chosen
        // binomial null at the significance level; FDR machinery does not
        // apply to the discrete count statistic
        const double null_p = methods[m].spec.vote_pi0_null ? methods[m].spec.pi0
                                                            : methods[m].spec.alpha_vc;
        const int crit =
            vote_critical_count(cfg.n_studies, null_p, cfg.fdr_level);
        q.assign(result.vote_counts.size(), 1.0);
        for (std::size_t g = 0; g < q.size(); ++g)
          if (result.vote_counts[g] >= crit) q[g] = 0.0;
      } else {
        q = detail::route_q_values(result, methods[m], data,
                                   derive_seed(rep_cfg.seed, 1000 + m));
      }
      std::size_t detected = 0, false1 = 0, false2 = 0;
      for (std::size_t g = 0; g < q.size(); ++g) {
        if (q[g] > cfg.fdr_level) continue;
        ++detected;
        const int tg = data.truth.t_g[g];
        if (tg == 0) ++false1;
        if (tg < reference_r) ++false2;
        scores.det_by_tg[m][static_cast<std::size_t>(tg)] += 1;
      }
      scores.detected[m] = static_cast<double>(detected);
      scores.fdr1[m] = detected ? static_cast<double>(false1) / detected : 0.0;
      scores.fdr2[m] = detected ? static_cast<double>(false2) / detected : 0.0;
    }
  });

  // truth marginals give the power-by-t_g denominators; truth regenerates
  // from its own substream without touching the noise draws
  std::vector<std::vector<std::size_t>> total_by_tg(
      static_cast<std::size_t>(n_replicates), std::vector<std::size_t>(k + 1, 0));
  for (std::size_t rep = 0; rep < static_cast<std::size_t>(n_replicates); ++rep) {
    SimConfig rep_cfg = cfg;
    rep_cfg.seed = derive_seed(cfg.seed, rep + 1);
    const auto truth = generate_truth(rep_cfg);
    for (std::size_t g = 0; g < cfg.n_genes; ++g)
      total_by_tg[rep][static_cast<std::size_t>(truth.t_g[g])] += 1;
  }

  BenchReport report;
  report.config = cfg;
  report.n_replicates = n_replicates;
  report.reference_r = reference_r;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    BenchReport::MethodSummary s;
    s.label = methods[m].label.empty()
                  ? method_name(methods[m].spec.method) + "-" + route_name(methods[m].route)
                  : methods[m].label;
    s.detected_by_tg.assign(k + 1, 0);
    s.total_by_tg.assign(k + 1, 0);
    for (int rep = 0; rep < n_replicates; ++rep) {
      const auto& scores = reps[static_cast<std::size_t>(rep)];
      s.fdr1_reps.push_back(scores.fdr1[m]);
      s.fdr2_reps.push_back(scores.fdr2[m]);
      s.detected_reps.push_back(scores.detected[m]);
      for (std::size_t t = 0; t <= k; ++t) {
        s.detected_by_tg[t] += scores.det_by_tg[m][t];
        s.total_by_tg[t] += total_by_tg[static_cast<std::size_t>(rep)][t];
      }
    }
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    mean_sd(s.fdr1_reps, s.fdr1_mean, s.fdr1_sd);
    mean_sd(s.fdr2_reps, s.fdr2_mean, s.fdr2_sd);
    double dummy;
    mean_sd(s.detected_reps, s.detected_mean, dummy);
    s.power_by_tg.assign(k + 1, 0.0);
    for (std::size_t t = 0; t <= k; ++t)
      if (s.total_by_tg[t] > 0)
        s.power_by_tg[t] =
            static_cast<double>(s.detected_by_tg[t]) / static_cast<double>(s.total_by_tg[t]);
    report.methods.push_back(std::move(s));
  }
  return report;
}

/// Detection power by true DE breadth t_g, one row per t_g = 1..K.
struct PerTgRow {
  int t_g = 0;
  std::vector<double> power;  // aligned with report.methods
};

inline std::vector<PerTgRow> per_tg_power(const BenchReport& report) {
  std::vector<PerTgRow> rows;
  const std::size_t k = static_cast<std::size_t>(report.config.n_studies);
  for (std::size_t t = 1; t <= k; ++t) {
    PerTgRow row;
    row.t_g = static_cast<int>(t);
    for (const auto& m : report.methods) row.power.push_back(m.power_by_tg[t]);
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Pairwise overlap of rOP detection sets across r settings:
/// overlap[a][b] = mean over replicates of |D_a intersect D_b| / |D_a|.
struct RStabilityReport {
  std::vector<int> r_values;
  std::vector<std::vector<double>> overlap;
  std::vector<double> mean_detected;
};

inline RStabilityReport r_stability(const SimConfig& cfg, const std::vector<int>& r_values,
                                    int n_replicates) {
  cfg.validate();
  if (r_values.empty()) throw validation_error("r_stability: no r values");
  for (int r : r_values)
    if (r < 1 || r > cfg.n_studies)
      throw validation_error("r_stability: r out of range");
  if (n_replicates < 1) throw validation_error("r_stability: need replicates");

  const std::size_t nr = r_values.size();
  std::vector<std::vector<std::vector<std::uint8_t>>> detected(
      static_cast<std::size_t>(n_replicates));
  detail::parallel_for_index(static_cast<std::size_t>(n_replicates), [&](std::size_t rep) {
    SimConfig rep_cfg = cfg;
    rep_cfg.seed = derive_seed(cfg.seed, rep + 1);
    const auto data = generate_dataset(rep_cfg);
    const auto pvals = de_test_all(data.studies, Sidedness::two_sided);
    detected[rep].resize(nr);
    for (std::size_t i = 0; i < nr; ++i) {
      MetaMethodSpec spec;
      spec.method = MetaMethod::rop;
      spec.r = r_values[i];
      const auto result = combine_matrix(pvals, spec);
      const auto q = bh_adjust(result.meta_p);
      auto& mask = detected[rep][i];
      mask.resize(q.size());
      for (std::size_t g = 0; g < q.size(); ++g) mask[g] = q[g] <= cfg.fdr_level;
    }
  });

  RStabilityReport report;
  report.r_values = r_values;
  report.overlap.assign(nr, std::vector<double>(nr, 0.0));
  report.mean_detected.assign(nr, 0.0);
  std::vector<std::vector<double>> sums(nr, std::vector<double>(nr, 0.0));
  std::vector<std::vector<int>> counts(nr, std::vector<int>(nr, 0));
  for (int rep = 0; rep < n_replicates; ++rep) {
    const auto& reps = detected[static_cast<std::size_t>(rep)];
    for (std::size_t a = 0; a < nr; ++a) {
      double na = 0.0;
      for (auto v : reps[a]) na += v;
      report.mean_detected[a] += na / n_replicates;
      if (na == 0.0) continue;
      for (std::size_t b = 0; b < nr; ++b) {
        double inter = 0.0;
        for (std::size_t g = 0; g < reps[a].size(); ++g)
          inter += (reps[a][g] && reps[b][g]) ? 1.0 : 0.0;
        sums[a][b] += inter / na;
        counts[a][b] += 1;
      }
    }
  }
  for (std::size_t a = 0; a < nr; ++a)
    for (std::size_t b = 0; b < nr; ++b)
      report.overlap[a][b] = counts[a][b] ? sums[a][b] / counts[a][b] : 0.0;
  return report;
}

}  // namespace rop
