#pragma once

// The combine pipeline: load studies or a precomputed p-value matrix, run the
// optional r selection, combine, control FDR through the configured route,
// and write the gene table, diagnostics, and a reproducibility manifest.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rop/combine.hpp"
#include "rop/error.hpp"
#include "rop/fdr.hpp"
#include "rop/gene_sets.hpp"
#include "rop/io.hpp"
#include "rop/permutation.hpp"
#include "rop/select_r.hpp"
#include "rop/study.hpp"

namespace rop {

inline constexpr const char* version_string = "0.1.0";

struct RunConfig {
  // input: either paired expression/label files or a precomputed matrix
  std::vector<std::string> expression_paths;
  std::vector<std::string> label_paths;
  std::string pvalues_path;
  std::string pvalues_right_path;
  std::string gene_sets_path;

  MetaMethodSpec method;
  bool auto_select_counts = false;
  bool auto_select_pathway = false;
  InferenceRoute route = InferenceRoute::parametric_bh;
  int permutations = 500;          // label permutation B
  int select_r_permutations = 100; // within-study p-value shuffles for the baseline
  int top_u = 100;
  double fdr = 0.05;
  std::size_t gene_set_min = 5;
  std::size_t gene_set_max = 500;
  std::uint64_t seed = 1;
  std::string out_dir;

  bool expression_mode() const { return !expression_paths.empty(); }

  void validate() const {
    const bool pv_mode = !pvalues_path.empty();
    if (pv_mode == expression_mode())
      throw validation_error(
          "exactly one input mode: --pvalues or --expr/--labels pairs");
    if (expression_mode() && expression_paths.size() != label_paths.size())
      throw validation_error("each --expr needs a matching --labels");
    if (expression_mode() && expression_paths.size() < 2)
      throw validation_error("meta-analysis needs at least two studies");
    if (!(fdr > 0.0 && fdr < 1.0)) throw validation_error("fdr must lie in (0, 1)");
    if (permutations < 1) throw validation_error("permutations must be positive");
    if (select_r_permutations < 1)
      throw validation_error("select-r permutations must be positive");
    if (out_dir.empty()) throw validation_error("output directory required");
    const bool rop_family = method.method == MetaMethod::rop ||
                            method.method == MetaMethod::rop_one_sided;
    const bool auto_select = auto_select_counts || auto_select_pathway;
    if (rop_family && method.r < 1 && !auto_select)
      throw validation_error("rOP needs --r or an auto-select mode");
    if (!rop_family && auto_select)
      throw validation_error("r selection applies to the rOP family only");
    if (auto_select_pathway && gene_sets_path.empty())
      throw validation_error("pathway-based selection needs --gene-sets");
    if (route == InferenceRoute::permutation && !expression_mode())
      throw validation_error("the permutation route needs expression data with labels");
    if (method.method == MetaMethod::rop_one_sided &&
        !pvalues_path.empty() && pvalues_right_path.empty())
      throw validation_error("one-sided rOP on precomputed p-values needs --pvalues-right");
  }
};

struct PipelineResult {
  MetaResult result;
  std::optional<RDiagnostics> r_counts;
  std::optional<PathwayCommittee> r_pathway;
  int selected_r = 0;
  std::size_t n_detected = 0;
  std::size_t dropped_genes = 0;
  std::vector<std::string> written;
};

namespace detail {

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["expression_paths"] = cfg.expression_paths;
  j["label_paths"] = cfg.label_paths;
  j["pvalues_path"] = cfg.pvalues_path;
  j["pvalues_right_path"] = cfg.pvalues_right_path;
  j["gene_sets_path"] = cfg.gene_sets_path;
  j["method"] = method_name(cfg.method.method);
  j["r"] = cfg.method.r;
  j["alpha_vc"] = cfg.method.alpha_vc;
  j["pi0"] = cfg.method.pi0;
  j["vote_pi0_null"] = cfg.method.vote_pi0_null;
  j["auto_select_counts"] = cfg.auto_select_counts;
  j["auto_select_pathway"] = cfg.auto_select_pathway;
  j["route"] = route_name(cfg.route);
  j["permutations"] = cfg.permutations;
  j["select_r_permutations"] = cfg.select_r_permutations;
  j["top_u"] = cfg.top_u;
  j["fdr"] = cfg.fdr;
  j["gene_set_min"] = cfg.gene_set_min;
  j["gene_set_max"] = cfg.gene_set_max;
  j["seed"] = cfg.seed;
  return j;
}

// Removes any files the run created if it fails partway.
struct OutputGuard {
  std::vector<std::filesystem::path> created;
  bool committed = false;
  ~OutputGuard() {
    if (committed) return;
    std::error_code ec;
    for (const auto& p : created) std::filesystem::remove(p, ec);
  }
};

}  // namespace detail

inline PipelineResult run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  detail::OutputGuard guard;
  const auto out_path = [&](const std::string& name) {
    auto p = std::filesystem::path(cfg.out_dir) / name;
    guard.created.push_back(p);
    return p.string();
  };

  PipelineResult pr;
  std::vector<std::string> input_files;

  // 1. assemble the p-value matrix
  PValueMatrix matrix;
  std::optional<StudySet> studies;
  const Sidedness sides = cfg.method.method == MetaMethod::rop_one_sided
                              ? Sidedness::one_sided_pair
                              : Sidedness::two_sided;
  if (cfg.expression_mode()) {
    std::vector<Study> loaded;
    for (std::size_t i = 0; i < cfg.expression_paths.size(); ++i) {
      loaded.push_back(load_study(cfg.expression_paths[i], cfg.label_paths[i]));
      input_files.push_back(cfg.expression_paths[i]);
      input_files.push_back(cfg.label_paths[i]);
    }
    studies = intersect_studies(std::move(loaded));
    pr.dropped_genes = studies->dropped_genes;
    matrix = de_test_all(*studies, sides);
  } else {
    matrix = load_pvalue_matrix(cfg.pvalues_path, cfg.pvalues_right_path);
    input_files.push_back(cfg.pvalues_path);
    if (!cfg.pvalues_right_path.empty()) input_files.push_back(cfg.pvalues_right_path);
  }

  // 2. optional data-driven r
  MetaMethodSpec spec = cfg.method;
  if (cfg.auto_select_counts || cfg.auto_select_pathway) {
    // selection criteria run on two-sided p-values
    PValueMatrix selection_matrix;
    if (sides == Sidedness::two_sided) {
      selection_matrix = matrix;
    } else if (studies) {
      selection_matrix = de_test_all(*studies, Sidedness::two_sided);
    } else {
      throw validation_error("r selection on one-sided p-value input is not supported");
    }
    if (cfg.auto_select_counts) {
      PermutationPlan plan;
      plan.permutations = cfg.select_r_permutations;
      plan.seed = derive_seed(cfg.seed, 11);
      plan.scope = PermutationScope::pvalues_across_genes_within_study;
      pr.r_counts = select_r_by_count(selection_matrix, plan, cfg.fdr);
    }
    if (cfg.auto_select_pathway) {
      const auto sets = load_gmt(cfg.gene_sets_path);
      input_files.push_back(cfg.gene_sets_path);
      const auto filtered = filter_gene_sets(sets, selection_matrix.genes,
                                             cfg.gene_set_min, cfg.gene_set_max);
      pr.r_pathway = select_r_by_pathway(selection_matrix, filtered, cfg.top_u);
    }
    // both computed: the count criterion picks, the committee is reported
    spec.r = pr.r_counts ? pr.r_counts->selected_r : pr.r_pathway->selected_r;
  }
  pr.selected_r = spec.r;

  // 3. combine + significance
  pr.result = combine_matrix(matrix, spec);
  switch (cfg.route) {
    case InferenceRoute::parametric_bh:
      pr.result.q = bh_adjust(pr.result.meta_p);
      break;
    case InferenceRoute::parametric_by:
      pr.result.q = by_adjust(pr.result.meta_p);
      break;
    case InferenceRoute::permutation: {
      PermutationPlan plan;
      plan.permutations = cfg.permutations;
      plan.seed = derive_seed(cfg.seed, 17);
      plan.scope = PermutationScope::class_labels_within_study;
      const auto pool = permute_labels(*studies, plan, sides, spec);
      auto inf = pool_pvalues(pr.result.statistic, pool);
      pr.result.meta_p = std::move(inf.meta_p);
      pr.result.q = std::move(inf.q);
      break;
    }
  }
  pr.n_detected = count_rejections(pr.result.q, cfg.fdr);

  // 4. write artifacts
  write_gene_table(out_path("gene_table.tsv"), pr.result);
  if (pr.r_counts) write_r_count_diagnostics(out_path("r_counts.tsv"), *pr.r_counts);
  if (pr.r_counts && pr.r_pathway)
    write_pathway_diagnostics(out_path("r_pathway.tsv"),
                              diagnostics_report(*pr.r_counts, *pr.r_pathway));

  nlohmann::json manifest;
  manifest["tool"] = "ropmeta";
  manifest["version"] = version_string;
  manifest["command"] = "combine";
  manifest["config"] = detail::config_to_json(cfg);
  manifest["selected_r"] = pr.selected_r;
  manifest["n_detected"] = pr.n_detected;
  manifest["dropped_genes"] = pr.dropped_genes;
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& f : input_files) {
    nlohmann::json entry;
    entry["path"] = f;
    char digest[20];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(f)));
    entry["fnv1a64"] = digest;
    inputs.push_back(entry);
  }
  manifest["inputs"] = inputs;
  {
    std::ofstream out(out_path("run_manifest.json"), std::ios::binary);
    if (!out) throw validation_error("cannot write manifest");
    out << manifest.dump(2) << "\n";
  }
  for (const auto& p : guard.created) pr.written.push_back(p.string());
  guard.committed = true;
  return pr;
}

}  // namespace rop
