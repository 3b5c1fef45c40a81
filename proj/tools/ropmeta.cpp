// ropmeta: rOP-based genomic meta-analysis.
//
// Subcommands:
//   combine     per-gene p-value combination with BH/BY or permutation inference
//   select-r    data-driven choice of the rOP order r (DE counts + pathways)
//   vote-count  binomial vote counting over a p-value matrix
//   power       exact rOP and vote-counting power tables
//   simulate    multi-study simulation benchmark with FDR1/FDR2 scoring
//
// Exit codes: 0 success, 1 usage, 2 parse error, 3 validation error,
// 4 compute error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rop/rop.hpp"

namespace {

rop::MetaMethod parse_method(const std::string& name) {
  if (name == "rop") return rop::MetaMethod::rop;
  if (name == "rop-one-sided") return rop::MetaMethod::rop_one_sided;
  if (name == "fisher") return rop::MetaMethod::fisher;
  if (name == "stouffer") return rop::MetaMethod::stouffer;
  if (name == "minp") return rop::MetaMethod::minp;
  if (name == "maxp") return rop::MetaMethod::maxp;
  if (name == "vote-count") return rop::MetaMethod::vote_count;
  throw rop::validation_error("unknown method '" + name + "'");
}

rop::InferenceRoute parse_route(const std::string& name) {
  if (name == "bh") return rop::InferenceRoute::parametric_bh;
  if (name == "by") return rop::InferenceRoute::parametric_by;
  if (name == "permutation") return rop::InferenceRoute::permutation;
  throw rop::validation_error("unknown inference route '" + name + "'");
}

struct CombineArgs {
  rop::RunConfig cfg;
  std::string method = "rop";
  std::string route = "bh";
  std::string select = "";  // "", "counts", "pathway", "both"
};

int cmd_combine(const CombineArgs& args) {
  rop::RunConfig cfg = args.cfg;
  cfg.method.method = parse_method(args.method);
  cfg.route = parse_route(args.route);
  if (args.select == "counts") {
    cfg.auto_select_counts = true;
  } else if (args.select == "pathway") {
    cfg.auto_select_pathway = true;
  } else if (args.select == "both") {
    cfg.auto_select_counts = true;
    cfg.auto_select_pathway = true;
  } else if (!args.select.empty()) {
    throw rop::validation_error("unknown --select-r mode '" + args.select + "'");
  }
  const auto result = rop::run_pipeline(cfg);
  if (result.dropped_genes > 0)
    std::cerr << "note: dropped " << result.dropped_genes
              << " gene(s) absent from at least one study\n";
  if (cfg.auto_select_counts || cfg.auto_select_pathway)
    std::cout << "selected r = " << result.selected_r << "\n";
  std::cout << "genes analyzed: " << result.result.genes.size() << "\n"
            << "detected at fdr " << cfg.fdr << ": " << result.n_detected << "\n"
            << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

struct SelectRArgs {
  std::string pvalues;
  std::vector<std::string> expr, labels;
  std::string gene_sets;
  std::string out_dir;
  int b = 100;
  int top_u = 100;
  double fdr = 0.05;
  std::uint64_t seed = 1;
};

int cmd_select_r(const SelectRArgs& args) {
  rop::PValueMatrix matrix;
  if (!args.pvalues.empty()) {
    matrix = rop::load_pvalue_matrix(args.pvalues);
  } else {
    if (args.expr.empty())
      throw rop::validation_error("select-r needs --pvalues or --expr/--labels pairs");
    if (args.expr.size() != args.labels.size())
      throw rop::validation_error("each --expr needs a matching --labels");
    std::vector<rop::Study> studies;
    for (std::size_t i = 0; i < args.expr.size(); ++i)
      studies.push_back(rop::load_study(args.expr[i], args.labels[i]));
    matrix = rop::de_test_all(rop::intersect_studies(std::move(studies)),
                              rop::Sidedness::two_sided);
  }
  if (args.out_dir.empty()) throw rop::validation_error("--out is required");
  std::filesystem::create_directories(args.out_dir);

  rop::PermutationPlan plan;
  plan.permutations = args.b;
  plan.seed = rop::derive_seed(args.seed, 11);
  plan.scope = rop::PermutationScope::pvalues_across_genes_within_study;
  const auto counts = rop::select_r_by_count(matrix, plan, args.fdr);
  rop::write_r_count_diagnostics(args.out_dir + "/r_counts.tsv", counts);
  std::cout << "count criterion selects r = " << counts.selected_r << "\n";

  nlohmann::json summary;
  summary["selected_r_counts"] = counts.selected_r;
  if (!args.gene_sets.empty()) {
    const auto sets = rop::load_gmt(args.gene_sets);
    const auto filtered = rop::filter_gene_sets(sets, matrix.genes);
    const auto committee = rop::select_r_by_pathway(matrix, filtered, args.top_u);
    rop::write_pathway_diagnostics(args.out_dir + "/r_pathway.tsv",
                                   rop::diagnostics_report(counts, committee));
    std::cout << "pathway criterion selects r = " << committee.selected_r << "\n";
    summary["selected_r_pathways"] = committee.selected_r;
    nlohmann::json seq = nlohmann::json::array();
    for (const auto& s : committee.sequential)
      seq.push_back({{"r_high", s.r_high},
                     {"r_low", s.r_low},
                     {"p", s.p},
                     {"rejected", s.rejected}});
    summary["sequential_tests"] = seq;
  }
  std::ofstream out(args.out_dir + "/selection.json", std::ios::binary);
  out << summary.dump(2) << "\n";
  return 0;
}

struct VoteCountArgs {
  std::string pvalues;
  std::string out_dir;
  double alpha = 0.05;
  double pi0 = 0.5;
  bool pi0_null = false;
  double fdr = 0.05;
};

int cmd_vote_count(const VoteCountArgs& args) {
  const auto matrix = rop::load_pvalue_matrix(args.pvalues);
  rop::MetaMethodSpec spec;
  spec.method = rop::MetaMethod::vote_count;
  spec.alpha_vc = args.alpha;
  spec.pi0 = args.pi0;
  spec.vote_pi0_null = args.pi0_null;
  auto result = rop::combine_matrix(matrix, spec);
  result.q = rop::bh_adjust(result.meta_p);
  if (args.out_dir.empty()) throw rop::validation_error("--out is required");
  std::filesystem::create_directories(args.out_dir);
  rop::write_gene_table(args.out_dir + "/gene_table.tsv", result);
  std::cout << "genes analyzed: " << result.genes.size() << "\n"
            << "detected at fdr " << args.fdr << ": "
            << rop::count_rejections(result.q, args.fdr) << "\n";
  return 0;
}

struct PowerArgs {
  int k = 10;
  int r = 0;
  int r0 = -1;
  double alpha = 0.05;
  double beta_prime = -1.0;
  bool sweep_r = false;
  bool sweep_r0 = false;
  std::string success_probs;
  double effect = 0.0;
  int n_per_group = 0;
  int mc_draws = 20000;
  std::uint64_t seed = 1;
  bool vote = false;
  double vote_null = 0.5;
  double single_power = 0.5;
  double level = 0.05;
  std::string k_list;
  std::string out;
};

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

int cmd_power(const PowerArgs& args) {
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!args.out.empty() && args.out != "-") {
    file.open(args.out, std::ios::binary);
    if (!file) throw rop::validation_error("cannot write to " + args.out);
    out = &file;
  }

  if (args.vote) {
    std::vector<int> ks;
    if (!args.k_list.empty())
      for (const double v : parse_doubles(args.k_list)) ks.push_back(int(v));
    else
      ks.push_back(args.k);
    *out << "k\tcritical\tpower\n";
    for (const int k : ks) {
      const int crit = rop::vote_critical_count(k, args.vote_null, args.level);
      const double power =
          rop::vote_counting_power(k, args.vote_null, args.single_power, args.level);
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", power);
      *out << k << '\t' << crit << '\t' << buf << '\n';
    }
    return 0;
  }

  double beta_prime = args.beta_prime;
  if (!args.success_probs.empty()) {
    if (args.r < 1) throw rop::validation_error("--success-probs needs --r");
    rop::PowerSpec spec;
    spec.k = args.k;
    spec.r = args.r;
    spec.r0 = 0;
    spec.alpha = args.alpha;
    spec.success_probs = parse_doubles(args.success_probs);
    spec.beta_prime = 0.0;  // unused with success_probs
    const double power = rop::rop_power_poisson_binomial(spec);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", power);
    *out << "r\tpower\n" << spec.r << '\t' << buf << '\n';
    return 0;
  }
  if (beta_prime < 0.0) {
    if (args.effect <= 0.0 || args.n_per_group < 2)
      throw rop::validation_error(
          "power needs --beta-prime, --success-probs, or --effect with --n-per-group");
    rop::PowerSpec probe;
    probe.k = args.k;
    probe.r = args.r > 0 ? args.r : std::max(1, args.k / 2 + 1);
    probe.r0 = 0;
    probe.alpha = args.alpha;
    probe.beta_prime = 0.0;
    const double threshold = probe.rejection_threshold();
    beta_prime = rop::beta_prime_for_t_effect(args.effect, args.n_per_group, threshold,
                                              args.mc_draws, args.seed);
    std::cerr << "note: beta' estimated by " << args.mc_draws
              << " Monte Carlo draws at threshold " << threshold << ": " << beta_prime
              << "\n";
  }

  if (args.sweep_r) {
    if (args.r0 < 0) throw rop::validation_error("--sweep-r needs --r0");
    rop::write_power_curve(*out,
                           rop::power_curve_over_r(args.k, args.r0, args.alpha, beta_prime));
  } else if (args.sweep_r0) {
    if (args.r < 1) throw rop::validation_error("--sweep-r0 needs --r");
    rop::write_power_curve(*out,
                           rop::power_curve_over_r0(args.k, args.r, args.alpha, beta_prime));
  } else {
    if (args.r < 1 || args.r0 < 0)
      throw rop::validation_error("point power needs --r and --r0 (or a sweep flag)");
    rop::PowerSpec spec;
    spec.k = args.k;
    spec.r = args.r;
    spec.r0 = args.r0;
    spec.alpha = args.alpha;
    spec.beta_prime = beta_prime;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", rop::rop_power_equal(spec));
    *out << "r\tpower\n" << args.r << '\t' << buf << '\n';
  }
  return 0;
}

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  int replicates_override = 0;
};

rop::BenchMethod parse_bench_method(const nlohmann::json& j) {
  rop::BenchMethod m;
  m.label = j.value("label", "");
  m.spec.method = parse_method(j.at("method").get<std::string>());
  m.spec.r = j.value("r", 0);
  m.spec.alpha_vc = j.value("alpha_vc", 0.05);
  m.spec.pi0 = j.value("pi0", 0.5);
  m.spec.vote_pi0_null = j.value("vote_pi0_null", false);
  m.route = parse_route(j.value("route", "bh"));
  m.permutations = j.value("permutations", 500);
  return m;
}

int cmd_simulate(const SimulateArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw rop::parse_error(args.config_path, 0, "cannot open file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw rop::parse_error(args.config_path, 0, e.what());
  }

  rop::SimConfig cfg;
  cfg.n_genes = j.value("n_genes", cfg.n_genes);
  cfg.n_clusters = j.value("n_clusters", cfg.n_clusters);
  cfg.cluster_size = j.value("cluster_size", cfg.cluster_size);
  cfg.n_studies = j.value("n_studies", cfg.n_studies);
  cfg.n_cases = j.value("n_cases", cfg.n_cases);
  cfg.n_controls = j.value("n_controls", cfg.n_controls);
  cfg.n_de_genes = j.value("n_de_genes", cfg.n_de_genes);
  cfg.effect_min = j.value("effect_min", cfg.effect_min);
  cfg.effect_max = j.value("effect_max", cfg.effect_max);
  cfg.consistent_sign = j.value("consistent_sign", cfg.consistent_sign);
  cfg.wishart_df = j.value("wishart_df", cfg.wishart_df);
  cfg.correlated = j.value("correlated", cfg.correlated);
  cfg.fdr_level = j.value("fdr_level", cfg.fdr_level);
  cfg.seed = j.value("seed", cfg.seed);
  const int replicates = args.replicates_override > 0
                             ? args.replicates_override
                             : j.value("replicates", 20);
  const int reference_r = j.value("reference_r", 6);

  std::vector<rop::BenchMethod> methods;
  if (j.contains("methods")) {
    for (const auto& jm : j.at("methods")) methods.push_back(parse_bench_method(jm));
  } else {
    rop::BenchMethod m;
    m.spec.method = rop::MetaMethod::rop;
    m.spec.r = reference_r;
    m.label = "rop_r" + std::to_string(reference_r) + "_bh";
    methods.push_back(m);
  }

  if (args.out_dir.empty()) throw rop::validation_error("--out is required");
  std::filesystem::create_directories(args.out_dir);

  const auto report = rop::run_benchmark(cfg, methods, replicates, reference_r);
  rop::write_bench_report(args.out_dir + "/bench_report.tsv", report);
  rop::write_per_tg_power(args.out_dir + "/per_tg_power.tsv", report);

  nlohmann::json summary;
  summary["tool"] = "ropmeta";
  summary["version"] = rop::version_string;
  summary["command"] = "simulate";
  summary["config"] = j;
  summary["replicates"] = replicates;
  summary["reference_r"] = reference_r;
  nlohmann::json jm = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json e;
    e["label"] = m.label;
    e["fdr1_mean"] = m.fdr1_mean;
    e["fdr1_sd"] = m.fdr1_sd;
    e["fdr2_mean"] = m.fdr2_mean;
    e["fdr2_sd"] = m.fdr2_sd;
    e["detected_mean"] = m.detected_mean;
    e["power_by_tg"] = m.power_by_tg;
    jm.push_back(e);
  }
  summary["methods"] = jm;

  if (j.contains("r_stability")) {
    std::vector<int> rs = j.at("r_stability").get<std::vector<int>>();
    const auto stability = rop::r_stability(cfg, rs, replicates);
    nlohmann::json js;
    js["r_values"] = stability.r_values;
    js["overlap"] = stability.overlap;
    js["mean_detected"] = stability.mean_detected;
    summary["r_stability"] = js;
  }

  std::ofstream out(args.out_dir + "/summary.json", std::ios::binary);
  out << summary.dump(2) << "\n";
  for (const auto& m : report.methods)
    std::cout << m.label << ": fdr1 " << m.fdr1_mean << " (sd " << m.fdr1_sd
              << "), fdr2 " << m.fdr2_mean << ", detected " << m.detected_mean << "\n";
  std::cout << "outputs in " << args.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rOP-based genomic meta-analysis"};
  app.require_subcommand(1);

  CombineArgs combine_args;
  auto* combine = app.add_subcommand("combine", "combine per-study p-values per gene");
  combine->add_option("--pvalues", combine_args.cfg.pvalues_path,
                      "precomputed p-value matrix (gene x study TSV)");
  combine->add_option("--pvalues-right", combine_args.cfg.pvalues_right_path,
                      "right-tail matrix for one-sided pairs");
  combine->add_option("--expr", combine_args.cfg.expression_paths,
                      "expression TSV (repeatable)");
  combine->add_option("--labels", combine_args.cfg.label_paths,
                      "label TSV matching --expr (repeatable)");
  combine->add_option("--method", combine_args.method,
                      "rop|rop-one-sided|fisher|stouffer|minp|maxp|vote-count");
  combine->add_option("--r", combine_args.cfg.method.r, "rOP order r");
  combine->add_option("--select-r", combine_args.select, "counts|pathway|both");
  combine->add_option("--gene-sets", combine_args.cfg.gene_sets_path, "GMT file");
  combine->add_option("--route", combine_args.route, "bh|by|permutation");
  combine->add_option("--permutations", combine_args.cfg.permutations,
                      "label permutations B");
  combine->add_option("--select-r-permutations", combine_args.cfg.select_r_permutations,
                      "baseline shuffles for the count criterion");
  combine->add_option("--top-u", combine_args.cfg.top_u, "committee size U");
  combine->add_option("--fdr", combine_args.cfg.fdr, "FDR level");
  combine->add_option("--alpha-vc", combine_args.cfg.method.alpha_vc,
                      "vote counting threshold");
  combine->add_option("--pi0", combine_args.cfg.method.pi0, "vote counting pi0");
  combine->add_flag("--pi0-null", combine_args.cfg.method.vote_pi0_null,
                    "test the count against BIN(K, pi0)");
  combine->add_option("--seed", combine_args.cfg.seed, "random seed");
  combine->add_option("--out", combine_args.cfg.out_dir, "output directory")->required();

  SelectRArgs select_args;
  auto* select = app.add_subcommand("select-r", "data-driven selection of r");
  select->add_option("--pvalues", select_args.pvalues, "p-value matrix TSV");
  select->add_option("--expr", select_args.expr, "expression TSV (repeatable)");
  select->add_option("--labels", select_args.labels, "label TSV (repeatable)");
  select->add_option("--gene-sets", select_args.gene_sets, "GMT file");
  select->add_option("--b", select_args.b, "baseline shuffles");
  select->add_option("--top-u", select_args.top_u, "committee size U");
  select->add_option("--fdr", select_args.fdr, "FDR level");
  select->add_option("--seed", select_args.seed, "random seed");
  select->add_option("--out", select_args.out_dir, "output directory")->required();

  VoteCountArgs vote_args;
  auto* vote = app.add_subcommand("vote-count", "binomial vote counting");
  vote->add_option("--pvalues", vote_args.pvalues, "p-value matrix TSV")->required();
  vote->add_option("--alpha", vote_args.alpha, "per-study threshold");
  vote->add_option("--pi0", vote_args.pi0, "pi0 for the alternative null");
  vote->add_flag("--pi0-null", vote_args.pi0_null, "test against BIN(K, pi0)");
  vote->add_option("--fdr", vote_args.fdr, "FDR level");
  vote->add_option("--out", vote_args.out_dir, "output directory")->required();

  PowerArgs power_args;
  auto* power = app.add_subcommand("power", "rOP and vote-counting power");
  power->add_option("--k", power_args.k, "number of studies K");
  power->add_option("--r", power_args.r, "rOP order r");
  power->add_option("--r0", power_args.r0, "true number of DE studies");
  power->add_option("--alpha", power_args.alpha, "significance level");
  power->add_option("--beta-prime", power_args.beta_prime,
                    "per-study success probability");
  power->add_flag("--sweep-r", power_args.sweep_r, "tabulate r = 1..K");
  power->add_flag("--sweep-r0", power_args.sweep_r0, "tabulate r0 = 0..K");
  power->add_option("--success-probs", power_args.success_probs,
                    "comma-separated per-study success probabilities");
  power->add_option("--effect", power_args.effect, "effect size for the t-test helper");
  power->add_option("--n-per-group", power_args.n_per_group, "per-group sample size");
  power->add_option("--mc-draws", power_args.mc_draws, "Monte Carlo draws for beta'");
  power->add_option("--seed", power_args.seed, "random seed");
  power->add_flag("--vote", power_args.vote, "vote-counting power mode");
  power->add_option("--vote-null", power_args.vote_null,
                    "null per-study rate (alpha or pi0 framing)");
  power->add_option("--single-power", power_args.single_power,
                    "per-study power under the alternative");
  power->add_option("--level", power_args.level, "test level for the critical count");
  power->add_option("--k-list", power_args.k_list, "comma-separated K values");
  power->add_option("--out", power_args.out, "output TSV ('-' for stdout)");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "simulation benchmark");
  simulate->add_option("--config", sim_args.config_path, "JSON config")->required();
  simulate->add_option("--out", sim_args.out_dir, "output directory")->required();
  simulate->add_option("--replicates", sim_args.replicates_override,
                       "override the config's replicate count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (combine->parsed()) return cmd_combine(combine_args);
    if (select->parsed()) return cmd_select_r(select_args);
    if (vote->parsed()) return cmd_vote_count(vote_args);
    if (power->parsed()) return cmd_power(power_args);
    if (simulate->parsed()) return cmd_simulate(sim_args);
  } catch (const rop::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const rop::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 1;
}
