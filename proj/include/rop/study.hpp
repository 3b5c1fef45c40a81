#pragma once

// Per-study expression data with binary class labels, gene-universe
// intersection across studies, and the per-study DE testing step.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rop/combine.hpp"
#include "rop/error.hpp"
#include "rop/stat_tests.hpp"

namespace rop {

struct Study {
  std::string id;
  std::vector<std::string> genes;
  std::vector<std::string> samples;
  std::vector<double> expression;     // G x N, row-major
  std::vector<std::uint8_t> labels;   // one 0/1 label per sample

  std::size_t n_genes() const { return genes.size(); }
  std::size_t n_samples() const { return samples.size(); }
  std::span<const double> gene_row(std::size_t g) const {
    return {expression.data() + g * n_samples(), n_samples()};
  }

  void validate() const {
    if (genes.empty()) throw validation_error("study '" + id + "': no genes");
    if (samples.empty()) throw validation_error("study '" + id + "': no samples");
    if (expression.size() != n_genes() * n_samples())
      throw validation_error("study '" + id + "': expression shape mismatch");
    if (labels.size() != n_samples())
      throw validation_error("study '" + id + "': label count " +
                             std::to_string(labels.size()) + " != sample count " +
                             std::to_string(n_samples()));
    std::size_t ones = 0;
    for (auto l : labels) {
      if (l > 1) throw validation_error("study '" + id + "': labels must be 0 or 1");
      ones += l;
    }
    if (ones == 0 || ones == labels.size())
      throw validation_error("study '" + id + "': both classes must be present");
  }

  std::size_t class_count(std::uint8_t cls) const {
    std::size_t n = 0;
    for (auto l : labels)
      if (l == cls) ++n;
    return n;
  }
};

/// Studies sharing one ordered gene universe (the intersection, in the order
/// of the first study).
struct StudySet {
  std::vector<Study> studies;
  std::vector<std::string> genes;
  std::size_t dropped_genes = 0;  // union minus intersection, logged by callers

  std::size_t n_studies() const { return studies.size(); }
  std::size_t n_genes() const { return genes.size(); }
};

/// Restrict all studies to the common gene universe. Output gene order is
/// the first study's order; genes missing anywhere are dropped and counted.
inline StudySet intersect_studies(std::vector<Study> studies) {
  if (studies.empty()) throw validation_error("no studies to intersect");
  for (const auto& s : studies) s.validate();

  std::unordered_map<std::string, std::size_t> seen;  // gene -> #studies containing it
  std::unordered_map<std::string, std::size_t> union_genes;
  for (const auto& s : studies) {
    std::unordered_map<std::string, bool> in_study;
    for (const auto& g : s.genes) {
      if (in_study.count(g))
        throw validation_error("study '" + s.id + "': duplicate gene id '" + g + "'");
      in_study.emplace(g, true);
      ++seen[g];
      union_genes.emplace(g, union_genes.size());
    }
  }
  StudySet out;
  for (const auto& g : studies.front().genes)
    if (seen.at(g) == studies.size()) out.genes.push_back(g);
  if (out.genes.empty())
    throw validation_error("gene universes do not overlap across studies");
  out.dropped_genes = union_genes.size() - out.genes.size();

  for (auto& s : studies) {
    std::unordered_map<std::string, std::size_t> row_of;
    row_of.reserve(s.genes.size());
    for (std::size_t i = 0; i < s.genes.size(); ++i) row_of.emplace(s.genes[i], i);
    Study reduced;
    reduced.id = s.id;
    reduced.samples = s.samples;
    reduced.labels = s.labels;
    reduced.genes = out.genes;
    reduced.expression.resize(out.genes.size() * s.n_samples());
    for (std::size_t g = 0; g < out.genes.size(); ++g) {
      const auto src = s.gene_row(row_of.at(out.genes[g]));
      std::copy(src.begin(), src.end(),
                reduced.expression.begin() + g * s.n_samples());
    }
    out.studies.push_back(std::move(reduced));
  }
  return out;
}

namespace detail {

// Gather one gene's values into class-0 / class-1 buffers given a label view.
inline void split_by_label(std::span<const double> row,
                           std::span<const std::uint8_t> labels,
                           std::vector<double>& class0, std::vector<double>& class1) {
  class0.clear();
  class1.clear();
  for (std::size_t i = 0; i < row.size(); ++i)
    (labels[i] ? class1 : class0).push_back(row[i]);
}

}  // namespace detail

/// Welch t-test per gene and study. Class 1 is treated as the case group, so
/// the right tail carries evidence of up-regulation in cases. In
/// one_sided_pair mode both tails are filled and sum to 1 exactly.
inline PValueMatrix de_test_all(const StudySet& set, Sidedness sides) {
  if (set.studies.empty()) throw validation_error("de_test_all: no studies");
  const std::size_t g_count = set.n_genes();
  const std::size_t k = set.n_studies();
  PValueMatrix m;
  m.genes = set.genes;
  m.sidedness = sides;
  m.values.resize(g_count * k);
  if (sides == Sidedness::one_sided_pair) m.values_right.resize(g_count * k);

  std::vector<double> cases, controls;
  for (std::size_t s = 0; s < k; ++s) {
    const Study& study = set.studies[s];
    m.studies.push_back(study.id);
    if (study.class_count(0) < 2 || study.class_count(1) < 2)
      throw validation_error("study '" + study.id +
                             "': each class needs at least 2 samples");
    for (std::size_t g = 0; g < g_count; ++g) {
      detail::split_by_label(study.gene_row(g), study.labels, controls, cases);
      try {
        const auto t = welch_t_test(cases, controls, Tail::two_sided);
        if (sides == Sidedness::two_sided) {
          m.values[g * k + s] = t.p;
        } else {
          m.values[g * k + s] = t.p_left;
          m.values_right[g * k + s] = t.p_right;
        }
      } catch (const std::exception& e) {
        throw validation_error("study '" + study.id + "', gene '" + set.genes[g] +
                               "': " + e.what());
      }
    }
  }
  return m;
}

}  // namespace rop
