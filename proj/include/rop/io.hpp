#pragma once

// TSV ingestion and emission. Readers tolerate LF or CRLF and report
// file/line/column on malformed input; writers emit LF and serialize doubles
// at 17 significant digits so a written table re-reads to identical values.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rop/combine.hpp"
#include "rop/error.hpp"
#include "rop/gene_sets.hpp"
#include "rop/power.hpp"
#include "rop/select_r.hpp"
#include "rop/simulate.hpp"
#include "rop/study.hpp"

namespace rop {

namespace detail {

inline double parse_double(const std::string& field, const std::string& path,
                           std::size_t line, std::size_t column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw parse_error(path, line, column, "non-numeric value '" + field + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct TsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // split fields, CR stripped
  std::vector<std::size_t> line_numbers;
};

inline TsvTable read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path, 0, "cannot open file");
  TsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size())
        throw parse_error(path, lineno,
                          "expected " + std::to_string(t.header.size()) +
                              " fields, got " + std::to_string(fields.size()));
      t.rows.push_back(std::move(fields));
      t.line_numbers.push_back(lineno);
    }
  }
  if (t.header.empty()) throw parse_error(path, 0, "empty file");
  return t;
}

}  // namespace detail

/// Expression TSV: header `gene <TAB> sample ids...`, one row per gene.
/// Labels TSV: lines `sample_id <TAB> 0|1`. Duplicate genes, non-numeric
/// cells, and label/sample mismatches are rejected with coordinates.
inline Study load_study(const std::string& expression_path, const std::string& labels_path,
                        const std::string& id = "") {
  const auto table = detail::read_tsv(expression_path);
  if (table.header.size() < 2)
    throw parse_error(expression_path, 1, "expected gene column plus sample columns");
  Study s;
  s.id = id.empty() ? std::filesystem::path(expression_path).stem().string() : id;
  s.samples.assign(table.header.begin() + 1, table.header.end());
  s.genes.reserve(table.rows.size());
  s.expression.reserve(table.rows.size() * s.samples.size());
  std::unordered_map<std::string, std::size_t> first_line;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto [it, fresh] = first_line.emplace(row[0], table.line_numbers[r]);
    if (!fresh)
      throw parse_error(expression_path, table.line_numbers[r],
                        "duplicate gene id '" + row[0] + "' (first seen at line " +
                            std::to_string(it->second) + ")");
    s.genes.push_back(row[0]);
    for (std::size_t c = 1; c < row.size(); ++c)
      s.expression.push_back(
          detail::parse_double(row[c], expression_path, table.line_numbers[r], c + 1));
  }

  std::ifstream in(labels_path);
  if (!in) throw parse_error(labels_path, 0, "cannot open file");
  std::unordered_map<std::string, std::uint8_t> label_of;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2)
      throw parse_error(labels_path, lineno, "expected `sample_id<TAB>label`");
    if (fields[1] != "0" && fields[1] != "1")
      throw parse_error(labels_path, lineno,
                        "label must be 0 or 1, got '" + fields[1] + "'");
    if (!label_of.emplace(fields[0], fields[1] == "1" ? 1 : 0).second)
      throw parse_error(labels_path, lineno, "duplicate sample id '" + fields[0] + "'");
  }
  std::string missing;
  for (const auto& sample : s.samples) {
    const auto it = label_of.find(sample);
    if (it == label_of.end()) {
      if (!missing.empty()) missing += ", ";
      missing += "'" + sample + "'";
      continue;
    }
    s.labels.push_back(it->second);
  }
  if (!missing.empty())
    throw validation_error("label file " + labels_path +
                           " is missing sample(s): " + missing);
  s.validate();
  return s;
}

/// Precomputed p-value matrix: header `gene <TAB> study ids...`. Supplying a
/// matching right-tail matrix switches the result to one_sided_pair mode.
inline PValueMatrix load_pvalue_matrix(const std::string& path,
                                       const std::string& right_path = "") {
  const auto table = detail::read_tsv(path);
  if (table.header.size() < 3)
    throw parse_error(path, 1, "expected gene column plus at least two study columns");
  PValueMatrix m;
  m.studies.assign(table.header.begin() + 1, table.header.end());
  std::unordered_map<std::string, std::size_t> first_line;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto [it, fresh] = first_line.emplace(row[0], table.line_numbers[r]);
    if (!fresh)
      throw parse_error(path, table.line_numbers[r],
                        "duplicate gene id '" + row[0] + "' (first seen at line " +
                            std::to_string(it->second) + ")");
    m.genes.push_back(row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      const double v =
          detail::parse_double(row[c], path, table.line_numbers[r], c + 1);
      if (!(v >= 0.0 && v <= 1.0))
        throw parse_error(path, table.line_numbers[r], c + 1,
                          "p-value " + row[c] + " outside [0, 1]");
      m.values.push_back(v);
    }
  }
  if (!right_path.empty()) {
    const auto right = detail::read_tsv(right_path);
    if (right.header != table.header)
      throw parse_error(right_path, 1, "header differs from the left-tail matrix");
    if (right.rows.size() != table.rows.size())
      throw parse_error(right_path, 0, "row count differs from the left-tail matrix");
    m.sidedness = Sidedness::one_sided_pair;
    for (std::size_t r = 0; r < right.rows.size(); ++r) {
      const auto& row = right.rows[r];
      if (row[0] != m.genes[r])
        throw parse_error(right_path, right.line_numbers[r],
                          "gene order differs from the left-tail matrix");
      for (std::size_t c = 1; c < row.size(); ++c)
        m.values_right.push_back(
            detail::parse_double(row[c], right_path, right.line_numbers[r], c + 1));
    }
  }
  m.validate();
  return m;
}

/// FNV-1a digest of a file's bytes, for run manifests.
inline std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error(path, 0, "cannot open file");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return h;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF on every platform
  if (!out) throw validation_error("cannot write to " + path);
  return out;
}

}  // namespace detail

/// Ranked gene table: gene, statistic, meta_p, q, effective mask as a 0/1
/// string ("-" for methods without one). Rows sorted by meta_p ascending,
/// ties in input gene order.
inline void write_gene_table(const std::string& path, const MetaResult& result) {
  auto out = detail::open_out(path);
  out << "gene\tstatistic\tmeta_p\tq\teffective_mask\n";
  std::vector<std::size_t> order(result.genes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.meta_p[a] < result.meta_p[b];
  });
  const bool has_mask = !result.effective_masks.empty();
  for (const auto g : order) {
    out << result.genes[g] << '\t' << detail::format_double(result.statistic[g])
        << '\t' << detail::format_double(result.meta_p[g]) << '\t'
        << detail::format_double(result.q[g]) << '\t';
    if (has_mask) {
      const auto mask = result.mask_row(g);
      for (const auto bit : mask) out << (bit ? '1' : '0');
    } else {
      out << '-';
    }
    out << '\n';
  }
}

inline void write_r_count_diagnostics(const std::string& path, const RDiagnostics& diag) {
  auto out = detail::open_out(path);
  out << "r\tn_detected\tbaseline_mean\tbaseline_sd\tadjusted\n";
  for (const auto& row : diag.rows)
    out << row.r << '\t' << detail::format_double(row.n_detected) << '\t'
        << detail::format_double(row.baseline_mean) << '\t'
        << detail::format_double(row.baseline_sd) << '\t'
        << detail::format_double(row.adjusted) << '\n';
}

inline void write_pathway_diagnostics(const std::string& path,
                                      const DiagnosticsBundle& bundle) {
  auto out = detail::open_out(path);
  out << "r\tneglog10p_min\tneglog10p_q1\tneglog10p_median\tneglog10p_q3\t"
         "neglog10p_max\tsequential_p\n";
  for (const auto& row : bundle.pathway)
    out << row.r << '\t' << detail::format_double(row.min) << '\t'
        << detail::format_double(row.q1) << '\t' << detail::format_double(row.median)
        << '\t' << detail::format_double(row.q3) << '\t'
        << detail::format_double(row.max) << '\t' << detail::format_double(row.seq_p)
        << '\n';
}

inline void write_power_curve(std::ostream& out, const PowerCurve& curve) {
  out << curve.sweep << "\tpower\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i)
    out << curve.x[i] << '\t' << detail::format_double(curve.power[i]) << '\n';
}

inline void write_bench_report(const std::string& path, const BenchReport& report) {
  auto out = detail::open_out(path);
  out << "method\tfdr1_mean\tfdr1_sd\tfdr2_mean\tfdr2_sd\tdetected_mean\n";
  for (const auto& m : report.methods)
    out << m.label << '\t' << detail::format_double(m.fdr1_mean) << '\t'
        << detail::format_double(m.fdr1_sd) << '\t'
        << detail::format_double(m.fdr2_mean) << '\t'
        << detail::format_double(m.fdr2_sd) << '\t'
        << detail::format_double(m.detected_mean) << '\n';
}

inline void write_per_tg_power(const std::string& path, const BenchReport& report) {
  auto out = detail::open_out(path);
  out << "t_g";
  for (const auto& m : report.methods) out << '\t' << m.label;
  out << '\n';
  for (const auto& row : per_tg_power(report)) {
    out << row.t_g;
    for (const double p : row.power) out << '\t' << detail::format_double(p);
    out << '\n';
  }
}

}  // namespace rop
