#pragma once

// Named gene sets (pathways) and the GMT interchange format.

#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rop/error.hpp"

namespace rop {

struct GeneSet {
  std::string name;
  std::string description;
  std::vector<std::string> genes;
};

struct GeneSetCollection {
  std::vector<GeneSet> sets;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Parse a GMT file: `name <TAB> description <TAB> gene1 <TAB> gene2 ...`.
inline GeneSetCollection load_gmt(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path, 0, "cannot open file");
  GeneSetCollection coll;
  std::string line;
  std::size_t lineno = 0;
  std::unordered_set<std::string> names;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() < 3)
      throw parse_error(path, lineno,
                        "expected `name<TAB>description<TAB>gene...`, got " +
                            std::to_string(fields.size()) + " field(s)");
    if (fields[0].empty()) throw parse_error(path, lineno, "empty set name");
    if (!names.insert(fields[0]).second)
      throw parse_error(path, lineno, "duplicate set name '" + fields[0] + "'");
    GeneSet set;
    set.name = std::move(fields[0]);
    set.description = std::move(fields[1]);
    for (std::size_t i = 2; i < fields.size(); ++i)
      if (!fields[i].empty()) set.genes.push_back(std::move(fields[i]));
    if (set.genes.empty()) throw parse_error(path, lineno, "set has no genes");
    coll.sets.push_back(std::move(set));
  }
  return coll;
}

/// Gene sets restricted to an analysis universe, as index lists. Sets whose
/// post-intersection size falls outside [min_size, max_size] are dropped.
struct FilteredGeneSets {
  std::vector<std::string> names;
  std::vector<std::vector<std::uint32_t>> members;  // indices into the universe
  std::vector<std::size_t> original_sizes;
  std::size_t universe_size = 0;
};

inline FilteredGeneSets filter_gene_sets(const GeneSetCollection& coll,
                                         const std::vector<std::string>& universe,
                                         std::size_t min_size = 5,
                                         std::size_t max_size = 500) {
  std::unordered_map<std::string, std::uint32_t> index;
  index.reserve(universe.size());
  for (std::uint32_t i = 0; i < universe.size(); ++i) index.emplace(universe[i], i);
  FilteredGeneSets out;
  out.universe_size = universe.size();
  for (const auto& set : coll.sets) {
    std::vector<std::uint32_t> members;
    std::unordered_set<std::uint32_t> dedup;
    for (const auto& g : set.genes) {
      const auto it = index.find(g);
      if (it != index.end() && dedup.insert(it->second).second)
        members.push_back(it->second);
    }
    if (members.size() < min_size || members.size() > max_size) continue;
    out.names.push_back(set.name);
    out.members.push_back(std::move(members));
    out.original_sizes.push_back(set.genes.size());
  }
  return out;
}

}  // namespace rop
