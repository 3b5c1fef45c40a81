#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rop/combine.hpp"
#include "rop/rng.hpp"

using Catch::Approx;

namespace {

// The four hypothetical genes across five studies and the published
// meta-analysis p-values (printed at 1-2 significant figures).
const std::vector<std::vector<double>> kGenes = {
    {0.1, 0.1, 0.1, 0.1, 0.1},
    {1e-20, 0.9, 0.9, 0.9, 0.9},
    {0.25, 0.25, 0.25, 0.25, 0.25},
    {0.15, 0.15, 0.15, 0.15, 0.9},
};

bool matches_printed(double computed, double printed) {
  if (printed == 0.0) return computed == 0.0;
  if (std::fabs(computed - printed) / printed <= 0.25) return true;
  // round `computed` to the printed number of significant figures
  const double mag = std::pow(10.0, std::floor(std::log10(printed)));
  double digits = printed / mag;
  int sig = 1;
  if (std::fabs(digits - std::round(digits)) > 1e-9) sig = 2;
  const double scale = std::pow(10.0, sig - 1) / mag;
  return std::round(computed * scale) == std::round(printed * scale);
}

}  // namespace

TEST_CASE("golden grid: the four hypothetical genes across five methods") {
  const std::vector<double> fisher_expect = {0.01, 1e-15, 0.18, 0.12};
  const std::vector<double> stouffer_expect = {0.002, 0.03, 0.07, 0.10};
  const std::vector<double> minp_expect = {0.41, 5e-20, 0.76, 0.56};
  const std::vector<double> maxp_expect = {1e-5, 0.59, 0.001, 0.59};
  const std::vector<double> rop4_expect = {5e-4, 0.92, 0.015, 0.002};
  for (std::size_t g = 0; g < kGenes.size(); ++g) {
    CAPTURE(g);
    CHECK(matches_printed(rop::combine_fisher(kGenes[g]).meta_p, fisher_expect[g]));
    CHECK(matches_printed(rop::combine_stouffer(kGenes[g]).meta_p, stouffer_expect[g]));
    CHECK(matches_printed(rop::combine_minp(kGenes[g]).meta_p, minp_expect[g]));
    CHECK(matches_printed(rop::combine_maxp(kGenes[g]).meta_p, maxp_expect[g]));
    CHECK(matches_printed(rop::combine_rop(kGenes[g], 4).meta_p, rop4_expect[g]));
  }
  // spot values at full precision
  CHECK(rop::combine_rop(kGenes[2], 4).meta_p == Approx(0.015625).epsilon(1e-10));
  CHECK(rop::combine_rop(kGenes[3], 4).meta_p == Approx(0.0022275).epsilon(1e-10));
  CHECK(rop::combine_rop(kGenes[1], 4).meta_p == Approx(0.91854).epsilon(1e-10));
  CHECK(rop::combine_fisher(kGenes[0]).meta_p == Approx(0.010651).epsilon(1e-4));
  CHECK(rop::combine_stouffer(kGenes[0]).meta_p ==
        Approx(0.0020808595993641083).epsilon(1e-9));
  CHECK(rop::combine_minp(kGenes[0]).meta_p == Approx(0.40951).epsilon(1e-5));
  CHECK(rop::combine_maxp(kGenes[0]).meta_p == Approx(1e-5).epsilon(1e-10));
}

TEST_CASE("extreme p-values stay finite through the transforms") {
  const std::vector<double> zeros = {0.0, 0.5, 0.5};
  CHECK(std::isfinite(rop::combine_fisher(zeros).meta_p));
  CHECK(std::isfinite(rop::combine_stouffer(zeros).meta_p));
  const std::vector<double> ones = {1.0, 1.0, 1.0};
  CHECK(std::isfinite(rop::combine_stouffer(ones).statistic));
  CHECK(rop::combine_minp(ones).meta_p == Approx(1.0));
  CHECK(rop::combine_maxp(ones).meta_p == Approx(1.0));
}

TEST_CASE("rop reduces to minP at r = 1 and maxP at r = K") {
  auto rng = rop::substream(2024, 1);
  for (int k : {3, 5, 10}) {
    for (int rep = 0; rep < 1000; ++rep) {
      std::vector<double> p(k);
      for (auto& v : p) v = rop::uniform01(rng);
      const auto lo = rop::combine_rop(p, 1);
      const auto minp = rop::combine_minp(p);
      CHECK(std::fabs(lo.statistic - minp.statistic) <= 1e-12);
      CHECK(std::fabs(lo.meta_p - minp.meta_p) <= 1e-12);
      const auto hi = rop::combine_rop(p, k);
      const auto maxp = rop::combine_maxp(p);
      CHECK(std::fabs(hi.statistic - maxp.statistic) <= 1e-12);
      CHECK(std::fabs(hi.meta_p - maxp.meta_p) <= 1e-12);
    }
  }
}

TEST_CASE("rop monotonicity: lowering one input never raises the statistic") {
  auto rng = rop::substream(2024, 2);
  for (int rep = 0; rep < 500; ++rep) {
    const int k = 3 + static_cast<int>(rop::uniform_below(rng, 8));
    std::vector<double> p(k);
    for (auto& v : p) v = rop::uniform01(rng);
    const int r = 1 + static_cast<int>(rop::uniform_below(rng, k));
    const auto base = rop::combine_rop(p, r);
    const int which = static_cast<int>(rop::uniform_below(rng, k));
    std::vector<double> lowered = p;
    lowered[which] *= rop::uniform01(rng);
    const auto after = rop::combine_rop(lowered, r);
    CHECK(after.statistic <= base.statistic + 1e-15);
    CHECK(after.meta_p <= base.meta_p + 1e-12);
  }
}

TEST_CASE("study order does not change statistics; the mask permutes") {
  auto rng = rop::substream(2024, 3);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 4 + static_cast<int>(rop::uniform_below(rng, 6));
    std::vector<double> p(k);
    for (auto& v : p) v = rop::uniform01(rng);
    std::vector<std::size_t> perm(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    rop::shuffle(perm, rng);
    std::vector<double> shuffled(k);
    for (int i = 0; i < k; ++i) shuffled[i] = p[perm[i]];
    const int r = 1 + static_cast<int>(rop::uniform_below(rng, k));

    CHECK(rop::combine_rop(shuffled, r).meta_p ==
          Approx(rop::combine_rop(p, r).meta_p).margin(1e-15));
    CHECK(rop::combine_fisher(shuffled).meta_p ==
          Approx(rop::combine_fisher(p).meta_p).margin(1e-15));
    CHECK(rop::combine_stouffer(shuffled).meta_p ==
          Approx(rop::combine_stouffer(p).meta_p).margin(1e-12));

    // mask of the permuted vector is the permuted mask unless ties span the cut
    std::vector<double> sorted(p);
    std::sort(sorted.begin(), sorted.end());
    const bool tie_at_cut = r < k && sorted[r - 1] == sorted[r];
    if (!tie_at_cut) {
      const auto mask = rop::effective_mask(p, r);
      const auto mask_shuffled = rop::effective_mask(shuffled, r);
      for (int i = 0; i < k; ++i) CHECK(mask_shuffled[i] == mask[perm[i]]);
    }
  }
}

TEST_CASE("effective mask worked example") {
  const std::vector<double> p = {0.13, 0.11, 0.03, 0.001, 0.4, 0.7, 0.15};
  const auto combined = rop::combine_rop(p, 5);
  CHECK(combined.statistic == Approx(0.15).margin(1e-15));
  const auto mask = rop::effective_mask(p, 5);
  const std::vector<std::uint8_t> expect = {1, 1, 1, 1, 0, 0, 1};
  CHECK(mask == expect);
}

TEST_CASE("effective mask edge cases and tie rule") {
  const std::vector<double> p = {0.2, 0.2, 0.2, 0.9};
  const auto mask = rop::effective_mask(p, 2);
  const std::vector<std::uint8_t> expect = {1, 1, 0, 0};
  CHECK(mask == expect);
  const auto all = rop::effective_mask(p, 4);
  CHECK(std::count(all.begin(), all.end(), 1) == 4);
  CHECK_THROWS_AS(rop::effective_mask(p, 0), rop::validation_error);
  CHECK_THROWS_AS(rop::effective_mask(p, 5), rop::validation_error);
}

TEST_CASE("one-sided rop: concordant, discordant, and degenerate cases") {
  // all studies up-regulated
  std::vector<double> left = {0.05, 0.05, 0.05, 0.05, 0.05};
  std::vector<double> right(5);
  for (int i = 0; i < 5; ++i) right[i] = 1.0 - left[i];
  auto res = rop::combine_rop_one_sided(left, right, 4);
  CHECK(res.statistic == Approx(0.05).margin(1e-15));
  // closed form: 2 * (5 x^4 - 4 x^5) at x = 0.05
  CHECK(res.meta_p == Approx(6.0e-5).epsilon(1e-9));

  // discordant directions: both tail statistics land at 0.95
  left = {0.05, 0.05, 0.95, 0.95, 0.5};
  for (int i = 0; i < 5; ++i) right[i] = 1.0 - left[i];
  res = rop::combine_rop_one_sided(left, right, 4);
  CHECK(res.statistic == Approx(0.95).margin(1e-12));
  CHECK(res.meta_p >= 2.0 * rop::beta_cdf(0.5, 4, 2));
  CHECK(res.meta_p > 0.3);

  // K = 1, r = 1 reduces to doubling the smaller tail
  const std::vector<double> l1 = {0.03};
  const std::vector<double> r1 = {0.97};
  res = rop::combine_rop_one_sided(l1, r1, 1);
  CHECK(res.meta_p == Approx(0.06).margin(1e-12));

  const std::vector<double> short_right = {0.1, 0.2};
  CHECK_THROWS_AS(rop::combine_rop_one_sided(left, short_right, 1),
                  rop::validation_error);
  const std::vector<double> bad = {0.5, 0.5, 0.5, 0.5, 0.7};
  CHECK_THROWS_AS(rop::combine_rop_one_sided(left, bad, 2), rop::validation_error);
}

TEST_CASE("vote counting examples") {
  const std::vector<double> p = {0.01, 0.02, 0.5, 0.6, 0.7};
  const auto v = rop::vote_count(p, 0.05);
  CHECK(v.count == 2);
  CHECK(v.meta_p == Approx(0.022592499999999995).epsilon(1e-10));

  const std::vector<double> none = {0.5, 0.6, 0.7, 0.8, 0.9};
  CHECK(rop::vote_count(none, 0.05).count == 0);
  CHECK(rop::vote_count(none, 0.05).meta_p == Approx(1.0));

  const std::vector<double> all = {0.01, 0.01, 0.01, 0.01, 0.01};
  CHECK(rop::vote_count(all, 0.05).meta_p == Approx(3.125e-7).epsilon(1e-10));

  CHECK(v.meta_p_pi0 == Approx(rop::binom_tail_geq(5, 0.5, 2)).margin(1e-15));
  CHECK_THROWS_AS(rop::vote_count(p, 0.0), rop::validation_error);
}

TEST_CASE("meta p-values are uniform under the null") {
  auto rng = rop::substream(909, 12);
  const std::size_t g_count = 20000;
  const int k = 5;
  std::vector<std::vector<double>> meta(5);
  std::vector<double> one_sided;
  std::vector<double> p(k), right(k);
  for (std::size_t g = 0; g < g_count; ++g) {
    for (auto& v : p) v = rop::uniform01(rng);
    for (int i = 0; i < k; ++i) right[i] = 1.0 - p[i];
    meta[0].push_back(rop::combine_rop(p, 3).meta_p);
    meta[1].push_back(rop::combine_fisher(p).meta_p);
    meta[2].push_back(rop::combine_stouffer(p).meta_p);
    meta[3].push_back(rop::combine_minp(p).meta_p);
    meta[4].push_back(rop::combine_maxp(p).meta_p);
    one_sided.push_back(rop::combine_rop_one_sided(p, right, 4).meta_p);
  }
  for (auto& column : meta) {
    std::sort(column.begin(), column.end());
    double dev = 0.0;
    for (std::size_t i = 0; i < column.size(); ++i) {
      const double ecdf = static_cast<double>(i + 1) / g_count;
      dev = std::max(dev, std::fabs(ecdf - column[i]));
    }
    CHECK(dev < 0.025);
  }
  // the doubled one-sided tail is exactly uniform below 2*F(1/2) and
  // conservative (never anti-conservative) above
  std::sort(one_sided.begin(), one_sided.end());
  const double exact_limit = 2.0 * rop::beta_cdf(0.5, 4, 2);
  double dev_exact = 0.0, anti = 0.0;
  for (std::size_t i = 0; i < one_sided.size(); ++i) {
    const double ecdf = static_cast<double>(i + 1) / g_count;
    if (one_sided[i] < exact_limit)
      dev_exact = std::max(dev_exact, std::fabs(ecdf - one_sided[i]));
    anti = std::max(anti, ecdf - one_sided[i]);
  }
  CHECK(dev_exact < 0.025);
  CHECK(anti < 0.025);
}

TEST_CASE("combine_matrix validates and attaches gene ids to row errors") {
  rop::PValueMatrix m;
  m.genes = {"g1", "g2"};
  m.studies = {"s1", "s2", "s3"};
  m.values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  rop::MetaMethodSpec spec;
  spec.method = rop::MetaMethod::rop;
  spec.r = 2;
  const auto result = rop::combine_matrix(m, spec);
  CHECK(result.genes.size() == 2);
  CHECK(result.statistic[0] == Approx(0.2));
  CHECK(result.meta_p[0] == Approx(rop::beta_cdf(0.2, 2, 2)));
  CHECK(std::isnan(result.q[0]));
  const auto mask = result.mask_row(1);
  CHECK(static_cast<int>(mask[0]) + mask[1] + mask[2] == 2);

  spec.r = 9;
  CHECK_THROWS_AS(rop::combine_matrix(m, spec), rop::validation_error);
  m.values[2] = 1.5;
  spec.r = 2;
  CHECK_THROWS_AS(rop::combine_matrix(m, spec), rop::validation_error);

  rop::PValueMatrix tiny;
  tiny.genes = {"g"};
  tiny.studies = {"s"};
  tiny.values = {0.2};
  CHECK_THROWS_AS(rop::combine_matrix(tiny, spec), rop::validation_error);
}
