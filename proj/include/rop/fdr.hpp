#pragma once

// Multiple-testing control: Benjamini-Hochberg and Benjamini-Yekutieli
// step-up adjustments producing monotone q-values.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "rop/error.hpp"

namespace rop {

namespace detail {

inline std::vector<double> step_up_adjust(std::span<const double> pvals, double inflation) {
  const std::size_t g = pvals.size();
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0))
      throw validation_error("q-value adjustment: p-values must lie in [0, 1]");
  std::vector<std::size_t> order(g);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
  std::vector<double> q(g);
  double running = 1.0;
  for (std::size_t i = g; i-- > 0;) {
    const double raw =
        pvals[order[i]] * inflation * static_cast<double>(g) / static_cast<double>(i + 1);
    running = std::min(running, std::min(raw, 1.0));
    q[order[i]] = running;
  }
  return q;
}

}  // namespace detail

/// Benjamini-Hochberg q-values (step-up, monotone, clipped to 1).
inline std::vector<double> bh_adjust(std::span<const double> pvals) {
  return detail::step_up_adjust(pvals, 1.0);
}

/// Benjamini-Yekutieli: BH inflated by the harmonic sum c(G) = sum 1/i.
inline std::vector<double> by_adjust(std::span<const double> pvals) {
  double c = 0.0;
  for (std::size_t i = 1; i <= pvals.size(); ++i) c += 1.0 / static_cast<double>(i);
  return detail::step_up_adjust(pvals, c);
}

inline std::size_t count_rejections(std::span<const double> q, double level) {
  std::size_t n = 0;
  for (double v : q)
    if (v <= level) ++n;
  return n;
}

}  // namespace rop
