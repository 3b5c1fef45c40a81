#pragma once

// Small dense symmetric-matrix helpers and the samplers needed for the
// correlated-gene simulation: Wishart (Bartlett construction), inverse
// Wishart via inversion of a Wishart draw on the inverted scale, and
// multivariate normal draws through the Cholesky factor.

#include <cmath>
#include <cstddef>
#include <vector>

#include "rop/error.hpp"
#include "rop/rng.hpp"

namespace rop {

/// Row-major d x d matrix.
struct SquareMatrix {
  std::size_t dim = 0;
  std::vector<double> a;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t d) : dim(d), a(d * d, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return a[i * dim + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * dim + j]; }
};

/// Lower Cholesky factor L with A = L L^T.
inline SquareMatrix cholesky_lower(const SquareMatrix& m) {
  const std::size_t d = m.dim;
  SquareMatrix l(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m.at(i, j);
      for (std::size_t t = 0; t < j; ++t) s -= l.at(i, t) * l.at(j, t);
      if (i == j) {
        if (s <= 0.0) throw compute_error("cholesky: matrix not positive definite");
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }
  return l;
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
inline SquareMatrix invert_spd(const SquareMatrix& m) {
  const std::size_t d = m.dim;
  const SquareMatrix l = cholesky_lower(m);
  // forward-substitute columns of the identity: L X = I, then L^T A^-1 = X
  SquareMatrix inv(d);
  std::vector<double> col(d);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = (i == c) ? 1.0 : 0.0;
      for (std::size_t t = 0; t < i; ++t) s -= l.at(i, t) * col[t];
      col[i] = s / l.at(i, i);
    }
    for (std::size_t i = d; i-- > 0;) {
      double s = col[i];
      for (std::size_t t = i + 1; t < d; ++t) s -= l.at(t, i) * inv.at(t, c);
      inv.at(i, c) = s / l.at(i, i);
    }
  }
  // symmetrize against rounding
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double v = 0.5 * (inv.at(i, j) + inv.at(j, i));
      inv.at(i, j) = v;
      inv.at(j, i) = v;
    }
  return inv;
}

/// Wishart draw W(scale, df) by the Bartlett construction; `scale_chol` is
/// the lower Cholesky factor of the scale matrix. Requires df >= dim.
inline SquareMatrix wishart_sample(const SquareMatrix& scale_chol, int df,
                                   std::mt19937_64& rng) {
  const std::size_t d = scale_chol.dim;
  if (df < static_cast<int>(d))
    throw validation_error("wishart_sample: df must be at least the dimension");
  SquareMatrix bart(d);
  for (std::size_t i = 0; i < d; ++i) {
    bart.at(i, i) = std::sqrt(chisq_draw(rng, df - static_cast<int>(i)));
    for (std::size_t j = 0; j < i; ++j) bart.at(i, j) = normal01(rng);
  }
  // F = L * A (both lower triangular), W = F F^T
  SquareMatrix f(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t t = j; t <= i; ++t) s += scale_chol.at(i, t) * bart.at(t, j);
      f.at(i, j) = s;
    }
  SquareMatrix w(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t <= j; ++t) s += f.at(i, t) * f.at(j, t);
      w.at(i, j) = s;
      w.at(j, i) = s;
    }
  return w;
}

/// Inverse-Wishart draw W^-1(psi, df): sample X ~ W(psi^-1, df), return X^-1.
inline SquareMatrix inverse_wishart_sample(const SquareMatrix& psi, int df,
                                           std::mt19937_64& rng) {
  if (df < static_cast<int>(psi.dim))
    throw validation_error("inverse_wishart_sample: df must be at least the dimension");
  const SquareMatrix psi_inv = invert_spd(psi);
  const SquareMatrix chol = cholesky_lower(psi_inv);
  const SquareMatrix w = wishart_sample(chol, df, rng);
  return invert_spd(w);
}

/// Rescale a covariance matrix to unit diagonal (a correlation matrix).
inline SquareMatrix standardize_to_correlation(const SquareMatrix& cov) {
  const std::size_t d = cov.dim;
  std::vector<double> inv_sd(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double v = cov.at(i, i);
    if (!(v > 0.0))
      throw compute_error("standardize_to_correlation: nonpositive diagonal");
    inv_sd[i] = 1.0 / std::sqrt(v);
  }
  SquareMatrix corr(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      corr.at(i, j) = cov.at(i, j) * inv_sd[i] * inv_sd[j];
  return corr;
}

/// One MVN(0, L L^T) draw through the lower Cholesky factor L.
inline void mvn_sample(const SquareMatrix& chol, std::mt19937_64& rng,
                       std::vector<double>& out) {
  const std::size_t d = chol.dim;
  std::vector<double> z(d);
  for (auto& v : z) v = normal01(rng);
  out.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += chol.at(i, j) * z[j];
    out[i] = s;
  }
}

}  // namespace rop
