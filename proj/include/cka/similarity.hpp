#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cka/errors.hpp"
#include "cka/linalg.hpp"

namespace cka {

/// Options shared by every similarity routine. `center` subtracts column
/// means from both inputs before any Gram computation; `eps` guards the
/// denominators.
struct CkaConfig {
  bool center = true;
  double eps = 1e-30;
};

namespace detail {

inline void require_cka_inputs(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("cka: row counts differ, " + std::to_string(x.rows()) +
                         " vs " + std::to_string(y.rows()));
  }
  if (x.rows() < 2) {
    throw DimensionError("cka: need at least 2 rows, got " +
                         std::to_string(x.rows()));
  }
}

inline Matrix prepare(const Matrix& x, const CkaConfig& cfg) {
  return cfg.center ? center_columns(x) : x;
}

inline double sq_frobenius(const Matrix& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return s;
}

}  // namespace detail

/// Linear-kernel alignment similarity
///   S(X, Y) = ‖YᵀX‖²_F / (‖XᵀX‖_F ‖YᵀY‖_F),
/// computed entirely in feature space (P×P' cross products). Symmetric in
/// its arguments, valued in [0, 1], invariant to orthogonal transforms and
/// isotropic scaling of either input. Row counts must match; column counts
/// may differ.
inline double cka(const Matrix& x, const Matrix& y, const CkaConfig& cfg = {}) {
  detail::require_cka_inputs(x, y);
  const Matrix xc = detail::prepare(x, cfg);
  const Matrix yc = detail::prepare(y, cfg);
  const double numerator = detail::sq_frobenius(matmul(transpose(yc), xc));
  const double nx = frobenius_norm(matmul(transpose(xc), xc));
  const double ny = frobenius_norm(matmul(transpose(yc), yc));
  if (nx <= cfg.eps || ny <= cfg.eps) {
    throw DegenerateInputError("cka: gram norm below eps guard");
  }
  return numerator / (nx * ny);
}

/// The same similarity computed along the other algebraic route: the cosine
/// of the vectorized N×N Gram matrices. Agrees with cka() to ~1e-12 on well
/// conditioned inputs; keeping both routes makes the identity checkable.
inline double cka_via_gram_cosine(const Matrix& x, const Matrix& y,
                                  const CkaConfig& cfg = {}) {
  detail::require_cka_inputs(x, y);
  const Matrix gx = gram(detail::prepare(x, cfg));
  const Matrix gy = gram(detail::prepare(y, cfg));
  if (frobenius_norm(gx) <= cfg.eps || frobenius_norm(gy) <= cfg.eps) {
    throw DegenerateInputError("cka: gram norm below eps guard");
  }
  return cosine(vec(gx), vec(gy));
}

/// Alignment decomposed over normalized sample rows x̃ᵢ = xᵢ/√‖XXᵀ‖_F.
///
/// `pairwise_term` is the exact sum Σᵢⱼ(⟨x̃ᵢ,x̃ⱼ⟩ − ⟨ỹᵢ,ỹⱼ⟩)², i.e. the
/// squared distance between the unit-Frobenius Gram matrices. `cka` is the
/// decomposition value 2·S(X,Y), computed through the feature-space route so
/// that cka = 2 − pairwise_term is a checkable identity between two
/// independent computations (the normalized Grams are unit vectors, so
/// ‖G̃x − G̃y‖² = 2 − 2⟨G̃x,G̃y⟩). `jensen_bound` replaces the summed
/// squares by the squared sum over N² ordered pairs and always dominates:
///   2 − pairwise_term  ≤  2 − (Σᵢⱼ⟨x̃ᵢ,x̃ⱼ⟩ − Σᵢⱼ⟨ỹᵢ,ỹⱼ⟩)²/N².
/// Everything is an exact sum, never a sampled mean, so the inequality is
/// deterministic.
struct MmdDecomposition {
  double cka = 0.0;
  double pairwise_term = 0.0;
  double jensen_bound = 0.0;
};

inline MmdDecomposition mmd_decomposition(const Matrix& x, const Matrix& y,
                                          const CkaConfig& cfg = {}) {
  detail::require_cka_inputs(x, y);
  Matrix gx = gram(detail::prepare(x, cfg));
  Matrix gy = gram(detail::prepare(y, cfg));
  const double nx = frobenius_norm(gx);
  const double ny = frobenius_norm(gy);
  if (nx <= cfg.eps || ny <= cfg.eps) {
    throw DegenerateInputError("mmd_decomposition: gram norm below eps guard");
  }
  for (double& v : gx.data()) v /= nx;
  for (double& v : gy.data()) v /= ny;

  const std::size_t n = x.rows();
  double pairwise = 0.0;
  double sum_x = 0.0;
  double sum_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = gx(i, j) - gy(i, j);
      pairwise += d * d;
      sum_x += gx(i, j);
      sum_y += gy(i, j);
    }
  }
  MmdDecomposition out;
  out.pairwise_term = pairwise;
  out.cka = 2.0 * cka(x, y, cfg);
  const double mean_gap = sum_x - sum_y;
  out.jensen_bound = 2.0 - (mean_gap * mean_gap) / static_cast<double>(n * n);
  return out;
}

/// Analytic gradient ∂S/∂X with Y held fixed. With G = XXᵀ, K = YYᵀ,
/// A = ⟨G,K⟩_F, B = ‖G‖_F, C = ‖K‖_F (all on the centered inputs):
///   ∂S/∂X = (2 / BC)·(K X − (A/B²)·G X),
/// and when centering is on the result is pushed back through the centering
/// map (column-centered), which is its own adjoint.
inline Matrix cka_gradient(const Matrix& x, const Matrix& y,
                           const CkaConfig& cfg = {}) {
  detail::require_cka_inputs(x, y);
  const Matrix xc = detail::prepare(x, cfg);
  const Matrix yc = detail::prepare(y, cfg);
  const Matrix g = gram(xc);
  const Matrix k = gram(yc);
  const double b = frobenius_norm(g);
  const double c = frobenius_norm(k);
  if (b <= cfg.eps || c <= cfg.eps) {
    throw DegenerateInputError("cka_gradient: gram norm below eps guard");
  }
  const double a = frobenius_inner(g, k);
  const Matrix kx = matmul(k, xc);
  const Matrix gx = matmul(g, xc);
  const double lead = 2.0 / (b * c);
  const double ratio = a / (b * b);
  Matrix grad(x.rows(), x.cols());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad.data()[i] = lead * (kx.data()[i] - ratio * gx.data()[i]);
  }
  return cfg.center ? center_columns(grad) : grad;
}

/// Pairwise similarity between two layer stacks sharing one probe batch:
/// entry (i, j) = cka(a[i], b[j]). Errors from individual pairs are
/// re-raised with the offending indices attached.
inline Matrix layer_cka_matrix(const std::vector<Matrix>& a,
                               const std::vector<Matrix>& b,
                               const CkaConfig& cfg = {}) {
  if (a.empty() || b.empty()) {
    throw DimensionError("layer_cka_matrix: empty layer list");
  }
  Matrix out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::string where = "layer_cka_matrix: entry (" + std::to_string(i) +
                                ", " + std::to_string(j) + "): ";
      try {
        out(i, j) = cka(a[i], b[j], cfg);
      } catch (const DegenerateInputError& e) {
        throw DegenerateInputError(where + e.what());
      } catch (const Error& e) {
        throw DimensionError(where + e.what());
      }
    }
  }
  return out;
}

}  // namespace cka
