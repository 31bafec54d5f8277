#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cka/linalg.hpp"
#include "cka/rng.hpp"
#include "cka/similarity.hpp"

namespace cka {

struct VerifyOptions {
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  // Fault injection: negate the similarity everywhere the verification
  // harness calls it, to prove the checks can actually fail. Exists so the
  // detector itself is testable; never set in production paths.
  bool negate_numerator = false;
};

struct PropertyResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

namespace detail {

/// Central finite differences of x ↦ cka(x, y).
inline Matrix fd_cka_grad(const Matrix& x, const Matrix& y, const CkaConfig& cfg,
                          double step) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + step;
    const double hi = cka(probe, y, cfg);
    probe.data()[i] = saved - step;
    const double lo = cka(probe, y, cfg);
    probe.data()[i] = saved;
    g.data()[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

}  // namespace detail

/// Re-derives the toolkit's central identities on fresh random instances:
/// the Gram-cosine equality, the decomposition equality and its Jensen
/// bound, the invariance/range/symmetry properties, and agreement of the
/// analytic gradient with finite differences. Returns one result per
/// property in a fixed order (the equality theorems first).
inline std::vector<PropertyResult> run_verification(const VerifyOptions& opt) {
  Rng rng(opt.seed);
  const double flip = opt.negate_numerator ? -1.0 : 1.0;
  std::vector<PropertyResult> results;
  const CkaConfig centered{true, 1e-30};
  const CkaConfig raw{false, 1e-30};

  {  // Two routes to the same similarity must agree, centered or not.
    PropertyResult r{"Theorem 1 (Gram-cosine equality)", 0.0, 1e-10, false};
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const Matrix x = random_matrix(rng, 8, 5);
      const Matrix y = random_matrix(rng, 8, 7);
      for (const CkaConfig& cfg : {centered, raw}) {
        const double direct = flip * cka(x, y, cfg);
        const double via_gram = cka_via_gram_cosine(x, y, cfg);
        r.max_deviation = std::max(r.max_deviation, std::abs(direct - via_gram));
      }
    }
    r.passed = r.max_deviation < r.tolerance;
    results.push_back(r);
  }

  {  // Decomposition equality: 2·S from features vs 2 − Σ(ΔGram)².
    PropertyResult r{"Theorem 2 (decomposition equality)", 0.0, 1e-8, false};
    PropertyResult jb{"Theorem 2 (Jensen bound)", 0.0, 1e-10, false};
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const Matrix x = random_matrix(rng, 6, 4);
      const Matrix y = random_matrix(rng, 6, 4);
      for (const CkaConfig& cfg : {centered, raw}) {
        const MmdDecomposition d = mmd_decomposition(x, y, cfg);
        const double value = flip * d.cka;
        r.max_deviation =
            std::max(r.max_deviation, std::abs(value - (2.0 - d.pairwise_term)));
        jb.max_deviation = std::max(jb.max_deviation, value - d.jensen_bound);
      }
    }
    r.passed = r.max_deviation < r.tolerance;
    jb.passed = jb.max_deviation < jb.tolerance;
    results.push_back(r);
    results.push_back(jb);
  }

  {  // Right-multiplying by orthogonal matrices must not move the value.
    PropertyResult r{"orthogonal invariance", 0.0, 1e-10, false};
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const Matrix x = random_matrix(rng, 8, 5);
      const Matrix y = random_matrix(rng, 8, 7);
      const Matrix q1 = random_orthogonal(rng, 5);
      const Matrix q2 = random_orthogonal(rng, 7);
      const double base = flip * cka(x, y, centered);
      const double rotated = flip * cka(matmul(x, q1), matmul(y, q2), centered);
      r.max_deviation = std::max(r.max_deviation, std::abs(base - rotated));
    }
    r.passed = r.max_deviation < r.tolerance;
    results.push_back(r);
  }

  {  // Isotropic rescaling of either side cancels.
    PropertyResult r{"isotropic scale invariance", 0.0, 1e-10, false};
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const Matrix x = random_matrix(rng, 8, 5);
      const Matrix y = random_matrix(rng, 8, 7);
      const double base = flip * cka(x, y, centered);
      for (double a : {1e-3, 1.0, 1e3}) {
        for (double b : {1e-3, 1.0, 1e3}) {
          const double v = flip * cka(scaled(x, a), scaled(y, b), centered);
          r.max_deviation = std::max(r.max_deviation, std::abs(v - base));
        }
      }
    }
    r.passed = r.max_deviation < r.tolerance;
    results.push_back(r);
  }

  {  // Values stay in [0, 1] (up to roundoff) and ignore argument order.
    PropertyResult range{"similarity range [0, 1]", 0.0, 1e-12, false};
    PropertyResult sym{"argument symmetry", 0.0, 1e-12, false};
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const Matrix x = random_matrix(rng, 8, 5);
      const Matrix y = random_matrix(rng, 8, 7);
      const double v = flip * cka(x, y, centered);
      range.max_deviation = std::max({range.max_deviation, -v, v - 1.0});
      const double w = flip * cka(y, x, centered);
      sym.max_deviation = std::max(sym.max_deviation, std::abs(v - w));
    }
    range.max_deviation = std::max(range.max_deviation, 0.0);
    range.passed = range.max_deviation < range.tolerance;
    sym.passed = sym.max_deviation < sym.tolerance;
    results.push_back(range);
    results.push_back(sym);
  }

  {  // Analytic gradient vs central finite differences.
    PropertyResult r{"gradient finite-difference agreement", 0.0, 1e-4, false};
    const std::size_t n_grad = std::min<std::size_t>(opt.trials, 50);
    for (std::size_t t = 0; t < n_grad; ++t) {
      const Matrix x = random_matrix(rng, 5, 3);
      const Matrix y = random_matrix(rng, 5, 4);
      for (const CkaConfig& cfg : {centered, raw}) {
        Matrix analytic = cka_gradient(x, y, cfg);
        for (double& v : analytic.data()) v *= flip;
        const Matrix fd = detail::fd_cka_grad(x, y, cfg, 1e-5);
        double scale = 1e-4;
        for (double v : analytic.data()) scale = std::max(scale, std::abs(v));
        for (double v : fd.data()) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < fd.size(); ++i) {
          r.max_deviation = std::max(
              r.max_deviation, std::abs(analytic.data()[i] - fd.data()[i]) / scale);
        }
      }
    }
    r.passed = r.max_deviation < r.tolerance;
    results.push_back(r);
  }

  return results;
}

}  // namespace cka
