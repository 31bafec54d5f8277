#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cka/errors.hpp"
#include "cka/linalg.hpp"
#include "cka/similarity.hpp"
#include "cka/tensor.hpp"

namespace cka {

/// Loss weights. alpha/beta scale the relational terms, gamma the patch
/// term, tau is the KD temperature.
struct LossWeights {
  double alpha = 5.0;
  double beta = 5.0;
  double gamma = 10.0;
  double tau = 4.0;
};

/// Value plus gradient w.r.t. the student input's data (same layout as that
/// input). `components` holds named sub-loss values where a loss is a
/// composite. `skipped_slices` is filled by pcka_loss for slices that were
/// degenerate after centering; `proj_grad` only by mimic_mse_loss.
struct LossReport {
  double value = 0.0;
  std::vector<double> grad;
  std::map<std::string, double> components;
  std::vector<std::size_t> skipped_slices;
  std::vector<double> proj_grad;
};

namespace detail {

/// Row-wise temperature softmax, numerically stabilized.
inline std::vector<double> softmax_rows(const Logits& z, double tau) {
  std::vector<double> p(z.data.size());
  for (std::size_t i = 0; i < z.samples; ++i) {
    double mx = z.at(i, 0);
    for (std::size_t k = 1; k < z.classes; ++k) mx = std::max(mx, z.at(i, k));
    double denom = 0.0;
    for (std::size_t k = 0; k < z.classes; ++k) {
      const double e = std::exp((z.at(i, k) - mx) / tau);
      p[i * z.classes + k] = e;
      denom += e;
    }
    for (std::size_t k = 0; k < z.classes; ++k) p[i * z.classes + k] /= denom;
  }
  return p;
}

}  // namespace detail

/// Temperature-scaled KL between teacher and student class distributions,
/// mean over samples, times tau^2 so gradient magnitudes stay comparable
/// across temperatures. Gradient is w.r.t. z_s.
inline LossReport kd_kl_loss(const Logits& z_s, const Logits& z_t, double tau) {
  if (z_s.samples != z_t.samples || z_s.classes != z_t.classes) {
    throw DimensionError("kd_kl_loss: logit shapes differ");
  }
  if (!(tau > 0.0)) throw InvariantError("kd_kl_loss: tau must be > 0");

  const std::vector<double> p_s = detail::softmax_rows(z_s, tau);
  const std::vector<double> p_t = detail::softmax_rows(z_t, tau);
  const double n = static_cast<double>(z_s.samples);

  LossReport rep;
  rep.grad.assign(z_s.data.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < z_s.samples; ++i) {
    for (std::size_t k = 0; k < z_s.classes; ++k) {
      const std::size_t idx = i * z_s.classes + k;
      if (p_t[idx] > 0.0) acc += p_t[idx] * (std::log(p_t[idx]) - std::log(p_s[idx]));
      rep.grad[idx] = (tau / n) * (p_s[idx] - p_t[idx]);
    }
  }
  rep.value = tau * tau / n * acc;
  return rep;
}

/// Feature-map CKA loss: 1 − cka over maps flattened to (batch, c·h·w).
/// Channel/spatial dims may differ between the two maps; only batch must
/// match. Gradient is w.r.t. f_s in its own layout.
inline LossReport fcka_loss(const FeatureMap& f_s, const FeatureMap& f_t,
                            const CkaConfig& cfg = {}) {
  if (f_s.batch != f_t.batch) {
    throw DimensionError("fcka_loss: batch sizes differ");
  }
  const Matrix xs = f_s.flatten();
  const Matrix xt = f_t.flatten();
  LossReport rep;
  rep.value = 1.0 - cka(xt, xs, cfg);
  const Matrix g = cka_gradient(xs, xt, cfg);
  rep.grad.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rep.grad[i] = -g.data()[i];
  return rep;
}

/// Sample-relation logit loss: 1 − cka(z_t, z_s). Grams are N×N, so class
/// counts may differ.
inline LossReport intra_lcka_loss(const Logits& z_s, const Logits& z_t,
                                  const CkaConfig& cfg = {}) {
  if (z_s.samples != z_t.samples) {
    throw DimensionError("intra_lcka_loss: sample counts differ");
  }
  const Matrix ms = z_s.as_matrix();
  const Matrix mt = z_t.as_matrix();
  LossReport rep;
  rep.value = 1.0 - cka(mt, ms, cfg);
  const Matrix g = cka_gradient(ms, mt, cfg);
  rep.grad.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rep.grad[i] = -g.data()[i];
  return rep;
}

/// Class-relation logit loss: 1 − cka on transposed logits. Both dims must
/// match (the transposed Grams are P×P over a shared label space).
inline LossReport inter_lcka_loss(const Logits& z_s, const Logits& z_t,
                                  const CkaConfig& cfg = {}) {
  if (z_s.samples != z_t.samples || z_s.classes != z_t.classes) {
    throw DimensionError("inter_lcka_loss: logit shapes differ");
  }
  const Matrix ts = transpose(z_s.as_matrix());
  const Matrix tt = transpose(z_t.as_matrix());
  LossReport rep;
  rep.value = 1.0 - cka(tt, ts, cfg);
  // Gradient w.r.t. z_s is the transpose of the gradient w.r.t. z_s^T.
  const Matrix g = transpose(cka_gradient(ts, tt, cfg));
  rep.grad.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rep.grad[i] = -g.data()[i];
  return rep;
}

/// Total relational loss: ce + α·fcka + β·(intra + inter). Values only —
/// the component gradients live on different tensors, so composing them is
/// the caller's job.
inline LossReport rcka_total(double ce, const LossReport& fcka,
                             const LossReport& intra, const LossReport& inter,
                             const LossWeights& w) {
  LossReport rep;
  rep.components["ce"] = ce;
  rep.components["fcka"] = fcka.value;
  rep.components["intra_lcka"] = intra.value;
  rep.components["inter_lcka"] = inter.value;
  rep.value = ce + w.alpha * fcka.value + w.beta * (intra.value + inter.value);
  return rep;
}

/// Which dimension the patch-CKA mean runs over. Channel averaging is the
/// default; the others exist to reproduce the averaging ablation.
enum class PckaAverage { channel, batch, spatial };

namespace detail {

/// Index map for one PCKA slice: flat PatchTensor offsets laid out row-major
/// as a (rows × cols) matrix.
struct SliceMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> idx;
};

inline SliceMap pcka_slice_map(const PatchTensor& p, PckaAverage avg,
                               std::size_t slice) {
  const std::size_t tile = p.patch.patch_h * p.patch.patch_w;
  SliceMap m;
  m.rows = p.n_patches;
  switch (avg) {
    case PckaAverage::channel:
      m.cols = p.patch_len;  // batch · tile
      m.idx.resize(m.rows * m.cols);
      for (std::size_t q = 0; q < m.rows; ++q)
        for (std::size_t t = 0; t < m.cols; ++t)
          m.idx[q * m.cols + t] = p.index(slice, q, t);
      break;
    case PckaAverage::batch:
      m.cols = p.channels * tile;
      m.idx.resize(m.rows * m.cols);
      for (std::size_t q = 0; q < m.rows; ++q)
        for (std::size_t c = 0; c < p.channels; ++c)
          for (std::size_t u = 0; u < tile; ++u)
            m.idx[q * m.cols + c * tile + u] = p.index(c, q, slice * tile + u);
      break;
    case PckaAverage::spatial:
      m.cols = p.src_batch * p.channels;
      m.idx.resize(m.rows * m.cols);
      for (std::size_t q = 0; q < m.rows; ++q)
        for (std::size_t b = 0; b < p.src_batch; ++b)
          for (std::size_t c = 0; c < p.channels; ++c)
            m.idx[q * m.cols + b * p.channels + c] = p.index(c, q, b * tile + slice);
      break;
  }
  return m;
}

inline std::size_t pcka_slice_count(const PatchTensor& p, PckaAverage avg) {
  switch (avg) {
    case PckaAverage::channel: return p.channels;
    case PckaAverage::batch: return p.src_batch;
    case PckaAverage::spatial: return p.patch.patch_h * p.patch.patch_w;
  }
  return 0;
}

inline Matrix gather(const std::vector<double>& data, const SliceMap& m) {
  std::vector<double> v(m.idx.size());
  for (std::size_t i = 0; i < m.idx.size(); ++i) v[i] = data[m.idx[i]];
  return Matrix(m.rows, m.cols, std::move(v));
}

}  // namespace detail

/// Patch-relation loss: patchify both maps, take CKA per slice along the
/// averaging dimension, and return gamma times the mean of (1 − s_k) over
/// the slices that survive. Slices degenerate after centering (e.g. a
/// channel a ReLU zeroed out) are skipped and recorded; it is an error only
/// when nothing survives. Gradient is w.r.t. f_s in feature-map layout.
inline LossReport pcka_loss(const FeatureMap& f_s, const FeatureMap& f_t,
                            const PatchConfig& pc, double gamma,
                            const CkaConfig& cfg = {},
                            PckaAverage avg = PckaAverage::channel) {
  if (!f_s.same_shape(f_t)) {
    throw DimensionError("pcka_loss: feature map shapes differ");
  }
  const PatchTensor ps = patchify(f_s, pc);
  const PatchTensor pt = patchify(f_t, pc);
  if (ps.n_patches < 2) {
    throw DimensionError("pcka_loss: need at least 2 patches, got " +
                         std::to_string(ps.n_patches));
  }
  const std::size_t n_slices = detail::pcka_slice_count(ps, avg);

  LossReport rep;
  std::vector<double> patch_grad(ps.data.size(), 0.0);
  double acc = 0.0;
  std::size_t used = 0;
  std::vector<Matrix> grads_by_slice;
  std::vector<detail::SliceMap> maps_by_slice;
  for (std::size_t k = 0; k < n_slices; ++k) {
    detail::SliceMap m = detail::pcka_slice_map(ps, avg, k);
    const Matrix slice_s = detail::gather(ps.data, m);
    const Matrix slice_t = detail::gather(pt.data, m);
    try {
      const double s = cka(slice_t, slice_s, cfg);
      acc += 1.0 - s;
      grads_by_slice.push_back(cka_gradient(slice_s, slice_t, cfg));
      maps_by_slice.push_back(std::move(m));
      ++used;
    } catch (const DegenerateInputError&) {
      rep.skipped_slices.push_back(k);
    }
  }
  if (used == 0) {
    throw DegenerateInputError("pcka_loss: every slice degenerate");
  }
  const double scale = gamma / static_cast<double>(used);
  rep.value = scale * acc;
  for (std::size_t k = 0; k < grads_by_slice.size(); ++k) {
    const Matrix& g = grads_by_slice[k];
    const detail::SliceMap& m = maps_by_slice[k];
    for (std::size_t i = 0; i < m.idx.size(); ++i) {
      patch_grad[m.idx[i]] -= scale * g.data()[i];
    }
  }
  PatchTensor gp = ps;
  gp.data = std::move(patch_grad);
  rep.grad = unpatchify(gp).data;
  return rep;
}

/// MSE between the teacher map and the student map pushed through a 1×1
/// channel projection (proj is teacher_channels × student_channels).
/// Gradients w.r.t. both f_s (in `grad`) and proj (in `proj_grad`).
inline LossReport mimic_mse_loss(const FeatureMap& f_s, const FeatureMap& f_t,
                                 const Matrix& proj) {
  if (f_s.batch != f_t.batch || f_s.height != f_t.height ||
      f_s.width != f_t.width) {
    throw DimensionError("mimic_mse_loss: batch/spatial dims differ");
  }
  if (proj.rows() != f_t.channels || proj.cols() != f_s.channels) {
    throw DimensionError("mimic_mse_loss: proj must be teacher_channels x student_channels");
  }
  const double m_total = static_cast<double>(f_t.size());

  LossReport rep;
  rep.grad.assign(f_s.size(), 0.0);
  rep.proj_grad.assign(proj.size(), 0.0);
  double acc = 0.0;
  for (std::size_t b = 0; b < f_t.batch; ++b) {
    for (std::size_t y = 0; y < f_t.height; ++y) {
      for (std::size_t x = 0; x < f_t.width; ++x) {
        for (std::size_t c = 0; c < f_t.channels; ++c) {
          double proj_val = 0.0;
          for (std::size_t cs = 0; cs < f_s.channels; ++cs) {
            proj_val += proj(c, cs) * f_s.at(b, cs, y, x);
          }
          const double diff = proj_val - f_t.at(b, c, y, x);
          acc += diff * diff;
          const double d2 = 2.0 / m_total * diff;
          for (std::size_t cs = 0; cs < f_s.channels; ++cs) {
            rep.grad[f_s.index(b, cs, y, x)] += d2 * proj(c, cs);
            rep.proj_grad[c * proj.cols() + cs] += d2 * f_s.at(b, cs, y, x);
          }
        }
      }
    }
  }
  rep.value = acc / m_total;
  return rep;
}

}  // namespace cka
