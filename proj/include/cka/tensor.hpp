#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cka/errors.hpp"
#include "cka/linalg.hpp"

namespace cka {

/// 4-D activation tensor, (batch, channels, height, width) row-major.
struct FeatureMap {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FeatureMap(std::size_t b, std::size_t c, std::size_t h, std::size_t w)
      : batch(b), channels(c), height(h), width(w), data(b * c * h * w, 0.0) {
    check_dims();
  }

  FeatureMap(std::size_t b, std::size_t c, std::size_t h, std::size_t w,
             std::vector<double> values)
      : batch(b), channels(c), height(h), width(w), data(std::move(values)) {
    check_dims();
    if (data.size() != b * c * h * w) {
      throw InvariantError("feature map data length does not match dims");
    }
    for (double v : data) {
      if (!std::isfinite(v)) throw InvariantError("feature map entry is not finite");
    }
  }

  std::size_t size() const { return data.size(); }

  std::size_t index(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return ((b * channels + c) * height + y) * width + x;
  }
  double at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return data[index(b, c, y, x)];
  }
  double& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    return data[index(b, c, y, x)];
  }

  bool same_shape(const FeatureMap& o) const {
    return batch == o.batch && channels == o.channels && height == o.height &&
           width == o.width;
  }

  /// (B, C, H, W) -> (B, C·H·W). Row-major layout makes this a relabeling of
  /// the same buffer.
  Matrix flatten() const { return Matrix(batch, channels * height * width, data); }

 private:
  void check_dims() const {
    if (batch == 0 || channels == 0 || height == 0 || width == 0) {
      throw InvariantError("feature map dims must all be >= 1");
    }
  }
};

/// Pre-softmax class scores, (samples, classes) row-major. Relational
/// losses need at least two samples and two classes.
struct Logits {
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::vector<double> data;

  Logits(std::size_t n, std::size_t p, std::vector<double> values)
      : samples(n), classes(p), data(std::move(values)) {
    if (samples < 2 || classes < 2) {
      throw InvariantError("logits need >= 2 samples and >= 2 classes");
    }
    if (data.size() != n * p) {
      throw InvariantError("logits data length does not match dims");
    }
    for (double v : data) {
      if (!std::isfinite(v)) throw InvariantError("logit entry is not finite");
    }
  }

  explicit Logits(const Matrix& m) : Logits(m.rows(), m.cols(), m.data()) {}

  double at(std::size_t i, std::size_t k) const { return data[i * classes + k]; }

  Matrix as_matrix() const { return Matrix(samples, classes, data); }
};

/// Spatial patch size used to cut a feature map.
struct PatchConfig {
  std::size_t patch_h = 1;
  std::size_t patch_w = 1;
};

/// A feature map rearranged to (channels, n_patches, patch_len) where each
/// patch vector concatenates, batch element by batch element, the row-major
/// pixels of one (patch_h × patch_w) tile. Source geometry is kept so the
/// rearrangement can be inverted exactly.
struct PatchTensor {
  std::size_t channels = 0;
  std::size_t n_patches = 0;   // (h / patch_h) · (w / patch_w)
  std::size_t patch_len = 0;   // batch · patch_h · patch_w
  std::size_t src_batch = 0;
  std::size_t src_height = 0;
  std::size_t src_width = 0;
  PatchConfig patch;
  std::vector<double> data;

  std::size_t index(std::size_t c, std::size_t q, std::size_t t) const {
    return (c * n_patches + q) * patch_len + t;
  }
  double at(std::size_t c, std::size_t q, std::size_t t) const {
    return data[index(c, q, t)];
  }

  /// Matrix view of one channel slice: n_patches × patch_len.
  Matrix channel_slice(std::size_t c) const {
    std::vector<double> slice(data.begin() + static_cast<std::ptrdiff_t>(c * n_patches * patch_len),
                              data.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_patches * patch_len));
    return Matrix(n_patches, patch_len, std::move(slice));
  }
};

inline void require_patchable(const FeatureMap& f, const PatchConfig& pc) {
  if (pc.patch_h == 0 || pc.patch_w == 0) {
    throw InvariantError("patch size must be >= 1");
  }
  if (f.height % pc.patch_h != 0 || f.width % pc.patch_w != 0) {
    throw PatchError("spatial dims " + std::to_string(f.height) + "x" +
                     std::to_string(f.width) + " not divisible by patch " +
                     std::to_string(pc.patch_h) + "x" + std::to_string(pc.patch_w));
  }
}

/// Cuts f into (patch_h × patch_w) tiles. No padding: non-divisible spatial
/// dims are an error.
inline PatchTensor patchify(const FeatureMap& f, const PatchConfig& pc) {
  require_patchable(f, pc);
  const std::size_t n_ph = f.height / pc.patch_h;
  const std::size_t n_pw = f.width / pc.patch_w;
  PatchTensor out;
  out.channels = f.channels;
  out.n_patches = n_ph * n_pw;
  out.patch_len = f.batch * pc.patch_h * pc.patch_w;
  out.src_batch = f.batch;
  out.src_height = f.height;
  out.src_width = f.width;
  out.patch = pc;
  out.data.assign(f.size(), 0.0);
  for (std::size_t c = 0; c < f.channels; ++c) {
    for (std::size_t r = 0; r < n_ph; ++r) {
      for (std::size_t s = 0; s < n_pw; ++s) {
        const std::size_t q = r * n_pw + s;
        for (std::size_t b = 0; b < f.batch; ++b) {
          for (std::size_t i = 0; i < pc.patch_h; ++i) {
            for (std::size_t j = 0; j < pc.patch_w; ++j) {
              const std::size_t t = (b * pc.patch_h + i) * pc.patch_w + j;
              out.data[out.index(c, q, t)] =
                  f.at(b, c, r * pc.patch_h + i, s * pc.patch_w + j);
            }
          }
        }
      }
    }
  }
  return out;
}

/// Exact inverse of patchify.
inline FeatureMap unpatchify(const PatchTensor& p) {
  FeatureMap f(p.src_batch, p.channels, p.src_height, p.src_width);
  const std::size_t n_pw = p.src_width / p.patch.patch_w;
  const std::size_t n_ph = p.src_height / p.patch.patch_h;
  for (std::size_t c = 0; c < p.channels; ++c) {
    for (std::size_t r = 0; r < n_ph; ++r) {
      for (std::size_t s = 0; s < n_pw; ++s) {
        const std::size_t q = r * n_pw + s;
        for (std::size_t b = 0; b < p.src_batch; ++b) {
          for (std::size_t i = 0; i < p.patch.patch_h; ++i) {
            for (std::size_t j = 0; j < p.patch.patch_w; ++j) {
              const std::size_t t = (b * p.patch.patch_h + i) * p.patch.patch_w + j;
              f.at(b, c, r * p.patch.patch_h + i, s * p.patch.patch_w + j) =
                  p.at(c, q, t);
            }
          }
        }
      }
    }
  }
  return f;
}

}  // namespace cka
