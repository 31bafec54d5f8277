#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "cka/errors.hpp"
#include "cka/io.hpp"
#include "cka/linalg.hpp"
#include "cka/losses.hpp"
#include "cka/rng.hpp"
#include "cka/similarity.hpp"
#include "cka/tensor.hpp"

namespace cka {

/// Synthetic Gaussian-blob classification data. Each class owns a few
/// cluster centers scattered around a class anchor, which keeps the Bayes
/// boundary nonlinear enough that network capacity matters.
// Defaults pinned empirically: the anchors sit almost on top of each other
// (center_scale small) while clusters scatter widely, so each class is an
// interleaved union of blobs. A 64-hidden teacher reaches ~0.99 test
// accuracy here while an 8-hidden student tops out around 0.91 — the
// capacity gap the distillation comparisons need.
struct BlobConfig {
  std::size_t n_classes = 4;
  std::size_t n_per_class = 200;
  std::size_t dim = 16;
  std::size_t clusters_per_class = 7;
  double center_scale = 0.5;    // class anchors uniform in [-s, s]^dim
  double cluster_offset = 2.5;  // cluster centers = anchor + offset · normal
  double spread = 1.2;          // per-point noise sigma
  double test_fraction = 0.25;
  std::uint64_t seed = 0;
};

struct BlobDataset {
  std::size_t n_classes;
  std::size_t dim;
  Matrix train_x;
  std::vector<std::size_t> train_y;
  Matrix test_x;
  std::vector<std::size_t> test_y;
};

inline BlobDataset make_blobs(const BlobConfig& cfg) {
  if (cfg.n_classes < 2) throw InvariantError("make_blobs: need >= 2 classes");
  if (cfg.dim < 2) throw InvariantError("make_blobs: need dim >= 2");
  if (!(cfg.spread > 0.0)) throw InvariantError("make_blobs: spread must be > 0");
  if (cfg.clusters_per_class < 1) throw InvariantError("make_blobs: need >= 1 cluster");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    throw InvariantError("make_blobs: test fraction must be in (0, 1)");
  }
  const std::size_t n_test_pc = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(cfg.test_fraction *
                                              static_cast<double>(cfg.n_per_class))));
  if (n_test_pc >= cfg.n_per_class) {
    throw InvariantError("make_blobs: test split leaves no training data");
  }
  const std::size_t n_train_pc = cfg.n_per_class - n_test_pc;

  Rng rng(cfg.seed);
  // All points of one class, contiguous; points cycle through the class's
  // clusters so any prefix covers every cluster.
  std::vector<std::vector<double>> points(cfg.n_classes);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    std::vector<double> anchor(cfg.dim);
    for (double& v : anchor) v = rng.uniform(-cfg.center_scale, cfg.center_scale);
    std::vector<double> clusters(cfg.clusters_per_class * cfg.dim);
    for (std::size_t k = 0; k < cfg.clusters_per_class; ++k)
      for (std::size_t d = 0; d < cfg.dim; ++d)
        clusters[k * cfg.dim + d] = anchor[d] + cfg.cluster_offset * rng.normal();
    points[c].resize(cfg.n_per_class * cfg.dim);
    for (std::size_t p = 0; p < cfg.n_per_class; ++p) {
      const std::size_t k = p % cfg.clusters_per_class;
      for (std::size_t d = 0; d < cfg.dim; ++d) {
        points[c][p * cfg.dim + d] =
            clusters[k * cfg.dim + d] + cfg.spread * rng.normal();
      }
    }
  }

  // Interleave classes so raw batch order is already class-mixed.
  std::vector<double> train_x, test_x;
  std::vector<std::size_t> train_y, test_y;
  for (std::size_t p = 0; p < n_train_pc; ++p) {
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
      const double* row = &points[c][p * cfg.dim];
      train_x.insert(train_x.end(), row, row + cfg.dim);
      train_y.push_back(c);
    }
  }
  for (std::size_t p = n_train_pc; p < cfg.n_per_class; ++p) {
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
      const double* row = &points[c][p * cfg.dim];
      test_x.insert(test_x.end(), row, row + cfg.dim);
      test_y.push_back(c);
    }
  }
  return BlobDataset{cfg.n_classes, cfg.dim,
                     Matrix(train_y.size(), cfg.dim, std::move(train_x)),
                     std::move(train_y),
                     Matrix(test_y.size(), cfg.dim, std::move(test_x)),
                     std::move(test_y)};
}

/// Input → hidden (ReLU) → output perceptron. Weights are stored so a
/// batch row-vector multiplies from the left: x·w1 + b1, relu, ·w2 + b2.
struct TinyNet {
  Matrix w1;  // input × hidden
  Vector b1;  // hidden
  Matrix w2;  // hidden × output
  Vector b2;  // output

  std::size_t input_size() const { return w1.rows(); }
  std::size_t hidden_size() const { return w1.cols(); }
  std::size_t output_size() const { return w2.cols(); }
};

/// He-style init: weights ~ N(0, 2/fan_in), biases zero.
inline TinyNet init_net(std::size_t input, std::size_t hidden, std::size_t output,
                        Rng& rng) {
  if (input == 0 || hidden == 0 || output == 0) {
    throw InvariantError("init_net: layer sizes must be >= 1");
  }
  Matrix w1(input, hidden);
  for (double& v : w1.data()) v = rng.normal() * std::sqrt(2.0 / static_cast<double>(input));
  Matrix w2(hidden, output);
  for (double& v : w2.data()) v = rng.normal() * std::sqrt(2.0 / static_cast<double>(hidden));
  return TinyNet{std::move(w1), Vector(std::vector<double>(hidden, 0.0)),
                 std::move(w2), Vector(std::vector<double>(output, 0.0))};
}

struct ForwardResult {
  Matrix hidden_pre;  // before ReLU
  Matrix hidden;      // after ReLU
  Matrix logits;

  /// Hidden activations as a (batch, channels, 1, 1) map, so the feature
  /// loss's flatten is the identity on (batch, hidden).
  FeatureMap hidden_as_feature_map() const {
    return FeatureMap(hidden.rows(), hidden.cols(), 1, 1, hidden.data());
  }
};

inline ForwardResult forward(const TinyNet& net, const Matrix& x) {
  if (x.cols() != net.input_size()) {
    throw DimensionError("forward: batch has " + std::to_string(x.cols()) +
                         " features, net expects " + std::to_string(net.input_size()));
  }
  Matrix hidden_pre = matmul(x, net.w1);
  for (std::size_t i = 0; i < hidden_pre.rows(); ++i)
    for (std::size_t j = 0; j < hidden_pre.cols(); ++j) hidden_pre(i, j) += net.b1[j];
  Matrix hidden = hidden_pre;
  for (double& v : hidden.data()) v = std::max(v, 0.0);
  Matrix logits = matmul(hidden, net.w2);
  for (std::size_t i = 0; i < logits.rows(); ++i)
    for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += net.b2[j];
  return ForwardResult{std::move(hidden_pre), std::move(hidden), std::move(logits)};
}

struct NetGradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

/// Backprop through the two layers. `grad_logits` is the upstream gradient
/// w.r.t. the logits; `grad_hidden` (may be null) an extra upstream gradient
/// w.r.t. the post-ReLU hidden activations, for feature-level losses.
inline NetGradients backward(const TinyNet& net, const Matrix& x,
                             const ForwardResult& fwd, const Matrix& grad_logits,
                             const Matrix* grad_hidden = nullptr) {
  if (!grad_logits.same_shape(fwd.logits)) {
    throw DimensionError("backward: logit grad shape mismatch");
  }
  if (grad_hidden != nullptr && !grad_hidden->same_shape(fwd.hidden)) {
    throw DimensionError("backward: hidden grad shape mismatch");
  }
  Matrix grad_w2 = matmul(transpose(fwd.hidden), grad_logits);
  std::vector<double> grad_b2(net.output_size(), 0.0);
  for (std::size_t i = 0; i < grad_logits.rows(); ++i)
    for (std::size_t j = 0; j < grad_logits.cols(); ++j)
      grad_b2[j] += grad_logits(i, j);

  Matrix grad_h = matmul(grad_logits, transpose(net.w2));
  if (grad_hidden != nullptr) {
    for (std::size_t i = 0; i < grad_h.size(); ++i)
      grad_h.data()[i] += grad_hidden->data()[i];
  }
  // ReLU gate; subgradient 0 at exactly 0.
  for (std::size_t i = 0; i < grad_h.size(); ++i)
    if (fwd.hidden_pre.data()[i] <= 0.0) grad_h.data()[i] = 0.0;

  Matrix grad_w1 = matmul(transpose(x), grad_h);
  std::vector<double> grad_b1(net.hidden_size(), 0.0);
  for (std::size_t i = 0; i < grad_h.rows(); ++i)
    for (std::size_t j = 0; j < grad_h.cols(); ++j) grad_b1[j] += grad_h(i, j);

  return NetGradients{std::move(grad_w1), std::move(grad_b1), std::move(grad_w2),
                      std::move(grad_b2)};
}

/// Mean cross-entropy of softmax(logits) against integer labels, with the
/// gradient w.r.t. the logits.
struct CeResult {
  double value;
  Matrix grad;
};

inline CeResult cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels) {
  if (labels.size() != logits.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(logits.rows()) + " rows");
  }
  const double n = static_cast<double>(logits.rows());
  Matrix grad(logits.rows(), logits.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (labels[i] >= logits.cols()) {
      throw DimensionError("cross_entropy: label out of range");
    }
    double mx = logits(i, 0);
    for (std::size_t k = 1; k < logits.cols(); ++k) mx = std::max(mx, logits(i, k));
    double denom = 0.0;
    for (std::size_t k = 0; k < logits.cols(); ++k) denom += std::exp(logits(i, k) - mx);
    const double log_denom = std::log(denom);
    acc -= logits(i, labels[i]) - mx - log_denom;
    for (std::size_t k = 0; k < logits.cols(); ++k) {
      const double p = std::exp(logits(i, k) - mx) / denom;
      grad(i, k) = (p - (k == labels[i] ? 1.0 : 0.0)) / n;
    }
  }
  return CeResult{acc / n, std::move(grad)};
}

inline double accuracy(const Matrix& logits, const std::vector<std::size_t>& labels) {
  if (labels.size() != logits.rows()) {
    throw DimensionError("accuracy: label count mismatch");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.cols(); ++k)
      if (logits(i, k) > logits(i, best)) best = k;
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

enum class TrainMode { ce, kd, rcka };

inline std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::ce: return "ce";
    case TrainMode::kd: return "kd";
    case TrainMode::rcka: return "rcka";
  }
  return "?";
}

inline TrainMode parse_train_mode(const std::string& s) {
  if (s == "ce") return TrainMode::ce;
  if (s == "kd") return TrainMode::kd;
  if (s == "rcka") return TrainMode::rcka;
  throw InvariantError("unknown train mode: " + s);
}

struct TrainConfig {
  TrainMode mode = TrainMode::ce;
  LossWeights weights{};
  CkaConfig cka_cfg{};
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  // 0.03 is the highest rate at which all three modes train stably; the KD
  // gradient is roughly tau times the CE gradient, so it blows up first.
  double learning_rate = 0.03;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 1;
  std::size_t student_hidden = 8;
  // Step decay: multiply the rate by lr_decay_factor every lr_decay_every
  // epochs (0 disables).
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_every = 20;

  // learning_rate 0 is legal (a no-op optimizer) so "zero steps change
  // nothing" stays testable; negative rates are rejected.
  void validate() const {
    if (batch_size < 2) throw InvariantError("train config: batch_size must be >= 2");
    if (!(learning_rate >= 0.0)) throw InvariantError("train config: learning_rate must be >= 0");
    if (epochs < 1) throw InvariantError("train config: epochs must be >= 1");
  }
};

struct EpochStats {
  std::size_t epoch = 0;  // one-based
  double ce = 0.0;
  double fcka = 0.0;
  double intra = 0.0;
  double inter = 0.0;
  double total = 0.0;
  double test_acc = 0.0;
  double probe_cka = 0.0;
};

struct TrainReport {
  TrainMode mode = TrainMode::ce;
  std::uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  double final_accuracy = 0.0;
};

namespace detail {

/// SGD with momentum and decoupled-from-nothing weight decay, matching the
/// common deep-learning formulation: buf = m·buf + (g + wd·w); w -= lr·buf.
struct SgdState {
  std::vector<std::vector<double>> buf;

  void step(std::vector<std::vector<double>*> params,
            std::vector<const std::vector<double>*> grads, double lr,
            double momentum, double weight_decay) {
    if (buf.empty()) {
      buf.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i)
        buf[i].assign(params[i]->size(), 0.0);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::vector<double>& w = *params[i];
      const std::vector<double>& g = *grads[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        buf[i][j] = momentum * buf[i][j] + (g[j] + weight_decay * w[j]);
        w[j] -= lr * buf[i][j];
      }
    }
  }
};

inline Matrix rows_subset(const Matrix& x, const std::vector<std::size_t>& idx,
                          std::size_t begin, std::size_t end) {
  Matrix out(end - begin, x.cols());
  for (std::size_t r = begin; r < end; ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r - begin, c) = x(idx[r], c);
  return out;
}

inline Matrix rows_prefix(const Matrix& x, std::size_t n) {
  std::vector<double> d(x.data().begin(),
                        x.data().begin() + static_cast<std::ptrdiff_t>(n * x.cols()));
  return Matrix(n, x.cols(), std::move(d));
}

inline void check_finite_params(const TinyNet& net, std::size_t epoch) {
  for (double v : net.w1.data())
    if (!std::isfinite(v)) throw TrainingError("diverged at epoch " + std::to_string(epoch));
  for (double v : net.w2.data())
    if (!std::isfinite(v)) throw TrainingError("diverged at epoch " + std::to_string(epoch));
  for (double v : net.b1.data)
    if (!std::isfinite(v)) throw TrainingError("diverged at epoch " + std::to_string(epoch));
  for (double v : net.b2.data)
    if (!std::isfinite(v)) throw TrainingError("diverged at epoch " + std::to_string(epoch));
}

}  // namespace detail

/// Trains a CE-only teacher and checks it actually learned the task: final
/// test accuracy below `min_test_accuracy` is an error (a silently bad
/// teacher would invalidate every distillation comparison downstream).
/// `cfg.mode`, loss weights, and `student_hidden` are ignored here.
inline TinyNet train_teacher(const BlobDataset& data, std::size_t hidden,
                             const TrainConfig& cfg, double min_test_accuracy = 0.95) {
  cfg.validate();
  Rng rng(cfg.seed);
  TinyNet net = init_net(data.dim, hidden, data.n_classes, rng);
  detail::SgdState sgd;
  const std::size_t n = data.train_x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate;
    if (cfg.lr_decay_every > 0) {
      for (std::size_t k = cfg.lr_decay_every; k < epoch; k += cfg.lr_decay_every)
        lr *= cfg.lr_decay_factor;
    }
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      if (stop - start < 2) break;
      const Matrix x = detail::rows_subset(data.train_x, order, start, stop);
      std::vector<std::size_t> y(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
      for (std::size_t& idx : y) idx = data.train_y[idx];
      const ForwardResult fwd = forward(net, x);
      const CeResult ce = cross_entropy(fwd.logits, y);
      if (!std::isfinite(ce.value)) {
        throw TrainingError("teacher diverged at epoch " + std::to_string(epoch));
      }
      const NetGradients g = backward(net, x, fwd, ce.grad);
      sgd.step({&net.w1.data(), &net.b1.data, &net.w2.data(), &net.b2.data},
               {&g.w1.data(), &g.b1, &g.w2.data(), &g.b2}, lr, cfg.momentum,
               cfg.weight_decay);
    }
    detail::check_finite_params(net, epoch);
  }
  const double acc = accuracy(forward(net, data.test_x).logits, data.test_y);
  if (acc < min_test_accuracy) {
    throw TrainingError("teacher test accuracy " + std::to_string(acc) +
                        " below required " + std::to_string(min_test_accuracy));
  }
  return net;
}

/// Distills `teacher` into a fresh student per cfg.mode:
///   ce    plain cross-entropy (no teacher signal);
///   kd    CE + temperature-KL on logits;
///   rcka  CE + α·(feature CKA loss on hidden) + β·(intra + inter logit CKA).
/// Zero-weight components are skipped outright, so rcka with α=β=0 is
/// bit-identical to ce. Teacher–student logit CKA on a fixed probe batch
/// (first min(128, n_test) test rows) is recorded every epoch.
inline TrainReport train_student(const TinyNet& teacher, const BlobDataset& data,
                                 const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.student_hidden >= teacher.hidden_size()) {
    throw InvariantError("train_student: student hidden must be smaller than teacher's");
  }
  const std::size_t n_probe = std::min<std::size_t>(128, data.test_x.rows());
  if (n_probe < 2) throw InvariantError("train_student: need >= 2 test rows for the probe");
  const Matrix probe_x = detail::rows_prefix(data.test_x, n_probe);
  const Matrix probe_teacher_logits = forward(teacher, probe_x).logits;

  Rng rng(cfg.seed);
  TinyNet net = init_net(data.dim, cfg.student_hidden, data.n_classes, rng);
  detail::SgdState sgd;
  const std::size_t n = data.train_x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  report.mode = cfg.mode;
  report.seed = cfg.seed;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate;
    if (cfg.lr_decay_every > 0) {
      for (std::size_t k = cfg.lr_decay_every; k < epoch; k += cfg.lr_decay_every)
        lr *= cfg.lr_decay_factor;
    }
    rng.shuffle(order);
    EpochStats stats;
    stats.epoch = epoch;
    std::size_t n_batches = 0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      if (stop - start < 2) break;
      const Matrix x = detail::rows_subset(data.train_x, order, start, stop);
      std::vector<std::size_t> y(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
      for (std::size_t& idx : y) idx = data.train_y[idx];

      const ForwardResult fwd = forward(net, x);
      const CeResult ce = cross_entropy(fwd.logits, y);
      Matrix grad_logits = ce.grad;
      double total = ce.value;
      double fcka_v = 0.0, intra_v = 0.0, inter_v = 0.0;
      Matrix grad_hidden(1, 1);
      bool have_hidden_grad = false;

      if (cfg.mode != TrainMode::ce) {
        const ForwardResult teacher_fwd = forward(teacher, x);
        if (cfg.mode == TrainMode::kd) {
          const LossReport kd = kd_kl_loss(Logits(fwd.logits), Logits(teacher_fwd.logits),
                                           cfg.weights.tau);
          total += kd.value;
          for (std::size_t i = 0; i < grad_logits.size(); ++i)
            grad_logits.data()[i] += kd.grad[i];
        } else {  // rcka
          if (cfg.weights.alpha != 0.0) {
            const LossReport fr = fcka_loss(fwd.hidden_as_feature_map(),
                                            teacher_fwd.hidden_as_feature_map(),
                                            cfg.cka_cfg);
            fcka_v = fr.value;
            total += cfg.weights.alpha * fr.value;
            grad_hidden = Matrix(fwd.hidden.rows(), fwd.hidden.cols(), fr.grad);
            for (double& v : grad_hidden.data()) v *= cfg.weights.alpha;
            have_hidden_grad = true;
          }
          if (cfg.weights.beta != 0.0) {
            const Logits zs(fwd.logits);
            const Logits zt(teacher_fwd.logits);
            const LossReport ra = intra_lcka_loss(zs, zt, cfg.cka_cfg);
            const LossReport re = inter_lcka_loss(zs, zt, cfg.cka_cfg);
            intra_v = ra.value;
            inter_v = re.value;
            total += cfg.weights.beta * (ra.value + re.value);
            for (std::size_t i = 0; i < grad_logits.size(); ++i)
              grad_logits.data()[i] += cfg.weights.beta * (ra.grad[i] + re.grad[i]);
          }
        }
      }
      if (!std::isfinite(total)) {
        throw TrainingError(to_string(cfg.mode) + " run diverged at epoch " +
                            std::to_string(epoch));
      }

      const NetGradients g = backward(net, x, fwd, grad_logits,
                                      have_hidden_grad ? &grad_hidden : nullptr);
      sgd.step({&net.w1.data(), &net.b1.data, &net.w2.data(), &net.b2.data},
               {&g.w1.data(), &g.b1, &g.w2.data(), &g.b2}, lr, cfg.momentum,
               cfg.weight_decay);

      stats.ce += ce.value;
      stats.fcka += fcka_v;
      stats.intra += intra_v;
      stats.inter += inter_v;
      stats.total += total;
      ++n_batches;
    }
    detail::check_finite_params(net, epoch);
    if (n_batches == 0) throw TrainingError("no usable batches; batch_size too large");
    stats.ce /= static_cast<double>(n_batches);
    stats.fcka /= static_cast<double>(n_batches);
    stats.intra /= static_cast<double>(n_batches);
    stats.inter /= static_cast<double>(n_batches);
    stats.total /= static_cast<double>(n_batches);
    stats.test_acc = accuracy(forward(net, data.test_x).logits, data.test_y);
    stats.probe_cka =
        cka(probe_teacher_logits, forward(net, probe_x).logits, cfg.cka_cfg);
    report.epochs.push_back(stats);
  }
  report.final_accuracy = report.epochs.back().test_acc;
  return report;
}

inline const char* kReportCsvHeader =
    "epoch,mode,seed,ce,fcka,intra,inter,total,test_acc,probe_cka";

inline std::string report_to_csv(const TrainReport& r) {
  std::string out = kReportCsvHeader;
  out += '\n';
  for (const EpochStats& e : r.epochs) {
    out += std::to_string(e.epoch);
    out += ',';
    out += to_string(r.mode);
    out += ',';
    out += std::to_string(r.seed);
    for (double v : {e.ce, e.fcka, e.intra, e.inter, e.total, e.test_acc, e.probe_cka}) {
      out += ',';
      out += detail::csv_value(v);
    }
    out += '\n';
  }
  return out;
}

struct ModeSummary {
  TrainMode mode = TrainMode::ce;
  std::vector<double> final_accuracies;  // one per successful seed, seed order
  double median_accuracy = 0.0;
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  std::vector<std::pair<std::uint64_t, std::string>> failures;  // seed, reason
};

struct SweepSummary {
  std::vector<TrainReport> reports;  // successful runs, mode-major then seed
  std::vector<ModeSummary> modes;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvariantError("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Runs every (mode, seed) combination. A failing seed is recorded and does
/// not abort the others; a mode where every seed failed is an error.
inline SweepSummary run_seed_sweep(const TinyNet& teacher, const BlobDataset& data,
                                   const TrainConfig& base,
                                   const std::vector<TrainMode>& modes,
                                   const std::vector<std::uint64_t>& seeds) {
  if (modes.empty()) throw InvariantError("run_seed_sweep: no modes");
  if (seeds.empty()) throw InvariantError("run_seed_sweep: no seeds");
  SweepSummary out;
  for (TrainMode mode : modes) {
    ModeSummary ms;
    ms.mode = mode;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = seed;
      try {
        TrainReport r = train_student(teacher, data, cfg);
        ms.final_accuracies.push_back(r.final_accuracy);
        out.reports.push_back(std::move(r));
      } catch (const Error& e) {
        ms.failures.emplace_back(seed, e.what());
      }
    }
    if (ms.final_accuracies.empty()) {
      throw TrainingError("every seed failed for mode " + to_string(mode) +
                          (ms.failures.empty() ? "" : ": " + ms.failures.front().second));
    }
    ms.median_accuracy = median(ms.final_accuracies);
    ms.min_accuracy = *std::min_element(ms.final_accuracies.begin(),
                                        ms.final_accuracies.end());
    ms.max_accuracy = *std::max_element(ms.final_accuracies.begin(),
                                        ms.final_accuracies.end());
    out.modes.push_back(std::move(ms));
  }
  return out;
}

inline std::string sweep_summary_to_csv(const SweepSummary& s) {
  std::string out = "mode,n_seeds,median_acc,min_acc,max_acc,n_failures\n";
  for (const ModeSummary& m : s.modes) {
    out += to_string(m.mode);
    out += ',';
    out += std::to_string(m.final_accuracies.size());
    for (double v : {m.median_accuracy, m.min_accuracy, m.max_accuracy}) {
      out += ',';
      out += detail::csv_value(v);
    }
    out += ',';
    out += std::to_string(m.failures.size());
    out += '\n';
  }
  return out;
}

}  // namespace cka
