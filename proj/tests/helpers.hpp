#pragma once

// Test-side oracles. Everything here is written with plain loops on raw
// buffers, independent of the library's linear algebra, so agreement between
// the two is meaningful.

#include <cka/cka.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const cka::Matrix& m) {
  Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

inline void center_grid(Grid& g) {
  if (g.empty()) return;
  const std::size_t n = g.size(), d = g[0].size();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += g[i][j];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) g[i][j] -= mean;
  }
}

// Gram matrix G = X X^T as a grid.
inline Grid gram_grid(const Grid& x) {
  const std::size_t n = x.size();
  Grid g(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < x[i].size(); ++k) g[i][j] += x[i][k] * x[j][k];
  return g;
}

inline double frob_grid(const Grid& g) {
  double s = 0.0;
  for (const auto& row : g)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

// Brute-force linear CKA: ||Y^T X||_F^2 / (||X^T X||_F ||Y^T Y||_F).
inline double cka(const cka::Matrix& xm, const cka::Matrix& ym, bool center) {
  Grid x = to_grid(xm), y = to_grid(ym);
  if (center) {
    center_grid(x);
    center_grid(y);
  }
  const std::size_t n = x.size(), p = x[0].size(), q = y[0].size();
  double cross = 0.0;
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += y[i][a] * x[i][b];
      cross += dot * dot;
    }
  double xx = 0.0;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += x[i][a] * x[i][b];
      xx += dot * dot;
    }
  double yy = 0.0;
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += y[i][a] * y[i][b];
      yy += dot * dot;
    }
  return cross / (std::sqrt(xx) * std::sqrt(yy));
}

struct Decomposition {
  double pairwise = 0.0;
  double sum_x = 0.0;
  double sum_y = 0.0;
};

// Pairwise form over rows scaled by 1/sqrt(||G||_F): the (i, j) term is
// (G_ij/||G||_F - H_ij/||H||_F)^2.
inline Decomposition decompose(const cka::Matrix& xm, const cka::Matrix& ym,
                               bool center) {
  Grid x = to_grid(xm), y = to_grid(ym);
  if (center) {
    center_grid(x);
    center_grid(y);
  }
  Grid g = gram_grid(x), h = gram_grid(y);
  const double gn = frob_grid(g), hn = frob_grid(h);
  Decomposition d;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double a = g[i][j] / gn, b = h[i][j] / hn;
      d.pairwise += (a - b) * (a - b);
      d.sum_x += a;
      d.sum_y += b;
    }
  return d;
}

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(Grid a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  return ev;
}

// Central finite differences of a scalar function over a matrix argument.
inline cka::Matrix fd_gradient(const std::function<double(const cka::Matrix&)>& f,
                               const cka::Matrix& x, double step = 1e-5) {
  cka::Matrix g(x.rows(), x.cols());
  cka::Matrix probe = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double v = probe(i, j);
      probe(i, j) = v + step;
      const double up = f(probe);
      probe(i, j) = v - step;
      const double down = f(probe);
      probe(i, j) = v;
      g(i, j) = (up - down) / (2.0 * step);
    }
  return g;
}

inline cka::Matrix fd_gradient_buffer(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double step = 1e-5) {
  cka::Matrix g(1, x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = probe[i];
    probe[i] = v + step;
    const double up = f(probe);
    probe[i] = v - step;
    const double down = f(probe);
    probe[i] = v;
    g(0, i) = (up - down) / (2.0 * step);
  }
  return g;
}

inline double max_abs(const cka::Matrix& m) {
  double v = 0.0;
  for (double e : m.data()) v = std::max(v, std::fabs(e));
  return v;
}

// Relative gradient gap with the usual guard against tiny denominators.
inline double grad_gap(const cka::Matrix& analytic, const cka::Matrix& fd) {
  const double denom = std::max({max_abs(analytic), max_abs(fd), 1e-4});
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::fabs(analytic.data()[i] - fd.data()[i]));
  return worst / denom;
}

inline cka::FeatureMap random_feature_map(cka::Rng& rng, std::size_t b,
                                          std::size_t c, std::size_t h,
                                          std::size_t w) {
  std::vector<double> data(b * c * h * w);
  for (double& v : data) v = rng.normal();
  return cka::FeatureMap(b, c, h, w, std::move(data));
}

inline cka::Logits random_logits(cka::Rng& rng, std::size_t n, std::size_t p) {
  std::vector<double> data(n * p);
  for (double& v : data) v = rng.normal();
  return cka::Logits(n, p, std::move(data));
}

struct CmdResult {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

inline CmdResult run_cmd(const std::string& cmd) {
  CmdResult r;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0)
    r.output.append(buf, got);
  const int rc = ::pclose(pipe);
  r.status = (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
  return r;
}

inline std::string ckatool_path() { return CKATOOL_PATH; }

// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cka_toolkit_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Pull the value following `key` from "key value" CLI output lines.
inline bool find_value(const std::string& text, const std::string& key,
                       double* out) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    const std::size_t end = pos + key.size();
    const bool line_start = pos == 0 || text[pos - 1] == '\n';
    if (line_start && end < text.size() && text[end] == ' ') {
      *out = std::strtod(text.c_str() + end + 1, nullptr);
      return true;
    }
    pos = end;
  }
  return false;
}

}  // namespace oracle
