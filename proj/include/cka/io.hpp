#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cka/errors.hpp"
#include "cka/linalg.hpp"
#include "cka/tensor.hpp"

namespace cka {

/// 1- to 4-D row-major float64 tensor, the in-memory side of a dump file.
/// Unlike Matrix/FeatureMap, entries are not required to be finite here:
/// read_dump decides whether to accept non-finite payloads.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<double> data;

  Tensor(std::vector<std::size_t> d, std::vector<double> values)
      : dims(std::move(d)), data(std::move(values)) {
    if (dims.empty() || dims.size() > 4) {
      throw InvariantError("tensor rank must be 1..4");
    }
    std::size_t count = 1;
    for (std::size_t dim : dims) {
      if (dim == 0) throw InvariantError("tensor dims must all be >= 1");
      count *= dim;
    }
    if (count != data.size()) {
      throw InvariantError("tensor data length does not match dims");
    }
  }

  std::size_t ndim() const { return dims.size(); }
  std::size_t size() const { return data.size(); }

  static Tensor from_matrix(const Matrix& m) {
    return Tensor({m.rows(), m.cols()}, m.data());
  }
  static Tensor from_feature_map(const FeatureMap& f) {
    return Tensor({f.batch, f.channels, f.height, f.width}, f.data);
  }

  Matrix as_matrix() const {
    if (ndim() != 2) throw DimensionError("tensor is not 2-D");
    return Matrix(dims[0], dims[1], data);
  }
  FeatureMap as_feature_map() const {
    if (ndim() != 4) throw DimensionError("tensor is not 4-D");
    return FeatureMap(dims[0], dims[1], dims[2], dims[3], data);
  }
};

enum class DumpDtype : std::uint8_t { f32 = 0, f64 = 1 };

/// Violations of the dump format, one kind per malformed-file class.
struct DumpError : Error {
  enum class Kind {
    io,
    bad_magic,
    bad_version,
    bad_dtype,
    bad_ndim,
    bad_dims,
    length_mismatch,
    non_finite,
  };
  Kind kind;
  DumpError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline constexpr char kDumpMagic[4] = {'F', 'D', 'M', 'P'};
inline constexpr std::uint32_t kDumpVersion = 1;

/// Serializes: magic "FDMP", u32 version, u8 dtype, u8 ndim, ndim × u64
/// dims, then the row-major payload. Everything little-endian.
inline void write_dump(const Tensor& t, const std::string& path,
                       DumpDtype dtype = DumpDtype::f64) {
  std::vector<std::uint8_t> buf;
  buf.reserve(10 + 8 * t.ndim() + t.size() * (dtype == DumpDtype::f64 ? 8 : 4));
  for (char c : kDumpMagic) buf.push_back(static_cast<std::uint8_t>(c));
  detail::put_u32(buf, kDumpVersion);
  buf.push_back(static_cast<std::uint8_t>(dtype));
  buf.push_back(static_cast<std::uint8_t>(t.ndim()));
  for (std::size_t d : t.dims) detail::put_u64(buf, static_cast<std::uint64_t>(d));
  for (double v : t.data) {
    if (dtype == DumpDtype::f64) {
      detail::put_u64(buf, std::bit_cast<std::uint64_t>(v));
    } else {
      detail::put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DumpError(DumpError::Kind::io, "cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw DumpError(DumpError::Kind::io, "write failed: " + path);
}

/// Parses and validates a dump. float32 payloads are widened to float64.
/// Non-finite payload values are an error unless allow_nonfinite.
inline Tensor read_dump(const std::string& path, bool allow_nonfinite = false) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DumpError(DumpError::Kind::io, "cannot open: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  if (f.bad()) throw DumpError(DumpError::Kind::io, "read failed: " + path);

  const std::string where = path + ": ";
  if (buf.size() < 4 ||
      !(buf[0] == 'F' && buf[1] == 'D' && buf[2] == 'M' && buf[3] == 'P')) {
    throw DumpError(DumpError::Kind::bad_magic, where + "bad magic, not an FDMP file");
  }
  if (buf.size() < 10) {
    throw DumpError(DumpError::Kind::length_mismatch, where + "truncated header");
  }
  const std::uint32_t version = detail::get_u32(buf.data() + 4);
  if (version != kDumpVersion) {
    throw DumpError(DumpError::Kind::bad_version,
                    where + "unsupported version " + std::to_string(version));
  }
  const std::uint8_t dtype_raw = buf[8];
  if (dtype_raw > 1) {
    throw DumpError(DumpError::Kind::bad_dtype,
                    where + "unknown dtype code " + std::to_string(dtype_raw));
  }
  const DumpDtype dtype = static_cast<DumpDtype>(dtype_raw);
  const std::uint8_t ndim = buf[9];
  if (ndim < 1 || ndim > 4) {
    throw DumpError(DumpError::Kind::bad_ndim,
                    where + "rank " + std::to_string(ndim) + " outside 1..4");
  }
  const std::size_t header_len = 10 + 8 * static_cast<std::size_t>(ndim);
  if (buf.size() < header_len) {
    throw DumpError(DumpError::Kind::length_mismatch, where + "truncated dims");
  }

  std::vector<std::size_t> dims(ndim);
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint64_t d = detail::get_u64(buf.data() + 10 + 8 * i);
    if (d == 0) throw DumpError(DumpError::Kind::bad_dims, where + "zero dimension");
    if (d > std::numeric_limits<std::size_t>::max() / count) {
      throw DumpError(DumpError::Kind::bad_dims, where + "dimension overflow");
    }
    dims[i] = static_cast<std::size_t>(d);
    count *= dims[i];
  }

  const std::size_t elem = dtype == DumpDtype::f64 ? 8 : 4;
  const std::size_t remaining = buf.size() - header_len;
  if (remaining != count * elem) {
    throw DumpError(DumpError::Kind::length_mismatch,
                    where + "payload holds " + std::to_string(remaining) +
                        " bytes, header declares " + std::to_string(count * elem));
  }

  std::vector<double> data(count);
  const std::uint8_t* p = buf.data() + header_len;
  for (std::size_t i = 0; i < count; ++i, p += elem) {
    data[i] = dtype == DumpDtype::f64
                  ? std::bit_cast<double>(detail::get_u64(p))
                  : static_cast<double>(std::bit_cast<float>(detail::get_u32(p)));
    if (!allow_nonfinite && !std::isfinite(data[i])) {
      throw DumpError(DumpError::Kind::non_finite,
                      where + "non-finite value at flat index " + std::to_string(i));
    }
  }
  return Tensor(std::move(dims), std::move(data));
}

namespace detail {

/// Quotes a CSV field only when it needs it.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_value(double v) {
  char tmp[64];
  std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  return tmp;
}

}  // namespace detail

/// Labeled CSV: header row of column labels (leading cell empty), then one
/// row label + values per matrix row. 17 significant digits, so float64
/// values survive a parse round-trip.
inline void export_csv(const Matrix& m, const std::string& path,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels) {
  if (row_labels.size() != m.rows()) {
    throw DimensionError("export_csv: " + std::to_string(row_labels.size()) +
                         " row labels for " + std::to_string(m.rows()) + " rows");
  }
  if (col_labels.size() != m.cols()) {
    throw DimensionError("export_csv: " + std::to_string(col_labels.size()) +
                         " column labels for " + std::to_string(m.cols()) + " columns");
  }
  std::string out;
  for (const std::string& label : col_labels) {
    out += ',';
    out += detail::csv_field(label);
  }
  out += '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += detail::csv_field(row_labels[i]);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out += ',';
      out += detail::csv_value(m(i, j));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << out;
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace cka
