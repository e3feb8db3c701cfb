// SPDX-License-Identifier: Apache-2.0

#include "lecln/io/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lecln::io {

static_assert(std::endian::native == std::endian::little,
              "tensor-file payload is little-endian; big-endian hosts need byte swaps");

namespace {

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("tensor file: truncated");
  return v;
}

}  // namespace

void write_tensor_file(const std::string& path, const TensorData& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("tensor file: cannot open for write: " + path);
  os.write("LECL", 4);
  put<std::uint16_t>(os, kTensorFileVersion);
  put<std::uint16_t>(os, t.dtype);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(t.dims.size()));
  std::uint64_t n = 1;
  for (std::uint32_t d : t.dims) {
    put<std::uint32_t>(os, d);
    n *= d;
  }
  const std::uint64_t expect = t.dtype == 1 ? 2 * n : n;
  if (t.payload.size() != expect) throw std::invalid_argument("tensor file: payload size mismatch");
  os.write(reinterpret_cast<const char*>(t.payload.data()),
           static_cast<std::streamsize>(t.payload.size() * sizeof(float)));
  if (!os) throw std::runtime_error("tensor file: write failed: " + path);
}

TensorData read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("tensor file: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LECL", 4) != 0) throw std::runtime_error("tensor file: bad magic");
  const auto version = get<std::uint16_t>(is);
  if (version != kTensorFileVersion) throw std::runtime_error("tensor file: unsupported version");
  TensorData t;
  t.dtype = get<std::uint16_t>(is);
  const auto rank = get<std::uint16_t>(is);
  std::uint64_t n = 1;
  for (int i = 0; i < rank; ++i) {
    t.dims.push_back(get<std::uint32_t>(is));
    n *= t.dims.back();
  }
  const std::uint64_t count = t.dtype == 1 ? 2 * n : n;
  t.payload.resize(count);
  is.read(reinterpret_cast<char*>(t.payload.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!is) throw std::runtime_error("tensor file: truncated payload");
  return t;
}

void write_real(const std::string& path, const std::vector<std::uint32_t>& dims,
                const std::vector<double>& values) {
  TensorData t;
  t.dtype = 0;
  t.dims = dims;
  t.payload.assign(values.begin(), values.end());
  write_tensor_file(path, t);
}

std::vector<double> read_real(const std::string& path, std::vector<std::uint32_t>* dims) {
  const TensorData t = read_tensor_file(path);
  if (t.dtype != 0) throw std::runtime_error("tensor file: expected real dtype");
  if (dims) *dims = t.dims;
  return std::vector<double>(t.payload.begin(), t.payload.end());
}

void write_cmat(const std::string& path, const CMat& m) {
  TensorData t;
  t.dtype = 1;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.payload.reserve(static_cast<std::size_t>(2 * m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      t.payload.push_back(static_cast<float>(m(r, c).real()));
      t.payload.push_back(static_cast<float>(m(r, c).imag()));
    }
  write_tensor_file(path, t);
}

CMat read_cmat(const std::string& path) {
  const TensorData t = read_tensor_file(path);
  if (t.dtype != 1 || t.dims.size() != 2) throw std::runtime_error("tensor file: expected complex matrix");
  CMat m(t.dims[0], t.dims[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = cplx(t.payload[k], t.payload[k + 1]);
      k += 2;
    }
  return m;
}

}  // namespace lecln::io
