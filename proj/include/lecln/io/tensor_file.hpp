// SPDX-License-Identifier: Apache-2.0
//
// Binary tensor-file format: magic "LECL", u16 version, u16 dtype
// (0 = f32, 1 = complex as interleaved re/im f32), u16 rank, u32 dims[rank],
// little-endian f32 payload.

#ifndef LECLN_IO_TENSOR_FILE_HPP
#define LECLN_IO_TENSOR_FILE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lecln/types.hpp"

namespace lecln::io {

inline constexpr std::uint16_t kTensorFileVersion = 1;

struct TensorData {
  std::uint16_t dtype = 0;  // 0 real, 1 complex interleaved
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;
};

void write_tensor_file(const std::string& path, const TensorData& t);
TensorData read_tensor_file(const std::string& path);

// Convenience wrappers. Real tensors are row-major; complex matrices store
// interleaved re/im per element, row-major.
void write_real(const std::string& path, const std::vector<std::uint32_t>& dims,
                const std::vector<double>& values);
std::vector<double> read_real(const std::string& path, std::vector<std::uint32_t>* dims = nullptr);

void write_cmat(const std::string& path, const CMat& m);
CMat read_cmat(const std::string& path);

}  // namespace lecln::io

#endif  // LECLN_IO_TENSOR_FILE_HPP
