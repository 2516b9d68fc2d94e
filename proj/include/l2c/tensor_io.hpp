#pragma once

// Binary tensor format: little-endian u32 rank, u32 extents, then the raw
// float64 payload in row-major order.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "l2c/tensor.hpp"

namespace l2c {

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

std::uint32_t crc32_of(const std::vector<std::uint8_t>& bytes);

} // namespace l2c
