#include "l2c/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "l2c/errors.hpp"

namespace l2c {
namespace {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
    }
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 4 * t.rank() + 8 * t.size());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) {
        put_u32(out, static_cast<std::uint32_t>(e));
    }
    const std::size_t at = out.size();
    out.resize(at + 8 * t.size());
    std::memcpy(out.data() + at, t.data().data(), 8 * t.size());
    return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) {
        throw FormatError("tensor file truncated: missing rank header");
    }
    const std::uint32_t rank = get_u32(bytes, 0);
    if (rank > 16 || bytes.size() < 4 + 4 * static_cast<std::size_t>(rank)) {
        throw FormatError("tensor file truncated or corrupt: rank " + std::to_string(rank));
    }
    Shape shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape[i] = get_u32(bytes, 4 + 4 * i);
        if (shape[i] == 0) {
            throw FormatError("tensor file has a zero extent");
        }
    }
    const std::size_t header = 4 + 4 * static_cast<std::size_t>(rank);
    const std::size_t n = numel(shape);
    if (bytes.size() != header + 8 * n) {
        throw FormatError("tensor file size " + std::to_string(bytes.size()) + " does not match shape " +
                          shape_str(shape));
    }
    std::vector<double> data(n);
    std::memcpy(data.data(), bytes.data() + header, 8 * n);
    return Tensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw FormatError("write failed for " + path.string());
    }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) { write_file_bytes(path, encode_tensor(t)); }

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file_bytes(path)); }

std::uint32_t crc32_of(const std::vector<std::uint8_t>& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

} // namespace l2c
