#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ffd/core/error.hpp"
#include "ffd/dataset/batching.hpp"

namespace ffd {

// On-disk container, little-endian:
//   "FFDB" | u16 version | u16 dims[5] | u8 dtype | u8 labels[8] | tensor bytes
inline constexpr std::array<char, 4> kBatchMagic = {'F', 'F', 'D', 'B'};
inline constexpr std::uint16_t kBatchFormatVersion = 1;
inline constexpr std::uint8_t kDtypeUint8 = 0;
inline constexpr std::size_t kBatchHeaderBytes = 4 + 2 + 5 * 2 + 1;
inline constexpr std::size_t kBatchFileBytes =
    kBatchHeaderBytes + kSubsequencesPerBatch + kBatchTensorBytes;

class BatchFormatError : public DataError {
 public:
  enum class Kind { bad_magic, version_mismatch, bad_dims, bad_dtype, bad_label, truncated };

  BatchFormatError(Kind k, const std::string& what) : DataError(what), kind(k) {}

  Kind kind;
};

namespace detail {

inline void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

inline bool read_exact(std::istream& is, void* dst, std::size_t n) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(is.gcount()) == n;
}

inline std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  if (!read_exact(is, b, 2))
    throw BatchFormatError(BatchFormatError::Kind::truncated, "batch header truncated");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace detail

inline std::size_t write_batch(const PreformedBatch& batch, std::ostream& os) {
  check_batch(batch);
  os.write(kBatchMagic.data(), kBatchMagic.size());
  detail::put_u16(os, kBatchFormatVersion);
  for (auto d : kBatchShape) detail::put_u16(os, static_cast<std::uint16_t>(d));
  os.put(static_cast<char>(kDtypeUint8));
  for (auto label : batch.labels) os.put(static_cast<char>(code(label)));
  os.write(reinterpret_cast<const char*>(batch.data.data()),
           static_cast<std::streamsize>(batch.data.size()));
  if (!os) throw DataError("failed writing batch");
  return kBatchFileBytes;
}

inline PreformedBatch read_batch(std::istream& is) {
  using Kind = BatchFormatError::Kind;
  std::array<char, 4> magic{};
  if (!detail::read_exact(is, magic.data(), magic.size()))
    throw BatchFormatError(Kind::truncated, "batch header truncated");
  if (magic != kBatchMagic) throw BatchFormatError(Kind::bad_magic, "bad magic: not an FFDB batch");

  const auto version = detail::get_u16(is);
  if (version != kBatchFormatVersion)
    throw BatchFormatError(Kind::version_mismatch,
                           "unsupported batch version " + std::to_string(version));
  for (std::size_t i = 0; i < kBatchShape.size(); ++i) {
    const auto d = detail::get_u16(is);
    if (d != kBatchShape[i])
      throw BatchFormatError(Kind::bad_dims, "batch dim " + std::to_string(i) + " is " +
                                                 std::to_string(d) + ", expected " +
                                                 std::to_string(kBatchShape[i]));
  }
  std::uint8_t dtype = 0xff;
  if (!detail::read_exact(is, &dtype, 1))
    throw BatchFormatError(Kind::truncated, "batch header truncated");
  if (dtype != kDtypeUint8)
    throw BatchFormatError(Kind::bad_dtype, "unsupported dtype " + std::to_string(dtype));

  PreformedBatch batch;
  std::array<std::uint8_t, kSubsequencesPerBatch> codes{};
  if (!detail::read_exact(is, codes.data(), codes.size()))
    throw BatchFormatError(Kind::truncated, "batch labels truncated");
  for (std::size_t s = 0; s < codes.size(); ++s) {
    const auto label = label_from_code(codes[s]);
    if (!label)
      throw BatchFormatError(Kind::bad_label, "label code " + std::to_string(codes[s]) +
                                                  " at slot " + std::to_string(s) +
                                                  " is not in {0,1,2,3}");
    batch.labels[s] = *label;
  }
  if (!detail::read_exact(is, batch.data.data(), batch.data.size()))
    throw BatchFormatError(Kind::truncated, "batch payload truncated");
  return batch;
}

inline std::size_t write_batch_file(const PreformedBatch& batch,
                                    const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  return write_batch(batch, os);
}

inline PreformedBatch read_batch_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open batch file " + path.string());
  return read_batch(is);
}

}  // namespace ffd
