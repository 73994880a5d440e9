#include "swa/crc32.hpp"

#include <zlib.h>

namespace swa {

std::uint32_t crc32_bytes(const void* data, std::size_t n, std::uint32_t seed) {
  return static_cast<std::uint32_t>(
      ::crc32(seed, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

std::uint32_t crc32_str(std::string_view s) {
  return crc32_bytes(s.data(), s.size());
}

}  // namespace swa
