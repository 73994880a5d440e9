#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace swa {

/// CRC-32 (IEEE) over a byte range; `seed` chains incremental updates.
std::uint32_t crc32_bytes(const void* data, std::size_t n, std::uint32_t seed = 0);

std::uint32_t crc32_str(std::string_view s);

}  // namespace swa
