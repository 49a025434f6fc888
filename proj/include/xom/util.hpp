#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace xom {

inline std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

inline constexpr bool is_power_of_two(std::uint64_t v) {
    return v != 0 && (v & (v - 1)) == 0;
}

/// "131072 bytes (128 KB)" style; used in user-facing messages.
inline std::string human_size(std::uint64_t bytes) {
    char buf[64];
    if (bytes >= (1ull << 30) && bytes % (1ull << 30) == 0)
        std::snprintf(buf, sizeof buf, "%llu bytes (%llu GB)",
                      (unsigned long long)bytes, (unsigned long long)(bytes >> 30));
    else if (bytes >= 1024 && bytes % 1024 == 0)
        std::snprintf(buf, sizeof buf, "%llu bytes (%llu KB)",
                      (unsigned long long)bytes, (unsigned long long)(bytes >> 10));
    else
        std::snprintf(buf, sizeof buf, "%llu bytes", (unsigned long long)bytes);
    return buf;
}

} // namespace xom
