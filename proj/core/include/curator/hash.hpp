#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace curator {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

/// FNV-1a over the fields joined by the ASCII unit separator (0x1F).
template <typename... Parts>
constexpr std::uint64_t fnv1a_fields(std::string_view first, Parts... rest) {
    std::uint64_t h = fnv1a(first);
    ((h = fnv1a(std::string_view(rest), fnv1a("\x1f", h))), ...);
    return h;
}

/// 16 lowercase hex digits.
std::string to_hex(std::uint64_t v);
std::optional<std::uint64_t> from_hex(std::string_view text);

}  // namespace curator
