#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace acrank {

// Lowercase (ASCII), trim, and collapse internal whitespace runs to a single
// space. This is the equality key used when matching a submitted query
// against displayed candidates.
std::string canonical_query(std::string_view raw);

// Like canonical_query but keeps a trailing space, since "hand " and "hand"
// select different completions while the user is still typing.
std::string canonical_prefix(std::string_view raw);

// Whole-query token used as the embedding vocabulary key: lowercased, every
// character outside letters, digits, space, underscore and hyphen removed,
// whitespace collapsed and trimmed, spaces replaced by '_'. Bytes >= 0x80 are
// kept so that non-Latin scripts survive unchanged.
//
// Returns std::nullopt when nothing is left ("empty-after-normalization").
std::optional<std::string> normalize_query(std::string_view raw);

// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view s);

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// 64-bit FNV-1a, stable across platforms. Used for seeded partitioning.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0);

}  // namespace acrank
