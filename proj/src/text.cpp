#include "acrank/text.hpp"

#include <cstdint>

namespace acrank {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

// Collapses whitespace runs to one space and lowercases ASCII. Leading
// whitespace is always dropped; trailing whitespace is kept as one space when
// keep_trailing is set.
std::string collapse(std::string_view raw, bool keep_trailing) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ascii_lower(c));
  }
  if (keep_trailing && pending_space) out.push_back(' ');
  return out;
}

}  // namespace

std::string canonical_query(std::string_view raw) {
  return collapse(raw, false);
}

std::string canonical_prefix(std::string_view raw) {
  return collapse(raw, true);
}

std::optional<std::string> normalize_query(std::string_view raw) {
  std::string kept;
  kept.reserve(raw.size());
  for (unsigned char c : raw) {
    if (c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
        (c >= 'A' && c <= 'Z') || c == '_' || c == '-') {
      kept.push_back(ascii_lower(c));
    } else if (is_space(c)) {
      kept.push_back(' ');
    }
  }
  std::string out = collapse(kept, false);
  if (out.empty()) return std::nullopt;
  for (char& c : out) {
    if (c == ' ') c = '_';
  }
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // splitmix finalizer so nearby seeds give unrelated orders
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace acrank
