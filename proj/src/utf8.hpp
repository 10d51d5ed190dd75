// Copyright 2026 The patentrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace patentrag::utf8 {

// Length of the sequence introduced by lead byte c, or 0 if c cannot start one.
inline std::size_t sequence_length(unsigned char c) noexcept {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 0;
}

inline bool is_continuation(unsigned char c) noexcept { return (c & 0xC0) == 0x80; }

inline bool valid(std::string_view s) noexcept {
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t len = sequence_length(static_cast<unsigned char>(s[i]));
    if (len == 0 || i + len > s.size()) return false;
    for (std::size_t j = 1; j < len; ++j)
      if (!is_continuation(static_cast<unsigned char>(s[i + j]))) return false;
    i += len;
  }
  return true;
}

/// Splits into code points; a malformed byte becomes its own unit.
inline std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(s[i]));
    bool ok = len != 0 && i + len <= s.size();
    for (std::size_t j = 1; ok && j < len; ++j)
      ok = is_continuation(static_cast<unsigned char>(s[i + j]));
    if (!ok) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

/// Largest prefix length <= max_bytes that does not split a code point.
inline std::size_t safe_prefix(std::string_view s, std::size_t max_bytes) noexcept {
  if (max_bytes >= s.size()) return s.size();
  std::size_t n = max_bytes;
  while (n > 0 && is_continuation(static_cast<unsigned char>(s[n]))) --n;
  return n;
}

}  // namespace patentrag::utf8
