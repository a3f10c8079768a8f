// Copyright 2026 The kbx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cmath>
#include <cstddef>
#include <string_view>
#include <vector>

#include "kbx/unicode.hpp"

namespace kbx {

// Half-open code point range.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  bool operator==(const Span&) const = default;
};

// Masking tokens: a maximal run of word characters (English word, number) or
// a single CJK character. Punctuation and whitespace are not tokens.
inline std::vector<Span> word_tokens(std::u32string_view text) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_cjk(text[i])) {
      out.push_back({i, i + 1});
      ++i;
    } else if (is_word_char(text[i])) {
      std::size_t j = i + 1;
      while (j < text.size() && is_word_char(text[j])) ++j;
      out.push_back({i, j});
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::size_t count_word_tokens(std::u32string_view text) {
  return word_tokens(text).size();
}

// Layout tokens used for segment length: a single CJK character, or a
// maximal whitespace-delimited run of anything else. For CJK-free text this
// is plain whitespace splitting.
inline std::vector<Span> layout_tokens(std::u32string_view text) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
    } else if (is_cjk(text[i])) {
      out.push_back({i, i + 1});
      ++i;
    } else {
      std::size_t j = i + 1;
      while (j < text.size() && !is_space(text[j]) && !is_cjk(text[j])) ++j;
      out.push_back({i, j});
      i = j;
    }
  }
  return out;
}

// ceil(ratio * n), robust to the representation error of ratios like 0.15.
inline std::size_t ceil_fraction(double ratio, std::size_t n) {
  double x = ratio * static_cast<double>(n);
  double c = std::ceil(x - 1e-9 * (1.0 + x));
  return c < 0 ? 0 : static_cast<std::size_t>(c);
}

}  // namespace kbx
