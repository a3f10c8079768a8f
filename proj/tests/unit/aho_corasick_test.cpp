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

#include <gtest/gtest.h>

#include <string>
#include <tuple>
#include <vector>

#include "kbx/aho_corasick.hpp"
#include "kbx/random.hpp"

namespace kbx {
namespace {

using Hit = std::tuple<std::size_t, std::size_t, std::size_t>;

std::vector<Hit> all_matches(const AhoCorasick<char>& ac, std::string_view text) {
  std::vector<Hit> out;
  ac.for_each_match(text, [&](std::size_t id, std::size_t b, std::size_t e) {
    out.emplace_back(b, e, id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

TEST(AhoCorasick, ReportsOverlappingAndNestedMatches) {
  AhoCorasick<char> ac;
  const auto he = ac.add("he");
  const auto she = ac.add("she");
  const auto hers = ac.add("hers");
  ac.build();
  EXPECT_EQ(ac.add("he"), he);
  auto hits = all_matches(ac, "ushers");
  std::vector<Hit> expected = {{1, 4, she}, {2, 4, he}, {2, 6, hers}};
  EXPECT_EQ(hits, expected);
  EXPECT_EQ(ac.pattern_length(hers), 4u);
}

TEST(AhoCorasick, EmptyAutomatonMatchesNothing) {
  AhoCorasick<char> ac;
  ac.build();
  EXPECT_TRUE(all_matches(ac, "anything").empty());
}

TEST(AhoCorasick, AgreesWithNaiveSearch) {
  Rng rng(3);
  for (int round = 0; round < 200; ++round) {
    AhoCorasick<char> ac;
    std::vector<std::string> patterns;
    for (std::size_t p = 1 + rng.below(12); p > 0; --p) {
      std::string s;
      for (std::size_t n = 1 + rng.below(4); n > 0; --n) s.push_back("abc"[rng.below(3)]);
      ac.add(s);
      if (std::find(patterns.begin(), patterns.end(), s) == patterns.end()) patterns.push_back(s);
    }
    ac.build();
    std::string text;
    for (std::size_t n = rng.below(60); n > 0; --n) text.push_back("abcd"[rng.below(4)]);

    std::vector<Hit> expected;
    for (std::size_t id = 0; id < patterns.size(); ++id) {
      for (auto at = text.find(patterns[id]); at != std::string::npos;
           at = text.find(patterns[id], at + 1)) {
        expected.emplace_back(at, at + patterns[id].size(), id);
      }
    }
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(all_matches(ac, text), expected) << "text=" << text;
  }
}

}  // namespace
}  // namespace kbx
