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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kbx {

// Multi-pattern matcher over an arbitrary code unit type. Patterns are added
// first, then build() computes failure and dictionary-suffix links; matching
// is a single left-to-right pass that reports every occurrence of every
// pattern.
template <typename CharT>
class AhoCorasick {
 public:
  using string_view_type = std::basic_string_view<CharT>;
  static constexpr int32_t kNone = -1;

  AhoCorasick() { nodes_.emplace_back(); }

  // Returns the pattern id. Adding the same pattern twice returns the id it
  // was first given.
  int32_t add(string_view_type pattern) {
    if (pattern.empty()) return kNone;
    built_ = false;
    int32_t state = 0;
    for (CharT c : pattern) {
      int32_t next = child(state, c);
      if (next == kNone) {
        next = static_cast<int32_t>(nodes_.size());
        auto& kids = nodes_[state].children;
        auto it = std::lower_bound(
            kids.begin(), kids.end(), c,
            [](const auto& e, CharT v) { return e.first < v; });
        kids.insert(it, {c, next});
        nodes_.emplace_back();
      }
      state = next;
    }
    Node& node = nodes_[state];
    if (node.pattern == kNone) {
      node.pattern = static_cast<int32_t>(lengths_.size());
      lengths_.push_back(pattern.size());
    }
    return node.pattern;
  }

  void build() {
    std::queue<int32_t> frontier;
    nodes_[0].fail = 0;
    nodes_[0].dict = kNone;
    for (const auto& [c, kid] : nodes_[0].children) {
      nodes_[kid].fail = 0;
      nodes_[kid].dict = kNone;
      frontier.push(kid);
    }
    while (!frontier.empty()) {
      int32_t state = frontier.front();
      frontier.pop();
      for (const auto& [c, kid] : nodes_[state].children) {
        int32_t f = nodes_[state].fail;
        while (f != 0 && child(f, c) == kNone) f = nodes_[f].fail;
        int32_t target = child(f, c);
        nodes_[kid].fail = (target == kNone || target == kid) ? 0 : target;
        const Node& fail_node = nodes_[nodes_[kid].fail];
        nodes_[kid].dict =
            fail_node.pattern != kNone ? nodes_[kid].fail : fail_node.dict;
        frontier.push(kid);
      }
    }
    built_ = true;
  }

  bool built() const { return built_; }
  std::size_t pattern_count() const { return lengths_.size(); }
  std::size_t pattern_length(int32_t id) const { return lengths_[id]; }

  // Calls on_match(pattern_id, start, end) for every occurrence, ordered by
  // end offset, longest first among matches sharing an end.
  template <typename F>
  void for_each_match(string_view_type text, F&& on_match) const {
    int32_t state = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const CharT c = text[i];
      int32_t next = child(state, c);
      while (next == kNone && state != 0) {
        state = nodes_[state].fail;
        next = child(state, c);
      }
      state = next == kNone ? 0 : next;
      int32_t out = nodes_[state].pattern != kNone ? state : nodes_[state].dict;
      while (out != kNone) {
        const int32_t id = nodes_[out].pattern;
        on_match(id, i + 1 - lengths_[id], i + 1);
        out = nodes_[out].dict;
      }
    }
  }

 private:
  struct Node {
    std::vector<std::pair<CharT, int32_t>> children;
    int32_t fail = 0;
    int32_t dict = kNone;
    int32_t pattern = kNone;
  };

  int32_t child(int32_t state, CharT c) const {
    const auto& kids = nodes_[state].children;
    auto it = std::lower_bound(
        kids.begin(), kids.end(), c,
        [](const auto& e, CharT v) { return e.first < v; });
    return (it != kids.end() && it->first == c) ? it->second : kNone;
  }

  std::vector<Node> nodes_;
  std::vector<std::size_t> lengths_;
  bool built_ = false;
};

}  // namespace kbx
