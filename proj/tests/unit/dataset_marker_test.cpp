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

#include "kbx/dataset_marker.hpp"
#include "support/synth.hpp"

namespace kbx {
namespace {

AnnotatedSentence fig3() {
  return {"s1",
          "After taking Metoclopramide, she developed dyskinesia",
          {{43, 53, "Disease"}, {13, 27, "Chemical"}},
          {{1, 0, "CID"}}};
}

std::string surface(const std::string& text, const EntityAnnotation& e) {
  return cp_slice(text, e.start, e.end);
}

TEST(InsertMarkers, NumbersEntitiesByPosition) {
  auto marked = insert_markers(fig3());
  EXPECT_EQ(marked.text, "After taking <1>Metoclopramide</1>, she developed <2>dyskinesia</2>");
  EXPECT_EQ(marked.entity_count, 2u);
  EXPECT_EQ(strip_markers(marked.text), fig3().text);
}

TEST(InsertMarkers, ZeroEntitiesUnchanged) {
  AnnotatedSentence s{"s0", "no entities here", {}, {}};
  EXPECT_EQ(insert_markers(s).text, s.text);
}

TEST(InsertMarkers, RejectsDefects) {
  AnnotatedSentence overlap{"s", "abcdef", {{0, 3, "A"}, {2, 5, "B"}}, {}};
  try {
    insert_markers(overlap);
    FAIL();
  } catch (const MarkerError& e) {
    EXPECT_EQ(e.ordinal(), 2u);
    EXPECT_EQ(e.sentence_id(), "s");
  }
  EXPECT_THROW(insert_markers({"s", "abc", {{2, 9, "A"}}, {}}), MarkerError);
  EXPECT_THROW(insert_markers({"s", "abc", {{1, 1, "A"}}, {}}), MarkerError);
  EXPECT_THROW(insert_markers({"s", "abc", {{0, 1, "A"}}, {{0, 3, "R"}}}), MarkerError);
  EXPECT_THROW(insert_markers({"s", "a <1>b</1>", {}, {}}), MarkerError);
  // Angle brackets that are not markers are plain text.
  EXPECT_EQ(insert_markers({"s", "x < y > z <a>", {{0, 1, "V"}}, {}}).text, "<1>x</1> < y > z <a>");
}

TEST(ExtractMarkers, ChineseSentence) {
  auto ex = extract_markers("服用<1>甲氧氯普胺</1>后，她出现了<2>运动障碍</2>", 2, "s1");
  EXPECT_EQ(ex.clean_text, "服用甲氧氯普胺后，她出现了运动障碍");
  ASSERT_EQ(ex.spans.size(), 2u);
  EXPECT_EQ(ex.spans[0], (Span{2, 7}));
  EXPECT_EQ(ex.spans[1], (Span{13, 17}));
  EXPECT_EQ(cp_slice(ex.clean_text, 2, 7), "甲氧氯普胺");
  EXPECT_EQ(cp_slice(ex.clean_text, 13, 17), "运动障碍");
}

TEST(ExtractMarkers, NoMarkersNoEntities) {
  auto ex = extract_markers("plain sentence", 0);
  EXPECT_EQ(ex.clean_text, "plain sentence");
  EXPECT_TRUE(ex.spans.empty());
}

void expect_marker_error(const std::string& text, std::size_t expected, std::size_t ordinal,
                         const std::string& reason) {
  try {
    extract_markers(text, expected, "sent-9");
    FAIL() << "no error for " << text;
  } catch (const MarkerError& e) {
    EXPECT_EQ(e.ordinal(), ordinal) << text;
    EXPECT_EQ(e.reason(), reason) << text;
    EXPECT_EQ(e.sentence_id(), "sent-9");
    EXPECT_NE(std::string(e.what()).find("sent-9"), std::string::npos);
  }
}

TEST(ExtractMarkers, Defects) {
  expect_marker_error("服用<1>甲氧氯普胺</1>后，她出现了运动障碍", 2, 2, "missing marker 2");
  expect_marker_error("<1>a</1> <1>b</1>", 2, 1, "duplicated marker 1");
  expect_marker_error("<1>a <2>b</2></1>", 2, 2, "marker 2 nested inside marker 1");
  expect_marker_error("<1>a</2> <2>b</2>", 2, 2, "malformed closing marker 2");
  expect_marker_error("<1>a</1> <3>b</3>", 2, 3, "unexpected marker 3");
  expect_marker_error("<1>a</1> <2>b", 2, 2, "unclosed marker 2");
  expect_marker_error("<1> </1>", 1, 1, "empty marker 1");
  expect_marker_error("<0>a</0>", 1, 0, "unexpected marker 0");
}

TEST(ExtractMarkers, ContentIsTrimmed) {
  auto ex = extract_markers("x <1> drug </1> y", 1);
  EXPECT_EQ(ex.clean_text, "x  drug  y");
  EXPECT_EQ(cp_slice(ex.clean_text, ex.spans[0].start, ex.spans[0].end), "drug");
}

TEST(ProjectLabels, IdentityTranslation) {
  const auto s = fig3();
  const auto marked = insert_markers(s);
  EXPECT_EQ(project_labels(s, extract_markers(marked.text, marked.entity_count, s.id)), s);
}

TEST(ProjectLabels, ReorderedTranslationAttachesByOrdinal) {
  const auto s = fig3();
  const auto t = project_labels(
      s, extract_markers("她在服用<1>甲氧氯普胺</1>之前没有<2>运动障碍</2>", 2, s.id));
  // Translation reorders: <2> first.
  const auto r = project_labels(
      s, extract_markers("<2>Dyskinesie</2> trat nach <1>Metoclopramid</1> auf", 2, s.id));
  EXPECT_EQ(surface(t.text, t.entities[0]), "运动障碍");
  EXPECT_EQ(t.entities[0].label, "Disease");
  EXPECT_EQ(surface(t.text, t.entities[1]), "甲氧氯普胺");
  EXPECT_EQ(surface(r.text, r.entities[0]), "Dyskinesie");
  EXPECT_EQ(r.entities[0].label, "Disease");
  EXPECT_EQ(surface(r.text, r.entities[1]), "Metoclopramid");
  EXPECT_EQ(r.relations, s.relations);
  EXPECT_THROW(project_labels(s, extract_markers("<1>x</1>", 1)), MarkerError);
}

TEST(ProjectLabels, SyntheticCorpusRoundTrips) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto s = synth::annotated_sentence(rng, "s" + std::to_string(i));
    const auto marked = insert_markers(s);
    ASSERT_EQ(strip_markers(marked.text), s.text);
    ASSERT_EQ(project_labels(s, extract_markers(marked.text, marked.entity_count, s.id)), s);
  }
}

TEST(Json, SentenceRoundTrip) {
  const auto s = fig3();
  EXPECT_EQ(annotated_from_json(to_json(s)), s);
  EXPECT_THROW(annotated_from_json(nlohmann::ordered_json{{"id", "x"}}), Error);
}

TEST(Batch, MarkAndUnmarkWithQuarantine) {
  std::vector<nlohmann::ordered_json> records = {
      to_json(fig3()),
      to_json(AnnotatedSentence{"s2", "aspirin relieves pain", {{0, 7, "Chemical"}, {17, 21, "Disease"}}, {}}),
      to_json(AnnotatedSentence{"s3", "broken", {{0, 3, "A"}, {1, 4, "B"}}, {}}),
      to_json(AnnotatedSentence{"s4", "two\nlines", {}, {}}),
  };
  records[1]["source"] = "BC5CDR";
  auto marked = mark_dataset(records);
  ASSERT_EQ(marked.lines.size(), 2u);
  EXPECT_EQ(marked.ids, (std::vector<std::string>{"s1", "s2"}));
  ASSERT_EQ(marked.quarantine.size(), 2u);
  EXPECT_EQ(marked.quarantine[0], (QuarantineEntry{"s3", "overlapping entity spans", 2}));
  EXPECT_EQ(marked.quarantine[1].id, "s4");

  std::vector<std::string> translated = {
      "服用<1>甲氧氯普胺</1>后，她出现了<2>运动障碍</2>",
      "<1>阿司匹林</1>缓解疼痛",
  };
  auto out = unmark_dataset(records, marked.ids, translated);
  ASSERT_EQ(out.records.size(), 1u);
  EXPECT_EQ(out.records[0]["text"], "服用甲氧氯普胺后，她出现了运动障碍");
  ASSERT_EQ(out.quarantine.size(), 1u);
  EXPECT_EQ(out.quarantine[0], (QuarantineEntry{"s2", "missing marker 2", 2}));

  translated[1] = "<1>阿司匹林</1>缓解<2>疼痛</2>";
  out = unmark_dataset(records, marked.ids, translated);
  ASSERT_EQ(out.records.size(), 2u);
  EXPECT_EQ(out.records[1]["source"], "BC5CDR");
  EXPECT_EQ(out.records[1]["entities"][1]["start"], 6);

  EXPECT_THROW(unmark_dataset(records, marked.ids, {"one line"}), Error);
  EXPECT_THROW(unmark_dataset(records, {"nope"}, {"x"}), Error);
}

TEST(Batch, PassthroughSkipsMarkers) {
  std::vector<nlohmann::ordered_json> records = {{{"id", "d1"}, {"text", "document text"}, {"label", 3}}};
  auto marked = mark_dataset(records, true);
  EXPECT_EQ(marked.lines, std::vector<std::string>{"document text"});
  auto out = unmark_dataset(records, marked.ids, {"文档文本"}, true);
  ASSERT_EQ(out.records.size(), 1u);
  EXPECT_EQ(out.records[0]["text"], "文档文本");
  EXPECT_EQ(out.records[0]["label"], 3);
}

}  // namespace
}  // namespace kbx
