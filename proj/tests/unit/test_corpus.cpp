#include <gtest/gtest.h>

#include <sstream>

#include "partisan/corpus.hpp"
#include "partisan/errors.hpp"
#include "support/temp_dir.hpp"

using namespace partisan;

namespace {

Corpus parse(const std::string& s) {
  std::istringstream in(s);
  return parse_corpus(in, "t", "mem.jsonl");
}

std::string line(const std::string& id, const std::string& ideology, const std::string& extra = "") {
  return R"({"id":")" + id + R"(","text":"hello )" + id + R"(","ideology":")" + ideology +
         R"(","source":"real")" + extra + "}\n";
}

Corpus four() {
  return parse(line("a", "liberal", R"(,"topic":"x")") + line("b", "conservative", R"(,"topic":"x")") +
               line("c", "liberal", R"(,"topic":"y")") + line("d", "conservative"));
}

}  // namespace

TEST(ClassSets, StanceIsFixedSingleLabel) {
  auto s = stance_classes();
  EXPECT_EQ(s.classes, (std::vector<std::string>{"negative", "neutral", "positive"}));
  EXPECT_FALSE(s.multi_label);
}

TEST(ClassSets, EmotionHasElevenClasses) {
  auto e = emotion_classes();
  EXPECT_EQ(e.classes, (std::vector<std::string>{"anticipation", "joy", "love", "trust", "optimism",
                                                 "anger", "disgust", "fear", "sadness", "pessimism",
                                                 "surprise"}));
  EXPECT_TRUE(e.multi_label);
}

TEST(ClassSets, MoralFoundationsTenOrFive) {
  EXPECT_EQ(moral_foundation_classes().size(), 10u);
  auto c = moral_foundation_classes(true);
  EXPECT_EQ(c.classes, (std::vector<std::string>{"care/harm", "fairness/cheating", "loyalty/betrayal",
                                                 "authority/subversion", "purity/degradation"}));
  EXPECT_EQ(collapse_moral_label("degradation"), "purity/degradation");
  EXPECT_EQ(collapse_moral_label("care/harm"), "care/harm");
  EXPECT_THROW(collapse_moral_label("honesty"), ValidationError);
}

TEST(ClassSets, NamesUniqueAndAtLeastTwo) {
  for (const auto& cs : {stance_classes(), emotion_classes(), moral_foundation_classes(false),
                         moral_foundation_classes(true)}) {
    EXPECT_GE(cs.size(), 2u);
    std::set<std::string> u(cs.classes.begin(), cs.classes.end());
    EXPECT_EQ(u.size(), cs.size());
  }
}

TEST(ClassRegistry, CollapseFoldsPolesByOr) {
  ClassRegistry reg(true);
  EXPECT_EQ(reg.canonical_labels(FeatureKind::moral_foundation, {"harm", "care", "purity"}),
            (std::vector<std::string>{"care/harm", "purity/degradation"}));
  ClassRegistry plain;
  EXPECT_THROW(plain.canonical_labels(FeatureKind::stance, {"positive", "negative"}), ValidationError);
  EXPECT_THROW(plain.canonical_labels(FeatureKind::emotion, {"boredom"}), ValidationError);
}

TEST(LoadCorpus, TwoValidLines) {
  auto c = parse(line("t1", "liberal") + line("t2", "conservative"));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.instances[1].ideology, Ideology::conservative);
}

TEST(LoadCorpus, DuplicateIdNamesSecondLine) {
  try {
    parse(line("t1", "liberal") + line("t2", "liberal") + line("t1", "conservative"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("t1"), std::string::npos);
  }
}

TEST(LoadCorpus, EmptyFileIsEmptyCorpus) {
  EXPECT_EQ(parse("").size(), 0u);
  EXPECT_EQ(parse("\n\n").size(), 0u);
}

TEST(LoadCorpus, RejectsBadRows) {
  EXPECT_THROW(parse(line("a", "centrist")), ParseError);
  EXPECT_THROW(parse(R"({"id":"a","text":"   ","ideology":"liberal","source":"real"})" "\n"), ParseError);
  EXPECT_THROW(parse(R"({"id":"a","text":"x","ideology":"liberal"})" "\n"), ParseError);
  try {
    parse(line("a", "liberal") + "{not json\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadCorpus, MissingFileIsIoError) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), Error);
}

TEST(LoadCorpus, RoundTripPreservesUnknownFields) {
  auto c = parse(R"({"id":"a","text":"x","ideology":"liberal","source":"generated","topic":"t",)"
                 R"("entities":["Trump"],"created_at":1600000000,"retweets":7,"meta":{"k":[1,2]}})" "\n");
  std::ostringstream out;
  write_corpus(c, out);
  auto again = parse(out.str());
  EXPECT_EQ(c, again);
  EXPECT_EQ(again.instances[0].extra.at("retweets"), 7);
  EXPECT_NE(out.str().find("\"meta\""), std::string::npos);
}

TEST(LoadCorpus, FileRoundTrip) {
  test_support::TempDir dir;
  auto c = four();
  save_corpus(c, dir.file("c.jsonl"));
  auto back = load_corpus(dir.file("c.jsonl"));
  EXPECT_EQ(back.instances, c.instances);
}

TEST(FilterCorpus, ByIdeology) {
  EXPECT_EQ(filter_corpus(four(), {Ideology::liberal, {}, {}}).size(), 2u);
}

TEST(FilterCorpus, AbsentTopicGivesEmpty) {
  EXPECT_EQ(filter_corpus(four(), {{}, std::string("zzz"), {}}).size(), 0u);
}

TEST(FilterCorpus, NoPredicatesIsIdentity) {
  auto c = four();
  EXPECT_EQ(filter_corpus(c, {}).instances, c.instances);
}

TEST(FilterCorpus, IdeologiesPartitionInOrder) {
  auto c = four();
  auto lib = filter_corpus(c, {Ideology::liberal, {}, {}});
  auto con = filter_corpus(c, {Ideology::conservative, {}, {}});
  EXPECT_EQ(lib.size() + con.size(), c.size());
  for (const auto& t : lib.instances) {
    for (const auto& u : con.instances) EXPECT_NE(t.id, u.id);
  }
  EXPECT_EQ(lib.instances[0].id, "a");
  EXPECT_EQ(lib.instances[1].id, "c");
}

TEST(FilterCorpus, CombinedPredicates) {
  auto r = filter_corpus(four(), {Ideology::liberal, std::string("y"), Source::real});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.instances[0].id, "c");
  EXPECT_EQ(filter_corpus(four(), {{}, {}, Source::generated}).size(), 0u);
}
