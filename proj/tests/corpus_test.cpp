#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "embmarker/corpus.hpp"
#include "test_support.hpp"

namespace em = embmarker;
using em::ErrorCode;
using em::testing::expect_error;

TEST(SplitWords, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(em::split_words("Hello, world!  hello-again 42x"),
            (std::vector<std::string>{"hello", "world", "hello", "again", "42x"}));
  EXPECT_TRUE(em::split_words("  ,;  ").empty());
}

TEST(Tokenize, DeduplicatesInFirstOccurrenceOrder) {
  auto t = em::tokenize("b a b c a");
  EXPECT_EQ(t.tokens(), (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_TRUE(t.contains("c"));
  EXPECT_FALSE(t.contains("d"));
}

TEST(FrequencyTable, MatchesBruteForceRecount) {
  em::SyntheticCorpusParams p;
  p.num_texts = 400;
  p.vocab_size = 300;
  p.seed = 11;
  const auto texts = em::generate_synthetic_corpus(p).text_list();
  const auto table = em::build_frequency_table(texts);

  std::set<std::string> vocab;
  for (const auto& t : texts)
    for (const auto& w : em::split_words(t)) vocab.insert(w);
  ASSERT_EQ(table.vocabulary_size(), vocab.size());
  for (const auto& w : vocab) {
    std::size_t docs = 0;
    for (const auto& t : texts) {
      const auto words = em::split_words(t);
      if (std::find(words.begin(), words.end(), w) != words.end()) ++docs;
    }
    EXPECT_EQ(table.frequency(w), static_cast<double>(docs) / static_cast<double>(texts.size())) << w;
  }
  EXPECT_EQ(table.frequency("not-a-word"), 0.0);
}

TEST(FrequencyTable, RepeatedWordCountsOncePerDocument) {
  const std::vector<std::string> texts{"a a a b", "a c", "c c"};
  const auto table = em::build_frequency_table(texts);
  EXPECT_DOUBLE_EQ(table.frequency("a"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(table.frequency("b"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(table.frequency("c"), 2.0 / 3.0);
}

TEST(FrequencyTable, EmptyCorpusThrows) {
  expect_error(ErrorCode::kEmptyCorpus, [] { em::build_frequency_table(std::vector<std::string>{}); });
}

TEST(FrequencyTable, BandIsInclusiveAndSorted) {
  const std::vector<std::string> texts{"z y", "z x", "w", "v"};
  const auto table = em::build_frequency_table(texts);
  EXPECT_EQ(table.words_in({0.25, 0.25}), (std::vector<std::string>{"v", "w", "x", "y"}));
  EXPECT_EQ(table.words_in({0.3, 0.5}), (std::vector<std::string>{"z"}));
}

class TriggerSelection : public ::testing::Test {
 protected:
  void SetUp() override {
    em::SyntheticCorpusParams p;
    p.num_texts = 2000;
    p.seed = 3;
    texts_ = em::generate_synthetic_corpus(p).text_list();
  }
  std::vector<std::string> texts_;
};

TEST_F(TriggerSelection, AllTriggersLieInTheBandAndAreDistinct) {
  const auto table = em::build_frequency_table(texts_);
  const em::Interval band{0.005, 0.01};
  const auto t = em::select_triggers(table, band, 20, 9);
  ASSERT_EQ(t.size(), 20u);
  EXPECT_EQ(std::set<std::string>(t.triggers.begin(), t.triggers.end()).size(), 20u);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_TRUE(band.contains(table.frequency(t.triggers[i])));
    EXPECT_EQ(t.frequencies[i], table.frequency(t.triggers[i]));
  }
}

TEST_F(TriggerSelection, DeterministicAndIndependentOfCorpusOrder) {
  auto shuffled = texts_;
  em::Rng rng(77);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = em::select_triggers(em::build_frequency_table(texts_), {0.005, 0.01}, 20, 5);
  const auto b = em::select_triggers(em::build_frequency_table(shuffled), {0.005, 0.01}, 20, 5);
  EXPECT_EQ(a.triggers, b.triggers);
  const auto c = em::select_triggers(em::build_frequency_table(texts_), {0.005, 0.01}, 20, 6);
  EXPECT_NE(a.triggers, c.triggers);
}

TEST_F(TriggerSelection, TooFewEligibleWords) {
  const auto table = em::build_frequency_table(texts_);
  const auto eligible = table.words_in({0.005, 0.01}).size();
  EXPECT_NO_THROW(em::select_triggers(table, {0.005, 0.01}, eligible, 1));
  try {
    em::select_triggers(table, {0.005, 0.01}, eligible + 1, 1);
    FAIL();
  } catch (const em::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientVocabulary);
    EXPECT_NE(std::string(e.what()).find(std::to_string(eligible)), std::string::npos);
  }
}

TEST_F(TriggerSelection, RejectsBadInterval) {
  const auto table = em::build_frequency_table(texts_);
  expect_error(ErrorCode::kInvalidArgument, [&] { em::select_triggers(table, {0.02, 0.01}, 1, 1); });
  expect_error(ErrorCode::kInvalidArgument, [&] { em::select_triggers(table, {-0.1, 0.5}, 1, 1); });
  expect_error(ErrorCode::kInvalidArgument, [&] { em::select_triggers(table, {0.1, 1.5}, 1, 1); });
}

TEST(TriggerSet, CountInUsesUniqueTokens) {
  em::TriggerSet t;
  t.triggers = {"a", "b", "c"};
  EXPECT_EQ(t.count_in(em::tokenize("a a b x")), 2u);
  EXPECT_EQ(t.count_in(em::tokenize("x y")), 0u);
}

TEST(TriggerSet, JsonRoundTrip) {
  em::TriggerSet t{{"w1", "w2"}, {0.006, 0.009}, {0.005, 0.01}, 42};
  nlohmann::json j = t;
  const auto back = j.get<em::TriggerSet>();
  EXPECT_EQ(back.triggers, t.triggers);
  EXPECT_EQ(back.frequencies, t.frequencies);
  EXPECT_EQ(back.interval, t.interval);
  EXPECT_EQ(back.seed, 42u);
}

TEST(SyntheticCorpus, DeterministicWithExpectedShape) {
  em::SyntheticCorpusParams p;
  p.num_texts = 300;
  p.num_classes = 3;
  p.vocab_size = 500;
  p.text_len = 20;
  p.seed = 4;
  const auto a = em::generate_synthetic_corpus(p);
  const auto b = em::generate_synthetic_corpus(p);
  ASSERT_EQ(a.texts.size(), 300u);
  EXPECT_EQ(a.text_list(), b.text_list());
  EXPECT_EQ(a.labels(), b.labels());
  const auto label_list = a.labels();
  const std::set<int> labels(label_list.begin(), label_list.end());
  EXPECT_EQ(labels, (std::set<int>{0, 1, 2}));
  for (const auto& t : a.texts) {
    const auto n = em::split_words(t.text).size();
    EXPECT_GE(n, 10u);
    EXPECT_LE(n, 30u);
  }
  p.seed = 5;
  EXPECT_NE(em::generate_synthetic_corpus(p).text_list(), a.text_list());
}

TEST(SyntheticCorpus, InvalidParameters) {
  em::SyntheticCorpusParams p;
  p.num_texts = 0;
  expect_error(ErrorCode::kInvalidArgument, [&] { em::generate_synthetic_corpus(p); });
  p = {};
  p.vocab_size = 2;
  p.num_classes = 4;
  expect_error(ErrorCode::kVocabTooSmall, [&] { em::generate_synthetic_corpus(p); });
}

TEST(LabeledTsv, RoundTrip) {
  em::SyntheticCorpusParams p;
  p.num_texts = 50;
  p.seed = 8;
  const auto corpus = em::generate_synthetic_corpus(p);
  std::stringstream buf;
  em::write_labeled_tsv(buf, corpus);
  const auto back = em::read_labeled_tsv(buf);
  EXPECT_EQ(back.text_list(), corpus.text_list());
  EXPECT_EQ(back.labels(), corpus.labels());
}

TEST(LabeledTsv, ReportsBadLines) {
  std::stringstream missing_tab("0 no tab here\n");
  expect_error(ErrorCode::kParseError, [&] { em::read_labeled_tsv(missing_tab); });
  std::stringstream bad_label("x\ttext\n");
  expect_error(ErrorCode::kParseError, [&] { em::read_labeled_tsv(bad_label); });
}

TEST(ReadDocuments, SkipsBlankLinesAndStripsCarriageReturns) {
  std::stringstream in("first doc\r\n\n   \nsecond\n");
  EXPECT_EQ(em::read_documents(in), (std::vector<std::string>{"first doc", "second"}));
}
