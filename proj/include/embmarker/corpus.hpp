#pragma once

// Tokenization, document-frequency statistics, trigger selection and the
// synthetic labeled corpus used by the desk-scale experiments.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "embmarker/error.hpp"
#include "embmarker/random.hpp"

namespace embmarker {

// Every word occurrence of `text`, lowercased, in order. Any character that
// is not an ASCII letter or digit separates words.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

// The unique words of one text, in first-occurrence order.
class TokenSet {
 public:
  TokenSet() = default;

  static TokenSet from_words(std::span<const std::string> words) {
    TokenSet set;
    std::unordered_set<std::string_view> seen;
    for (const auto& w : words) {
      if (w.empty()) continue;
      if (seen.insert(w).second) set.tokens_.push_back(w);
    }
    return set;
  }

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  bool contains(std::string_view word) const {
    return std::find(tokens_.begin(), tokens_.end(), word) != tokens_.end();
  }

  friend bool operator==(const TokenSet&, const TokenSet&) = default;

 private:
  std::vector<std::string> tokens_;
};

inline TokenSet tokenize(std::string_view text) {
  auto words = split_words(text);
  return TokenSet::from_words(words);
}

struct Interval {
  double lo = 0.005;
  double hi = 0.01;

  bool contains(double f) const { return lo <= f && f <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Document frequency over a corpus: the fraction of texts containing a word.
class FrequencyTable {
 public:
  FrequencyTable(std::map<std::string, std::size_t> doc_counts,
                 std::size_t corpus_size)
      : doc_counts_(std::move(doc_counts)), corpus_size_(corpus_size) {
    if (corpus_size_ == 0) throw Error(ErrorCode::kEmptyCorpus, "corpus has no texts");
  }

  std::size_t corpus_size() const { return corpus_size_; }
  std::size_t vocabulary_size() const { return doc_counts_.size(); }
  const std::map<std::string, std::size_t>& doc_counts() const { return doc_counts_; }

  // 0 for words that never occur.
  double frequency(std::string_view word) const {
    auto it = doc_counts_.find(std::string(word));
    if (it == doc_counts_.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(corpus_size_);
  }

  // Words whose frequency lies in `band`, lexicographically sorted.
  std::vector<std::string> words_in(const Interval& band) const {
    std::vector<std::string> out;
    for (const auto& [word, count] : doc_counts_) {
      double f = static_cast<double>(count) / static_cast<double>(corpus_size_);
      if (band.contains(f)) out.push_back(word);
    }
    return out;
  }

 private:
  std::map<std::string, std::size_t> doc_counts_;
  std::size_t corpus_size_;
};

template <typename Texts>
FrequencyTable build_frequency_table(const Texts& corpus) {
  std::map<std::string, std::size_t> counts;
  std::size_t size = 0;
  for (const auto& text : corpus) {
    ++size;
    for (const auto& word : tokenize(text)) ++counts[word];
  }
  if (size == 0) throw Error(ErrorCode::kEmptyCorpus, "corpus has no texts");
  return FrequencyTable(std::move(counts), size);
}

struct TriggerSet {
  std::vector<std::string> triggers;
  std::vector<double> frequencies;  // parallel to `triggers`
  Interval interval;
  std::uint64_t seed = 0;

  std::size_t size() const { return triggers.size(); }

  bool contains(std::string_view word) const {
    return std::find(triggers.begin(), triggers.end(), word) != triggers.end();
  }

  // |tokens ∩ T|; the token set is already deduplicated.
  std::size_t count_in(const TokenSet& tokens) const {
    return static_cast<std::size_t>(std::count_if(
        tokens.begin(), tokens.end(), [&](const std::string& w) { return contains(w); }));
  }
};

// Samples n distinct words uniformly from the words whose document frequency
// lies in `interval`. The eligible set is sorted before sampling, so the
// result depends only on (table contents, interval, n, seed).
inline TriggerSet select_triggers(const FrequencyTable& table, const Interval& interval,
                                  std::size_t n, std::uint64_t seed) {
  if (!(0.0 <= interval.lo && interval.lo < interval.hi && interval.hi <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "frequency interval must satisfy 0 <= lo < hi <= 1");
  }
  auto eligible = table.words_in(interval);
  if (eligible.size() < n) {
    throw Error(ErrorCode::kInsufficientVocabulary,
                "only " + std::to_string(eligible.size()) + " words in [" +
                    std::to_string(interval.lo) + ", " + std::to_string(interval.hi) +
                    "], need " + std::to_string(n));
  }
  Rng rng(seed);
  TriggerSet set{.triggers = {}, .frequencies = {}, .interval = interval, .seed = seed};
  for (std::size_t idx : sample_without_replacement(eligible.size(), n, rng)) {
    set.triggers.push_back(eligible[idx]);
    set.frequencies.push_back(table.frequency(eligible[idx]));
  }
  return set;
}

inline void to_json(nlohmann::json& j, const TriggerSet& t) {
  j = nlohmann::json{{"triggers", t.triggers},
                     {"interval", {t.interval.lo, t.interval.hi}},
                     {"seed", t.seed},
                     {"frequencies", t.frequencies}};
}

inline void from_json(const nlohmann::json& j, TriggerSet& t) {
  t.triggers = j.at("triggers").get<std::vector<std::string>>();
  auto iv = j.at("interval").get<std::vector<double>>();
  if (iv.size() != 2) throw Error(ErrorCode::kParseError, "interval must have two entries");
  t.interval = {iv[0], iv[1]};
  t.seed = j.at("seed").get<std::uint64_t>();
  t.frequencies = j.value("frequencies", std::vector<double>(t.triggers.size(), 0.0));
}

// --- labeled corpora --------------------------------------------------------

struct LabeledText {
  std::string text;
  int label = 0;
};

struct LabeledCorpus {
  std::vector<LabeledText> texts;
  int num_classes = 0;
  std::size_t vocab_size = 0;
  std::uint64_t seed = 0;

  std::vector<std::string> text_list() const {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(t.text);
    return out;
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(t.label);
    return out;
  }
};

struct SyntheticCorpusParams {
  std::size_t num_texts = 5000;
  int num_classes = 4;
  std::size_t vocab_size = 2000;
  std::size_t text_len = 30;
  std::uint64_t seed = 0;
};

inline std::string synthetic_word(std::size_t index, std::size_t vocab_size) {
  std::size_t width = std::to_string(vocab_size > 0 ? vocab_size - 1 : 0).size();
  std::string digits = std::to_string(index);
  return "w" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

namespace detail {

// Background word distribution: shifted Zipf over word rank. With the default
// shape, document frequencies for 30-token texts run from roughly 0.3% at the
// tail to roughly 30% at the head.
inline constexpr double kZipfOffset = 15.0;
inline constexpr double kClassTokenShare = 0.35;

inline std::size_t class_block_size(std::size_t vocab_size, int num_classes) {
  std::size_t per_class = vocab_size / (static_cast<std::size_t>(num_classes) * 10);
  return std::clamp<std::size_t>(per_class, 1, 20);
}

}  // namespace detail

// Each class draws a share of its tokens from its own block of words (taken
// from the rare tail of the background ranking) and the rest from a shared
// shifted-Zipf background, so bag-of-words embeddings separate the classes.
inline LabeledCorpus generate_synthetic_corpus(const SyntheticCorpusParams& p) {
  if (p.num_texts == 0 || p.num_classes <= 0 || p.vocab_size == 0 || p.text_len == 0) {
    throw Error(ErrorCode::kInvalidArgument, "corpus counts must be positive");
  }
  if (p.vocab_size < static_cast<std::size_t>(p.num_classes)) {
    throw Error(ErrorCode::kVocabTooSmall, "vocab_size " + std::to_string(p.vocab_size) +
                                               " < num_classes " + std::to_string(p.num_classes));
  }
  const std::size_t block = detail::class_block_size(p.vocab_size, p.num_classes);
  const std::size_t reserved = std::min(p.vocab_size, block * static_cast<std::size_t>(p.num_classes));

  std::vector<double> weights(p.vocab_size);
  for (std::size_t r = 0; r < p.vocab_size; ++r) {
    weights[r] = 1.0 / (static_cast<double>(r + 1) + detail::kZipfOffset);
  }
  std::discrete_distribution<std::size_t> background(weights.begin(), weights.end());

  // Block of class c: indices [vocab - reserved + c*block, ... + block), wrapping
  // onto the shared tail when the vocabulary is small.
  auto block_word = [&](int c, std::size_t j) {
    std::size_t base = p.vocab_size - reserved;
    return base + (static_cast<std::size_t>(c) * block + j) % reserved;
  };

  Rng rng(p.seed);
  std::uniform_int_distribution<int> label_dist(0, p.num_classes - 1);
  std::uniform_int_distribution<std::size_t> len_dist(std::max<std::size_t>(1, p.text_len - p.text_len / 2),
                                                      p.text_len + p.text_len / 2);
  std::uniform_int_distribution<std::size_t> block_dist(0, block - 1);
  std::bernoulli_distribution from_class(detail::kClassTokenShare);

  LabeledCorpus corpus{.texts = {}, .num_classes = p.num_classes, .vocab_size = p.vocab_size, .seed = p.seed};
  corpus.texts.reserve(p.num_texts);
  for (std::size_t i = 0; i < p.num_texts; ++i) {
    int label = label_dist(rng);
    std::size_t len = len_dist(rng);
    std::string text;
    for (std::size_t k = 0; k < len; ++k) {
      std::size_t w = from_class(rng) ? block_word(label, block_dist(rng)) : background(rng);
      if (!text.empty()) text.push_back(' ');
      text += synthetic_word(w, p.vocab_size);
    }
    corpus.texts.push_back({std::move(text), label});
  }
  return corpus;
}

// --- file formats -----------------------------------------------------------

inline std::string strip_line_ending(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return line;
}

// One document per line; blank lines are skipped.
inline std::vector<std::string> read_documents(std::istream& in) {
  std::vector<std::string> docs;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_line_ending(std::move(line));
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    docs.push_back(std::move(line));
  }
  return docs;
}

// `label<TAB>text` per line.
inline LabeledCorpus read_labeled_tsv(std::istream& in) {
  LabeledCorpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_line_ending(std::move(line));
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": missing tab");
    }
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": bad label");
    }
    if (label < 0) throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": negative label");
    std::string text = line.substr(tab + 1);
    if (text.empty()) throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": empty text");
    corpus.num_classes = std::max(corpus.num_classes, label + 1);
    corpus.texts.push_back({std::move(text), label});
  }
  return corpus;
}

inline void write_labeled_tsv(std::ostream& out, const LabeledCorpus& corpus) {
  for (const auto& t : corpus.texts) out << t.label << '\t' << t.text << '\n';
}

}  // namespace embmarker
