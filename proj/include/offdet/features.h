#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "offdet/tokenize.h"

namespace offdet {

// Sorted (column, value) pairs.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

class TfIdfModel {
 public:
  TfIdfModel() = default;

  // Vocabulary = n-grams with document frequency >= min_df, sorted
  // lexicographically; idf(t) = ln((1 + N) / (1 + df(t))) + 1.
  static TfIdfModel Fit(const std::vector<std::vector<std::string>>& corpus, const NGramSpec& spec,
                        int min_df);

  // Raw counts times idf, L2-normalized; unknown n-grams are ignored.
  SparseVector Transform(const std::vector<std::string>& units) const;

  bool fitted() const { return fitted_; }
  std::size_t vocabulary_size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  const NGramSpec& spec() const { return spec_; }
  int min_df() const { return min_df_; }
  std::uint64_t document_count() const { return n_docs_; }

  // Column of an n-gram, or -1.
  std::int64_t Column(const std::string& term) const;

  std::vector<std::uint8_t> Save() const;
  static TfIdfModel Load(std::span<const std::uint8_t> bytes);

 private:
  void Index();

  NGramSpec spec_;
  int min_df_ = 1;
  std::uint64_t n_docs_ = 0;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> column_;
  bool fitted_ = false;
};

enum class PosTag : std::uint8_t { kNoun, kVerb, kAdj, kAdv, kPron, kDet, kAdp, kNum, kPunct, kX };

const char* PosTagName(PosTag tag);
PosTag ParsePosTag(std::string_view name);

// Word -> tag lookup plus ordered (suffix, tag) fallback rules.
class PosLexicon {
 public:
  void AddWord(const std::string& word, PosTag tag);
  void AddSuffixRule(const std::string& suffix, PosTag tag);

  // TSV rows `word<TAB>TAG`; a word starting with '-' declares a suffix rule
  // (rules apply in file order).
  static PosLexicon Parse(std::istream& in);
  static PosLexicon Load(const std::string& path);

  std::vector<PosTag> Tag(const std::vector<std::string>& tokens) const;

 private:
  std::unordered_map<std::string, PosTag> words_;
  std::vector<std::pair<std::string, PosTag>> suffixes_;
};

// Valences in [-4, 4], negators and intensifiers (word -> boost).
class SentimentLexicon {
 public:
  void AddValence(const std::string& word, double valence);
  void AddNegator(const std::string& word);
  void AddIntensifier(const std::string& word, double boost);

  // TSV rows `word<TAB>valence`. A second column of `NEGATE` marks a negator
  // and `BOOST:<x>` an intensifier.
  static SentimentLexicon Parse(std::istream& in);
  static SentimentLexicon Load(const std::string& path);

  const double* Valence(const std::string& word) const;
  bool IsNegator(const std::string& word) const { return negators_.contains(word); }
  const double* Boost(const std::string& word) const;

 private:
  std::unordered_map<std::string, double> valence_;
  std::unordered_set<std::string> negators_;
  std::unordered_map<std::string, double> boosts_;
};

struct SentimentScores {
  double pos = 0.0;
  double neg = 0.0;
  double neu = 0.0;
  double compound = 0.0;
};

inline constexpr int kNegationWindow = 3;
inline constexpr double kCompoundAlpha = 15.0;

// Reduced VADER: lexicon valences, sign flip for a negator among the three
// preceding tokens, boost from an immediately preceding intensifier, and
// compound = S / sqrt(S^2 + 15). Tokens are matched lowercased.
SentimentScores ScoreSentiment(const std::vector<std::string>& tokens, const SentimentLexicon& lex);

// Vowel groups (a, e, i, o, u, y), minus a silent final 'e'; floor 1.
int CountSyllables(std::string_view word);

// Grade level 0.39 * words/sentences + 11.8 * syllables/words - 15.59.
double FleschKincaid(std::string_view text);

// Word normalization applied before word n-grams.
class TokenNormalizer {
 public:
  virtual ~TokenNormalizer() = default;
  virtual std::string Normalize(std::string_view token) const = 0;
};

// Strips one of -ing, -ed, -ly, -s when at least three characters remain.
class SuffixStemmer final : public TokenNormalizer {
 public:
  std::string Normalize(std::string_view token) const override;
};

// Dense segment layout, in order.
inline constexpr std::array<const char*, 8> kDenseFeatureNames = {
    "n_chars", "n_words", "n_syllables", "fk_grade",
    "sent_pos", "sent_neg", "sent_neu", "sent_compound"};
inline constexpr std::size_t kDenseFeatureCount = kDenseFeatureNames.size();

struct FeatureVector {
  std::array<double, kDenseFeatureCount> dense{};
  // Columns relative to the sparse block: word n-grams first, then POS
  // n-grams, then character n-grams.
  SparseVector sparse;
};

struct FeatureSpec {
  std::set<int> word_n = {1, 2, 3};
  std::set<int> pos_n = {1, 2, 3};
  std::set<int> char_n = {1, 2, 3};
  int word_min_df = 2;
  int pos_min_df = 2;
  int char_min_df = 5;

  bool operator==(const FeatureSpec&) const = default;
};

struct LexicalCounts {
  double n_chars = 0;
  double n_words = 0;
  double n_syllables = 0;
  double fk_grade = 0;
};

// Character, word and syllable counts plus the grade level. Words are basic
// tokens containing a letter or digit; digit-only words count one syllable.
// Text without words yields a grade of 0.
LexicalCounts CountLexical(std::string_view text);

// Fits the three TF-IDF families on training texts and turns a
// (preprocessed) text into a FeatureVector. Transform never refits.
class FeatureExtractor {
 public:
  FeatureExtractor(FeatureSpec spec, std::shared_ptr<const PosLexicon> pos,
                   std::shared_ptr<const SentimentLexicon> sentiment);

  void Fit(std::span<const std::string> texts);
  FeatureVector Transform(std::string_view text) const;

  bool fitted() const { return word_.fitted() && pos_.fitted() && char_.fitted(); }
  // 8 dense columns followed by the three sparse families.
  std::size_t dimension() const;

  // Dense values at columns [0, 8), sparse entries shifted by 8.
  static SparseVector Flatten(const FeatureVector& fv);

  const TfIdfModel& word_model() const { return word_; }
  const TfIdfModel& pos_model() const { return pos_; }
  const TfIdfModel& char_model() const { return char_; }
  const FeatureSpec& spec() const { return spec_; }

  std::vector<std::uint8_t> SaveModels() const;
  void LoadModels(std::span<const std::uint8_t> bytes);

 private:
  struct Units {
    std::vector<std::string> words;
    std::vector<std::string> tags;
    std::vector<std::string> chars;
  };
  Units Analyze(std::string_view text) const;

  FeatureSpec spec_;
  std::shared_ptr<const PosLexicon> pos_lex_;
  std::shared_ptr<const SentimentLexicon> sentiment_lex_;
  SuffixStemmer stemmer_;
  TfIdfModel word_;
  TfIdfModel pos_;
  TfIdfModel char_;
};

}  // namespace offdet
