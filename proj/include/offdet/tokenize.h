#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace offdet {

// Splits on whitespace; each punctuation code point becomes its own token.
std::vector<std::string> BasicTokenize(std::string_view text, bool lowercase);

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";

// Subword vocabulary with dense ids. Special tokens ([PAD], [UNK], [CLS],
// [SEP]) must be present.
class WordPieceVocab {
 public:
  WordPieceVocab() = default;

  // Ids follow the order of `tokens`. Throws UsageError on duplicates or
  // missing special tokens.
  explicit WordPieceVocab(std::vector<std::string> tokens, std::string continuation_prefix = "##",
                          std::string unk_token = std::string(kUnkToken));

  // Newline-delimited tokens; id = zero-based line number.
  static WordPieceVocab Parse(std::istream& in);
  static WordPieceVocab Load(const std::string& path);
  void Write(std::ostream& out) const;

  bool Contains(std::string_view token) const { return ids_.contains(std::string(token)); }
  std::int32_t Id(std::string_view token) const;  // unk id when absent
  const std::string& Token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  const std::string& continuation_prefix() const { return prefix_; }
  const std::string& unk_token() const { return unk_; }
  std::int32_t unk_id() const { return unk_id_; }
  std::int32_t cls_id() const { return cls_id_; }
  std::int32_t sep_id() const { return sep_id_; }
  std::int32_t pad_id() const { return pad_id_; }

  bool operator==(const WordPieceVocab& other) const {
    return tokens_ == other.tokens_ && prefix_ == other.prefix_ && unk_ == other.unk_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::string prefix_ = "##";
  std::string unk_ = std::string(kUnkToken);
  std::int32_t unk_id_ = -1;
  std::int32_t cls_id_ = -1;
  std::int32_t sep_id_ = -1;
  std::int32_t pad_id_ = -1;
};

// Words longer than this many code points map straight to the unk token.
inline constexpr std::size_t kMaxWordPieceChars = 100;

// Greedy longest-match-first subword split of one whitespace-free word. If
// any position has no matching piece the whole word becomes [unk].
std::vector<std::string> WordPieceTokenize(std::string_view word, const WordPieceVocab& vocab);

// Builds a word-level vocabulary from a training corpus: the special tokens,
// every single code point seen (plain and with the continuation prefix), then
// words with count >= min_count by descending frequency (ties lexicographic)
// until `max_size` is reached.
WordPieceVocab BuildVocab(const std::vector<std::vector<std::string>>& tokenized_corpus,
                          std::size_t min_count, std::size_t max_size);

enum class NGramUnit { kWord, kPosTag, kChar };

struct NGramSpec {
  NGramUnit unit = NGramUnit::kWord;
  std::set<int> n_values = {1, 2, 3};

  void Validate() const;
};

// Separator between units of word/tag n-grams: U+241F SYMBOL FOR UNIT SEPARATOR.
inline constexpr std::string_view kNGramSeparator = "\xE2\x90\x9F";

// All contiguous windows for every n in spec.n_values, in (n, position) order.
// For kChar the units are joined with single spaces into one string and the
// windows run over its code points.
std::vector<std::string> ExtractNgrams(const std::vector<std::string>& units, const NGramSpec& spec);

}  // namespace offdet
