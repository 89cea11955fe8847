#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace offdet {

// Emoji code-point sequence -> textual name such as ":fire:".
class EmojiTable {
 public:
  // `name` must be non-empty ASCII of the form ":...:".
  void Add(std::u32string sequence, std::string name);

  // TSV rows `<hex codepoints separated by spaces><TAB><name>`; code points
  // may carry a "U+" prefix. Blank lines and lines starting with '#' are skipped.
  static EmojiTable Parse(std::istream& in);
  static EmojiTable Load(const std::string& path);

  // Longest entry starting at `pos`, as (length, name).
  std::optional<std::pair<std::size_t, const std::string*>> Match(std::u32string_view text,
                                                                  std::size_t pos) const;

  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::u32string, std::string> entries_;
  std::size_t max_len_ = 0;
};

// Ranked word list for hashtag segmentation; rank 1 is the most frequent word.
class SegmenterLexicon {
 public:
  void Add(const std::string& word, int rank);

  // One word per line; rank = line number. Duplicates keep the first rank.
  static SegmenterLexicon Parse(std::istream& in);
  static SegmenterLexicon Load(const std::string& path);
  static SegmenterLexicon FromWords(const std::vector<std::string>& words);

  // Rank of a lowercase word, or nullopt when absent.
  std::optional<int> Rank(std::string_view word) const;
  std::size_t max_word_length() const { return max_len_; }
  std::size_t size() const { return rank_.size(); }

 private:
  std::unordered_map<std::string, int> rank_;
  std::size_t max_len_ = 0;
};

// Replaces each leftmost-longest known emoji sequence by " <name> ".
std::string ReplaceEmojis(std::string_view text, const EmojiTable& table);

// Minimal-word-count segmentation of a lowercase string, ties broken by the
// smaller summed rank. Returns nullopt when no full segmentation exists.
std::optional<std::vector<std::string>> SegmentWords(std::string_view lower,
                                                     const SegmenterLexicon& lexicon);

// Splits a hashtag body (without '#'): first at case and letter/digit
// boundaries, then dictionary segmentation of pieces that are lowercase
// words (optionally capitalized). Pieces that cannot be segmented are kept.
std::vector<std::string> SegmentHashtag(std::string_view body, const SegmenterLexicon& lexicon);

// Rewrites every whitespace-delimited token starting with '#' followed by a
// letter or digit. The tag body is the maximal letter/digit run; whatever
// follows it in the token is kept verbatim.
std::string NormalizeHashtags(std::string_view text, const SegmenterLexicon& lexicon);

// Runs of ASCII whitespace become a single space; ends are trimmed.
std::string CollapseWhitespace(std::string_view text);

// ReplaceEmojis, then NormalizeHashtags, then CollapseWhitespace.
std::string Preprocess(std::string_view text, const EmojiTable& table,
                       const SegmenterLexicon& lexicon);

}  // namespace offdet
