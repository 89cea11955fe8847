#include "offdet/preprocess.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>

#include "offdet/error.h"
#include "offdet/utf8.h"

namespace offdet {
namespace {

std::string_view TrimAscii(std::string_view s) {
  while (!s.empty() && utf8::IsAsciiSpace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && utf8::IsAsciiSpace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool IsAsciiSpaceByte(char c) { return utf8::IsAsciiSpace(static_cast<unsigned char>(c)); }

}  // namespace

void EmojiTable::Add(std::u32string sequence, std::string name) {
  if (sequence.empty()) throw UsageError("emoji table: empty sequence");
  if (name.size() < 3 || name.front() != ':' || name.back() != ':') {
    throw UsageError("emoji table: name must look like :name:, got '" + name + "'");
  }
  for (char c : name) {
    if (static_cast<unsigned char>(c) >= 0x80 || IsAsciiSpaceByte(c)) {
      throw UsageError("emoji table: name must be printable ASCII, got '" + name + "'");
    }
  }
  max_len_ = std::max(max_len_, sequence.size());
  entries_.insert_or_assign(std::move(sequence), std::move(name));
}

EmojiTable EmojiTable::Parse(std::istream& in) {
  EmojiTable table;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = TrimAscii(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError("emoji table: missing tab, line " + std::to_string(line_no));
    }
    std::u32string seq;
    std::string_view cps = line.substr(0, tab);
    while (!cps.empty()) {
      while (!cps.empty() && cps.front() == ' ') cps.remove_prefix(1);
      if (cps.empty()) break;
      std::size_t end = cps.find(' ');
      std::string_view tok = cps.substr(0, end);
      if (tok.size() > 2 && (tok[0] == 'U' || tok[0] == 'u') && tok[1] == '+') tok.remove_prefix(2);
      std::uint32_t cp = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), cp, 16);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || cp > 0x10FFFF) {
        throw DataError("emoji table: bad code point '" + std::string(tok) + "', line " +
                        std::to_string(line_no));
      }
      seq.push_back(static_cast<char32_t>(cp));
      cps.remove_prefix(end == std::string_view::npos ? cps.size() : end);
    }
    table.Add(std::move(seq), std::string(TrimAscii(line.substr(tab + 1))));
  }
  return table;
}

EmojiTable EmojiTable::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return Parse(in);
}

std::optional<std::pair<std::size_t, const std::string*>> EmojiTable::Match(
    std::u32string_view text, std::size_t pos) const {
  const std::size_t longest = std::min(max_len_, text.size() - pos);
  for (std::size_t len = longest; len > 0; --len) {
    const auto it = entries_.find(std::u32string(text.substr(pos, len)));
    if (it != entries_.end()) return std::make_pair(len, &it->second);
  }
  return std::nullopt;
}

void SegmenterLexicon::Add(const std::string& word, int rank) {
  if (word.empty()) return;
  const std::string lower = utf8::ToLower(word);
  if (rank_.emplace(lower, rank).second) max_len_ = std::max(max_len_, lower.size());
}

SegmenterLexicon SegmenterLexicon::Parse(std::istream& in) {
  SegmenterLexicon lex;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view w = TrimAscii(raw);
    if (!w.empty()) lex.Add(std::string(w), line_no);
  }
  return lex;
}

SegmenterLexicon SegmenterLexicon::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return Parse(in);
}

SegmenterLexicon SegmenterLexicon::FromWords(const std::vector<std::string>& words) {
  SegmenterLexicon lex;
  for (std::size_t i = 0; i < words.size(); ++i) lex.Add(words[i], static_cast<int>(i) + 1);
  return lex;
}

std::optional<int> SegmenterLexicon::Rank(std::string_view word) const {
  const auto it = rank_.find(std::string(word));
  if (it == rank_.end()) return std::nullopt;
  return it->second;
}

std::string ReplaceEmojis(std::string_view text, const EmojiTable& table) {
  if (table.size() == 0) return std::string(text);
  const std::u32string cps = utf8::Decode(text);
  std::string out;
  out.reserve(text.size() + 16);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (const auto m = table.Match(cps, i)) {
      out.push_back(' ');
      out += *m->second;
      out.push_back(' ');
      i += m->first;
    } else {
      utf8::AppendCodepoint(out, cps[i]);
      ++i;
    }
  }
  return out;
}

std::optional<std::vector<std::string>> SegmentWords(std::string_view lower,
                                                     const SegmenterLexicon& lexicon) {
  const std::size_t n = lower.size();
  if (n == 0) return std::nullopt;
  struct Cell {
    int words = std::numeric_limits<int>::max();
    long long rank_sum = 0;
    std::size_t back = 0;
  };
  // best[i] describes the best segmentation of lower[0, i).
  std::vector<Cell> best(n + 1);
  best[0].words = 0;
  const std::size_t max_len = lexicon.max_word_length();
  for (std::size_t end = 1; end <= n; ++end) {
    const std::size_t lo = end > max_len ? end - max_len : 0;
    // Iterating start ascending prefers the longest final word among equal costs.
    for (std::size_t start = lo; start < end; ++start) {
      if (best[start].words == std::numeric_limits<int>::max()) continue;
      const auto rank = lexicon.Rank(lower.substr(start, end - start));
      if (!rank) continue;
      const int words = best[start].words + 1;
      const long long rank_sum = best[start].rank_sum + *rank;
      Cell& cell = best[end];
      if (words < cell.words || (words == cell.words && rank_sum < cell.rank_sum)) {
        cell = {words, rank_sum, start};
      }
    }
  }
  if (best[n].words == std::numeric_limits<int>::max()) return std::nullopt;
  std::vector<std::string> words;
  for (std::size_t end = n; end > 0; end = best[end].back) {
    words.emplace_back(lower.substr(best[end].back, end - best[end].back));
  }
  return std::vector<std::string>(words.rbegin(), words.rend());
}

std::vector<std::string> SegmentHashtag(std::string_view body, const SegmenterLexicon& lexicon) {
  const std::u32string cps = utf8::Decode(body);
  std::vector<std::u32string> pieces;
  std::u32string cur;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (i > 0) {
      const char32_t prev = cps[i - 1];
      const char32_t c = cps[i];
      const bool lower_to_upper = utf8::IsLower(prev) && utf8::IsUpper(c);
      const bool acronym_end = utf8::IsUpper(prev) && utf8::IsUpper(c) && i + 1 < cps.size() &&
                               utf8::IsLower(cps[i + 1]);
      const bool letter_digit = (utf8::IsLetter(prev) && utf8::IsDigit(c)) ||
                                (utf8::IsDigit(prev) && utf8::IsLetter(c));
      if (lower_to_upper || acronym_end || letter_digit) {
        pieces.push_back(std::move(cur));
        cur.clear();
      }
    }
    cur.push_back(cps[i]);
  }
  if (!cur.empty()) pieces.push_back(std::move(cur));

  std::vector<std::string> out;
  for (const std::u32string& piece : pieces) {
    // Dictionary segmentation only for alphabetic pieces with at most a
    // leading capital; acronyms and numbers pass through.
    bool segmentable = true;
    for (std::size_t k = 0; k < piece.size(); ++k) {
      if (!utf8::IsLetter(piece[k]) || (k > 0 && utf8::IsUpper(piece[k]))) {
        segmentable = false;
        break;
      }
    }
    const std::string text = utf8::Encode(piece);
    std::optional<std::vector<std::string>> words;
    if (segmentable) {
      const std::string lower = utf8::ToLower(text);
      // Byte offsets are shared between `text` and `lower` only when lowering
      // preserves encoded length; otherwise the piece is kept whole.
      if (lower.size() == text.size()) words = SegmentWords(lower, lexicon);
    }
    if (!words) {
      out.push_back(text);
      continue;
    }
    std::size_t offset = 0;
    for (const std::string& w : *words) {
      out.push_back(text.substr(offset, w.size()));
      offset += w.size();
    }
  }
  return out;
}

std::string NormalizeHashtags(std::string_view text, const SegmenterLexicon& lexicon) {
  std::string out;
  out.reserve(text.size() + 8);
  std::size_t i = 0;
  while (i < text.size()) {
    if (IsAsciiSpaceByte(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && !IsAsciiSpaceByte(text[end])) ++end;
    const std::string_view token = text.substr(i, end - i);
    i = end;
    if (token.size() < 2 || token.front() != '#') {
      out += token;
      continue;
    }
    const std::u32string cps = utf8::Decode(token.substr(1));
    std::size_t body_len = 0;
    while (body_len < cps.size() && (utf8::IsLetter(cps[body_len]) || utf8::IsDigit(cps[body_len]))) {
      ++body_len;
    }
    if (body_len == 0) {
      out += token;
      continue;
    }
    const std::string body = utf8::Encode(std::u32string_view(cps).substr(0, body_len));
    const auto words = SegmentHashtag(body, lexicon);
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k > 0) out.push_back(' ');
      out += words[k];
    }
    out += utf8::Encode(std::u32string_view(cps).substr(body_len));
  }
  return out;
}

std::string CollapseWhitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (IsAsciiSpaceByte(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string Preprocess(std::string_view text, const EmojiTable& table,
                       const SegmenterLexicon& lexicon) {
  return CollapseWhitespace(NormalizeHashtags(ReplaceEmojis(text, table), lexicon));
}

}  // namespace offdet
