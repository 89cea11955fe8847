#include "offdet/tokenize.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "offdet/error.h"
#include "offdet/utf8.h"

namespace offdet {

std::vector<std::string> BasicTokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string cur;
  const auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (char32_t cp : utf8::Decode(text)) {
    if (utf8::IsAsciiSpace(cp) || cp == 0xA0 || cp == 0x3000) {
      flush();
    } else if (utf8::IsPunctuation(cp)) {
      flush();
      utf8::AppendCodepoint(cur, cp);
      flush();
    } else {
      utf8::AppendCodepoint(cur, lowercase ? utf8::ToLower(cp) : cp);
    }
  }
  flush();
  return tokens;
}

WordPieceVocab::WordPieceVocab(std::vector<std::string> tokens, std::string continuation_prefix,
                               std::string unk_token)
    : tokens_(std::move(tokens)), prefix_(std::move(continuation_prefix)), unk_(std::move(unk_token)) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw UsageError("vocab: duplicate token '" + tokens_[i] + "'");
    }
  }
  const auto require = [&](std::string_view t) {
    const auto it = ids_.find(std::string(t));
    if (it == ids_.end()) throw UsageError("vocab: missing special token " + std::string(t));
    return it->second;
  };
  unk_id_ = require(unk_);
  cls_id_ = require(kClsToken);
  sep_id_ = require(kSepToken);
  pad_id_ = require(kPadToken);
}

WordPieceVocab WordPieceVocab::Parse(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return WordPieceVocab(std::move(tokens));
}

WordPieceVocab WordPieceVocab::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return Parse(in);
}

void WordPieceVocab::Write(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

std::int32_t WordPieceVocab::Id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_id_ : it->second;
}

std::vector<std::string> WordPieceTokenize(std::string_view word, const WordPieceVocab& vocab) {
  const std::u32string cps = utf8::Decode(word);
  if (cps.size() > kMaxWordPieceChars) return {vocab.unk_token()};

  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < cps.size()) {
    std::size_t end = cps.size();
    std::string match;
    while (start < end) {
      std::string candidate = utf8::Encode(std::u32string_view(cps).substr(start, end - start));
      if (start > 0) candidate = vocab.continuation_prefix() + candidate;
      if (vocab.Contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (match.empty()) return {vocab.unk_token()};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

WordPieceVocab BuildVocab(const std::vector<std::vector<std::string>>& tokenized_corpus,
                          std::size_t min_count, std::size_t max_size) {
  std::map<std::string, std::size_t> word_counts;
  std::set<char32_t> chars;
  for (const auto& doc : tokenized_corpus) {
    for (const auto& w : doc) {
      ++word_counts[w];
      for (char32_t cp : utf8::Decode(w)) chars.insert(cp);
    }
  }
  std::vector<std::string> tokens = {std::string(kPadToken), std::string(kUnkToken),
                                     std::string(kClsToken), std::string(kSepToken)};
  std::set<std::string> present(tokens.begin(), tokens.end());
  const auto push = [&](std::string t) {
    if (tokens.size() < max_size && present.insert(t).second) tokens.push_back(std::move(t));
  };
  for (char32_t cp : chars) {
    std::string s;
    utf8::AppendCodepoint(s, cp);
    push(s);
    push("##" + s);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(word_counts.begin(), word_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [word, count] : ranked) {
    if (count < min_count) break;
    push(word);
  }
  return WordPieceVocab(std::move(tokens));
}

void NGramSpec::Validate() const {
  if (n_values.empty()) throw UsageError("n-gram spec: n_values must not be empty");
  for (int n : n_values) {
    if (n < 1) throw UsageError("n-gram spec: every n must be >= 1");
  }
}

std::vector<std::string> ExtractNgrams(const std::vector<std::string>& units, const NGramSpec& spec) {
  spec.Validate();
  std::vector<std::string> out;
  if (spec.unit == NGramUnit::kChar) {
    std::u32string joined;
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (i > 0) joined.push_back(U' ');
      joined += utf8::Decode(units[i]);
    }
    for (int n : spec.n_values) {
      const auto width = static_cast<std::size_t>(n);
      for (std::size_t i = 0; i + width <= joined.size(); ++i) {
        out.push_back(utf8::Encode(std::u32string_view(joined).substr(i, width)));
      }
    }
    return out;
  }
  for (int n : spec.n_values) {
    const auto width = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + width <= units.size(); ++i) {
      std::string gram = units[i];
      for (std::size_t k = 1; k < width; ++k) {
        gram += kNGramSeparator;
        gram += units[i + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

}  // namespace offdet
