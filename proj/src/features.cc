#include "offdet/features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>

#include "offdet/binary_io.h"
#include "offdet/error.h"
#include "offdet/utf8.h"

namespace offdet {
namespace {

std::string_view TrimAscii(std::string_view s) {
  while (!s.empty() && utf8::IsAsciiSpace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && utf8::IsAsciiSpace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool IsVowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool AllPunctuation(std::string_view token) {
  const std::u32string cps = utf8::Decode(token);
  return !cps.empty() && std::all_of(cps.begin(), cps.end(), utf8::IsPunctuation);
}

bool IsNumberToken(std::string_view token) {
  bool digit = false;
  for (char c : token) {
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (c != '.' && c != ',') {
      return false;
    }
  }
  return digit;
}

bool HasLetterOrDigit(std::string_view token) {
  for (char32_t cp : utf8::Decode(token)) {
    if (utf8::IsLetter(cp) || utf8::IsDigit(cp)) return true;
  }
  return false;
}

bool HasLetter(std::string_view token) {
  for (char32_t cp : utf8::Decode(token)) {
    if (utf8::IsLetter(cp)) return true;
  }
  return false;
}

std::unordered_map<std::string, std::uint32_t> CountTerms(const std::vector<std::string>& grams) {
  std::unordered_map<std::string, std::uint32_t> counts;
  for (const auto& g : grams) ++counts[g];
  return counts;
}

constexpr std::uint8_t kUnitCodes[] = {0, 1, 2};

}  // namespace

// ---------------------------------------------------------------------------
// TF-IDF

TfIdfModel TfIdfModel::Fit(const std::vector<std::vector<std::string>>& corpus,
                           const NGramSpec& spec, int min_df) {
  spec.Validate();
  if (corpus.empty()) throw UsageError("fit_tfidf: empty corpus");
  if (min_df < 1) throw UsageError("fit_tfidf: min_df must be >= 1");

  std::unordered_map<std::string, std::uint64_t> df;
  for (const auto& doc : corpus) {
    for (const auto& [gram, count] : CountTerms(ExtractNgrams(doc, spec))) ++df[gram];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [gram, count] : df) {
    if (count >= static_cast<std::uint64_t>(min_df)) kept.emplace_back(gram, count);
  }
  std::sort(kept.begin(), kept.end());

  TfIdfModel m;
  m.spec_ = spec;
  m.min_df_ = min_df;
  m.n_docs_ = corpus.size();
  const double n = static_cast<double>(corpus.size());
  m.terms_.reserve(kept.size());
  m.idf_.reserve(kept.size());
  for (auto& [gram, count] : kept) {
    m.terms_.push_back(std::move(gram));
    m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  m.Index();
  return m;
}

void TfIdfModel::Index() {
  column_.clear();
  column_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) column_.emplace(terms_[i], static_cast<std::uint32_t>(i));
  fitted_ = true;
}

std::int64_t TfIdfModel::Column(const std::string& term) const {
  const auto it = column_.find(term);
  return it == column_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

SparseVector TfIdfModel::Transform(const std::vector<std::string>& units) const {
  if (!fitted_) throw UsageError("transform_tfidf: model not fitted");
  std::map<std::uint32_t, double> weights;
  for (const auto& [gram, count] : CountTerms(ExtractNgrams(units, spec_))) {
    const auto it = column_.find(gram);
    if (it == column_.end()) continue;
    weights[it->second] = static_cast<double>(count) * idf_[it->second];
  }
  double norm = 0.0;
  for (const auto& [col, w] : weights) norm += w * w;
  norm = std::sqrt(norm);
  SparseVector out;
  out.reserve(weights.size());
  for (const auto& [col, w] : weights) out.emplace_back(col, w / norm);
  return out;
}

std::vector<std::uint8_t> TfIdfModel::Save() const {
  if (!fitted_) throw UsageError("cannot save an unfitted TF-IDF model");
  ByteWriter w;
  w.Header(ModelKind::kTfIdf);
  w.U8(kUnitCodes[static_cast<int>(spec_.unit)]);
  w.U32(static_cast<std::uint32_t>(spec_.n_values.size()));
  for (int n : spec_.n_values) w.I32(n);
  w.I32(min_df_);
  w.U64(n_docs_);
  w.U64(terms_.size());
  for (const auto& t : terms_) w.Str(t);
  w.F64Array(idf_);
  return w.Take();
}

TfIdfModel TfIdfModel::Load(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.ExpectHeader(ModelKind::kTfIdf);
  TfIdfModel m;
  const std::uint8_t unit = r.U8();
  if (unit > 2) throw DataError("tfidf payload: bad n-gram unit");
  m.spec_.unit = static_cast<NGramUnit>(unit);
  m.spec_.n_values.clear();
  const std::uint32_t n_count = r.U32();
  for (std::uint32_t i = 0; i < n_count; ++i) m.spec_.n_values.insert(r.I32());
  m.min_df_ = r.I32();
  m.n_docs_ = r.U64();
  const std::uint64_t n_terms = r.U64();
  if (n_terms > r.remaining()) throw DataError("model payload: truncated");
  m.terms_.reserve(n_terms);
  for (std::uint64_t i = 0; i < n_terms; ++i) m.terms_.push_back(r.Str());
  m.idf_ = r.F64Array();
  r.ExpectEnd();
  if (m.idf_.size() != m.terms_.size()) throw DataError("tfidf payload: idf/vocabulary size mismatch");
  if (!std::is_sorted(m.terms_.begin(), m.terms_.end())) {
    throw DataError("tfidf payload: vocabulary not sorted");
  }
  m.Index();
  return m;
}

// ---------------------------------------------------------------------------
// POS tagging

const char* PosTagName(PosTag tag) {
  static constexpr const char* kNames[] = {"NOUN", "VERB", "ADJ", "ADV", "PRON",
                                           "DET",  "ADP",  "NUM", "PUNCT", "X"};
  return kNames[static_cast<int>(tag)];
}

PosTag ParsePosTag(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(PosTag::kX); ++i) {
    if (name == PosTagName(static_cast<PosTag>(i))) return static_cast<PosTag>(i);
  }
  throw DataError("unknown POS tag '" + std::string(name) + "'");
}

void PosLexicon::AddWord(const std::string& word, PosTag tag) { words_[utf8::ToLower(word)] = tag; }

void PosLexicon::AddSuffixRule(const std::string& suffix, PosTag tag) {
  suffixes_.emplace_back(utf8::ToLower(suffix), tag);
}

PosLexicon PosLexicon::Parse(std::istream& in) {
  PosLexicon lex;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = TrimAscii(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError("POS lexicon: missing tab, line " + std::to_string(line_no));
    }
    const std::string word(TrimAscii(line.substr(0, tab)));
    const PosTag tag = ParsePosTag(TrimAscii(line.substr(tab + 1)));
    if (word.size() > 1 && word.front() == '-') {
      lex.AddSuffixRule(word.substr(1), tag);
    } else {
      lex.AddWord(word, tag);
    }
  }
  return lex;
}

PosLexicon PosLexicon::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return Parse(in);
}

std::vector<PosTag> PosLexicon::Tag(const std::vector<std::string>& tokens) const {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const auto& token : tokens) {
    if (AllPunctuation(token)) {
      tags.push_back(PosTag::kPunct);
      continue;
    }
    if (IsNumberToken(token)) {
      tags.push_back(PosTag::kNum);
      continue;
    }
    const std::string lower = utf8::ToLower(token);
    if (const auto it = words_.find(lower); it != words_.end()) {
      tags.push_back(it->second);
      continue;
    }
    PosTag tag = PosTag::kX;
    for (const auto& [suffix, rule_tag] : suffixes_) {
      if (lower.size() > suffix.size() && lower.ends_with(suffix)) {
        tag = rule_tag;
        break;
      }
    }
    tags.push_back(tag);
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Sentiment

void SentimentLexicon::AddValence(const std::string& word, double valence) {
  if (!(valence >= -4.0 && valence <= 4.0)) {
    throw UsageError("sentiment lexicon: valence of '" + word + "' outside [-4, 4]");
  }
  valence_[utf8::ToLower(word)] = valence;
}

void SentimentLexicon::AddNegator(const std::string& word) { negators_.insert(utf8::ToLower(word)); }

void SentimentLexicon::AddIntensifier(const std::string& word, double boost) {
  boosts_[utf8::ToLower(word)] = boost;
}

SentimentLexicon SentimentLexicon::Parse(std::istream& in) {
  SentimentLexicon lex;
  std::string raw;
  std::size_t line_no = 0;
  const auto parse_real = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw DataError("sentiment lexicon: bad number '" + std::string(s) + "', line " +
                      std::to_string(line_no));
    }
    return v;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = TrimAscii(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError("sentiment lexicon: missing tab, line " + std::to_string(line_no));
    }
    const std::string word(TrimAscii(line.substr(0, tab)));
    std::string_view value = TrimAscii(line.substr(tab + 1));
    if (const std::size_t t2 = value.find('\t'); t2 != std::string_view::npos) value = value.substr(0, t2);
    if (value == "NEGATE") {
      lex.AddNegator(word);
    } else if (value.starts_with("BOOST:")) {
      lex.AddIntensifier(word, parse_real(value.substr(6)));
    } else {
      const double v = parse_real(value);
      if (!(v >= -4.0 && v <= 4.0)) {
        throw DataError("sentiment lexicon: valence outside [-4, 4], line " +
                        std::to_string(line_no));
      }
      lex.AddValence(word, v);
    }
  }
  return lex;
}

SentimentLexicon SentimentLexicon::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return Parse(in);
}

const double* SentimentLexicon::Valence(const std::string& word) const {
  const auto it = valence_.find(word);
  return it == valence_.end() ? nullptr : &it->second;
}

const double* SentimentLexicon::Boost(const std::string& word) const {
  const auto it = boosts_.find(word);
  return it == boosts_.end() ? nullptr : &it->second;
}

SentimentScores ScoreSentiment(const std::vector<std::string>& tokens, const SentimentLexicon& lex) {
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const auto& t : tokens) lower.push_back(utf8::ToLower(t));

  SentimentScores s;
  double signed_sum = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const double* valence = lex.Valence(lower[i]);
    if (valence == nullptr) {
      s.neu += 1.0;
      continue;
    }
    double v = *valence;
    if (i > 0) {
      if (const double* boost = lex.Boost(lower[i - 1])) v += v >= 0 ? *boost : -*boost;
    }
    const std::size_t window_start = i >= kNegationWindow ? i - kNegationWindow : 0;
    for (std::size_t k = window_start; k < i; ++k) {
      if (lex.IsNegator(lower[k])) {
        v = -v;
        break;
      }
    }
    if (v > 0) {
      s.pos += v;
    } else {
      s.neg += v;
    }
    signed_sum += v;
  }
  s.neg = std::fabs(s.neg);
  s.compound = signed_sum == 0.0 ? 0.0 : signed_sum / std::sqrt(signed_sum * signed_sum + kCompoundAlpha);
  return s;
}

// ---------------------------------------------------------------------------
// Readability

int CountSyllables(std::string_view word) {
  if (!HasLetter(word)) throw UsageError("count_syllables: '" + std::string(word) + "' has no letters");
  const std::string w = utf8::ToLower(word);
  int groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool vowel = IsVowel(c);
    if (vowel && !in_group) ++groups;
    in_group = vowel;
  }
  const std::size_t n = w.size();
  if (groups > 1 && n >= 2 && w[n - 1] == 'e' && !IsVowel(w[n - 2])) {
    // "-Cle" keeps its syllable (table, readable).
    const bool consonant_le = n >= 3 && w[n - 2] == 'l' && !IsVowel(w[n - 3]);
    if (!consonant_le) --groups;
  }
  return std::max(groups, 1);
}

LexicalCounts CountLexical(std::string_view text) {
  LexicalCounts c;
  c.n_chars = static_cast<double>(utf8::Length(text));
  for (const auto& token : BasicTokenize(text, false)) {
    if (!HasLetterOrDigit(token)) continue;
    c.n_words += 1;
    c.n_syllables += HasLetter(token) ? CountSyllables(token) : 1;
  }
  if (c.n_words > 0) {
    int sentences = 0;
    bool in_run = false;
    for (char ch : text) {
      const bool terminal = ch == '.' || ch == '!' || ch == '?';
      if (terminal && !in_run) ++sentences;
      in_run = terminal;
    }
    sentences = std::max(sentences, 1);
    c.fk_grade = 0.39 * (c.n_words / sentences) + 11.8 * (c.n_syllables / c.n_words) - 15.59;
  }
  return c;
}

double FleschKincaid(std::string_view text) {
  const LexicalCounts c = CountLexical(text);
  if (c.n_words == 0) throw UsageError("flesch_kincaid: text has no words");
  return c.fk_grade;
}

std::string SuffixStemmer::Normalize(std::string_view token) const {
  static constexpr std::string_view kSuffixes[] = {"ing", "ed", "ly", "s"};
  for (std::string_view suffix : kSuffixes) {
    if (token.size() >= suffix.size() + 3 && token.ends_with(suffix)) {
      if (suffix == "s" && token.ends_with("ss")) break;
      return std::string(token.substr(0, token.size() - suffix.size()));
    }
  }
  return std::string(token);
}

// ---------------------------------------------------------------------------
// Assembly

FeatureExtractor::FeatureExtractor(FeatureSpec spec, std::shared_ptr<const PosLexicon> pos,
                                   std::shared_ptr<const SentimentLexicon> sentiment)
    : spec_(std::move(spec)), pos_lex_(std::move(pos)), sentiment_lex_(std::move(sentiment)) {
  if (!pos_lex_ || !sentiment_lex_) throw UsageError("feature extractor: lexicons are required");
}

FeatureExtractor::Units FeatureExtractor::Analyze(std::string_view text) const {
  Units u;
  const auto tokens = BasicTokenize(text, true);
  u.words.reserve(tokens.size());
  for (const auto& t : tokens) u.words.push_back(stemmer_.Normalize(t));
  for (PosTag tag : pos_lex_->Tag(tokens)) u.tags.emplace_back(PosTagName(tag));
  u.chars.push_back(utf8::ToLower(text));
  return u;
}

void FeatureExtractor::Fit(std::span<const std::string> texts) {
  if (texts.empty()) throw UsageError("feature extractor: empty training corpus");
  std::vector<std::vector<std::string>> words, tags, chars;
  words.reserve(texts.size());
  tags.reserve(texts.size());
  chars.reserve(texts.size());
  for (const auto& t : texts) {
    Units u = Analyze(t);
    words.push_back(std::move(u.words));
    tags.push_back(std::move(u.tags));
    chars.push_back(std::move(u.chars));
  }
  word_ = TfIdfModel::Fit(words, {NGramUnit::kWord, spec_.word_n}, spec_.word_min_df);
  pos_ = TfIdfModel::Fit(tags, {NGramUnit::kPosTag, spec_.pos_n}, spec_.pos_min_df);
  char_ = TfIdfModel::Fit(chars, {NGramUnit::kChar, spec_.char_n}, spec_.char_min_df);
}

std::size_t FeatureExtractor::dimension() const {
  return kDenseFeatureCount + word_.vocabulary_size() + pos_.vocabulary_size() +
         char_.vocabulary_size();
}

FeatureVector FeatureExtractor::Transform(std::string_view text) const {
  if (!fitted()) throw UsageError("assemble_features: TF-IDF models are not fitted");
  FeatureVector fv;
  const LexicalCounts lc = CountLexical(text);
  const SentimentScores ss = ScoreSentiment(BasicTokenize(text, true), *sentiment_lex_);
  fv.dense = {lc.n_chars, lc.n_words, lc.n_syllables, lc.fk_grade,
              ss.pos,     ss.neg,     ss.neu,         ss.compound};

  const Units u = Analyze(text);
  std::uint32_t offset = 0;
  const auto append = [&](const TfIdfModel& m, const std::vector<std::string>& units) {
    for (const auto& [col, w] : m.Transform(units)) fv.sparse.emplace_back(col + offset, w);
    offset += static_cast<std::uint32_t>(m.vocabulary_size());
  };
  append(word_, u.words);
  append(pos_, u.tags);
  append(char_, u.chars);
  return fv;
}

SparseVector FeatureExtractor::Flatten(const FeatureVector& fv) {
  SparseVector row;
  row.reserve(kDenseFeatureCount + fv.sparse.size());
  for (std::size_t i = 0; i < kDenseFeatureCount; ++i) {
    if (fv.dense[i] != 0.0) row.emplace_back(static_cast<std::uint32_t>(i), fv.dense[i]);
  }
  for (const auto& [col, w] : fv.sparse) {
    row.emplace_back(col + static_cast<std::uint32_t>(kDenseFeatureCount), w);
  }
  return row;
}

std::vector<std::uint8_t> FeatureExtractor::SaveModels() const {
  ByteWriter w;
  w.Bytes(word_.Save());
  w.Bytes(pos_.Save());
  w.Bytes(char_.Save());
  return w.Take();
}

void FeatureExtractor::LoadModels(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  TfIdfModel word = TfIdfModel::Load(r.Bytes());
  TfIdfModel pos = TfIdfModel::Load(r.Bytes());
  TfIdfModel chr = TfIdfModel::Load(r.Bytes());
  r.ExpectEnd();
  if (word.spec().unit != NGramUnit::kWord || pos.spec().unit != NGramUnit::kPosTag ||
      chr.spec().unit != NGramUnit::kChar) {
    throw DataError("feature models: n-gram families out of order");
  }
  word_ = std::move(word);
  pos_ = std::move(pos);
  char_ = std::move(chr);
  spec_.word_n = word_.spec().n_values;
  spec_.pos_n = pos_.spec().n_values;
  spec_.char_n = char_.spec().n_values;
  spec_.word_min_df = word_.min_df();
  spec_.pos_min_df = pos_.min_df();
  spec_.char_min_df = char_.min_df();
}

}  // namespace offdet
