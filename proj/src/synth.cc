#include "offdet/synth.h"

#include <cmath>
#include <set>

#include "offdet/error.h"
#include "offdet/rng.h"

namespace offdet {
namespace {

std::uint64_t Fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string PseudoWord(SplitMix64& rng, int syllables) {
  static constexpr std::string_view kOnsets = "bcdfghklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::string w;
  for (int i = 0; i < syllables; ++i) {
    w.push_back(kOnsets[rng.Below(kOnsets.size())]);
    w.push_back(kVowels[rng.Below(kVowels.size())]);
  }
  if (rng.Bernoulli(0.4)) w.push_back(kOnsets[rng.Below(kOnsets.size())]);
  return w;
}

std::string Capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 32);
  return w;
}

template <typename T>
const T& Pick(const std::vector<T>& v, SplitMix64& rng) {
  return v[rng.Below(v.size())];
}

}  // namespace

void SynthSpec::Validate() const {
  if (n_samples < 10) throw UsageError("synth: n_samples must be >= 10");
  if (!(positive_ratio > 0.0 && positive_ratio < 1.0)) throw UsageError("synth: positive_ratio must be in (0, 1)");
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw UsageError("synth: noise_rate must be in [0, 1)");
  if (offensive_marker_words.empty() || benign_vocabulary.empty()) {
    throw UsageError("synth: marker and benign vocabularies must be non-empty");
  }
  const std::set<std::string> benign(benign_vocabulary.begin(), benign_vocabulary.end());
  for (const auto& m : offensive_marker_words) {
    if (benign.contains(m)) throw UsageError("synth: '" + m + "' is both a marker and a benign word");
  }
}

const std::vector<std::string>& SynthEmojiFixture() {
  static const std::vector<std::string> kEmoji = {
      "\xF0\x9F\x94\xA5",              // fire
      "\xF0\x9F\x98\x82",              // face with tears of joy
      "\xE2\x9D\xA4\xEF\xB8\x8F",      // red heart
      "\xF0\x9F\x91\x8D",              // thumbs up
      "\xF0\x9F\x99\x8F",              // folded hands
      "\xF0\x9F\x98\xAD",              // loudly crying face
      "\xF0\x9F\x98\xA1",              // pouting face
      "\xF0\x9F\x92\xAF",              // hundred points
  };
  return kEmoji;
}

Dataset GenerateSynthetic(const SynthSpec& spec) {
  spec.Validate();
  SplitMix64 rng(MixSeed(spec.seed, Fnv1a(spec.language)));

  const auto n = spec.n_samples;
  const auto n_pos = static_cast<std::size_t>(std::llround(spec.positive_ratio * static_cast<double>(n)));
  std::vector<std::uint8_t> is_positive(n, 0);
  std::fill_n(is_positive.begin(), n_pos, 1);
  Shuffle(std::span<std::uint8_t>(is_positive), rng);

  Dataset d;
  d.name = spec.name;
  d.language = spec.language;
  d.samples.reserve(n);
  const double stop = 1.0 / 12.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = is_positive[i] != 0;
    const bool noisy = rng.Bernoulli(spec.noise_rate);
    const bool has_marker = positive != noisy;

    std::size_t length = 1;
    while (!rng.Bernoulli(stop)) ++length;
    length = std::max<std::size_t>(length, 3);
    std::vector<std::string> words;
    words.reserve(length + 4);
    for (std::size_t k = 0; k < length; ++k) words.push_back(Pick(spec.benign_vocabulary, rng));
    if (has_marker) {
      const int markers = rng.Bernoulli(0.25) ? 2 : 1;
      for (int m = 0; m < markers; ++m) {
        words[rng.Below(words.size())] = Pick(spec.offensive_marker_words, rng);
      }
    }
    if (rng.Bernoulli(0.2)) words.insert(words.begin(), "@USER");
    if (rng.Bernoulli(spec.hashtag_rate)) {
      const std::string& a = Pick(spec.benign_vocabulary, rng);
      const std::string& b = Pick(spec.benign_vocabulary, rng);
      words.push_back(rng.Bernoulli(0.5) ? "#" + Capitalize(a) + Capitalize(b) : "#" + a);
    }
    if (rng.Bernoulli(spec.emoji_rate)) words.push_back(Pick(SynthEmojiFixture(), rng));

    std::string text;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k > 0) text.push_back(' ');
      text += words[k];
    }
    const double r = rng.Uniform();
    if (r < 0.4) {
      text.push_back('.');
    } else if (r < 0.5) {
      text.push_back('!');
    } else if (r < 0.6) {
      text.push_back('?');
    }

    Sample s;
    s.id = spec.language + "-" + std::to_string(i + 1);
    s.text = std::move(text);
    s.label = FromBool(positive);
    s.language = spec.language;
    s.source = spec.name;
    d.samples.push_back(std::move(s));
  }
  return d;
}

SynthVocabulary MakeSynthVocabulary(const std::string& language, std::size_t n_benign,
                                    std::size_t n_markers,
                                    const std::vector<std::string>& shared_markers) {
  SplitMix64 rng(Fnv1a("vocab:" + language));
  std::set<std::string> used(shared_markers.begin(), shared_markers.end());
  SynthVocabulary v;
  const auto draw = [&](std::vector<std::string>& out, std::size_t count) {
    while (out.size() < count) {
      std::string w = PseudoWord(rng, 2 + static_cast<int>(rng.Below(2)));
      if (used.insert(w).second) out.push_back(std::move(w));
    }
  };
  draw(v.benign, n_benign);
  draw(v.markers, n_markers);
  v.markers.insert(v.markers.end(), shared_markers.begin(), shared_markers.end());
  return v;
}

std::vector<std::string> SharedSynthMarkers() {
  return {"xaxxor", "vrokkz", "qzzarn", "brakzo", "mukkrex", "zorgqa"};
}

const std::vector<CorpusShape>& CompetitionCorpusShapes() {
  static const std::vector<CorpusShape> kShapes = {
      {"Off_en", "en", 9075418, 0.1258}, {"Off_ar", "ar", 7000, 0.1958},
      {"Off_da", "da", 3000, 0.1280},    {"Off_gr", "el", 8743, 0.2843},
      {"Off_tr", "tr", 31277, 0.1933},
  };
  return kShapes;
}

}  // namespace offdet
