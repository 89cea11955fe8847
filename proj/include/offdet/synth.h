#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offdet/corpus.h"

namespace offdet {

struct SynthSpec {
  std::string name = "synth";
  std::size_t n_samples = 1000;
  double positive_ratio = 0.2;
  std::string language = "en";
  std::vector<std::string> offensive_marker_words;
  std::vector<std::string> benign_vocabulary;
  // Probability that a sample's marker content disagrees with its label.
  double noise_rate = 0.0;
  std::uint64_t seed = 0;
  double hashtag_rate = 0.3;
  double emoji_rate = 0.3;

  void Validate() const;
};

// Exactly round(ratio * n) positives at seeded random positions. Each text is
// a bag of benign words with geometric length (mean 12, at least 3). A sample
// carries marker words iff (positive XOR noise), with noise drawn per sample
// at `noise_rate`; marker carriers get one marker, or two with probability
// 1/4, regardless of label. Hashtags, emoji, mentions and sentence
// punctuation are added independently of the label.
Dataset GenerateSynthetic(const SynthSpec& spec);

// Emoji used by the generator (all present in the bundled emoji table).
const std::vector<std::string>& SynthEmojiFixture();

struct SynthVocabulary {
  std::vector<std::string> benign;
  std::vector<std::string> markers;
};

// Deterministic pseudo-words for a language tag. Markers and benign words are
// disjoint; `shared_markers` are appended to the markers.
SynthVocabulary MakeSynthVocabulary(const std::string& language, std::size_t n_benign,
                                    std::size_t n_markers,
                                    const std::vector<std::string>& shared_markers = {});

// Marker words common to every synthetic language.
std::vector<std::string> SharedSynthMarkers();

// A per-language corpus row of the published dataset table.
struct CorpusShape {
  std::string name;      // e.g. "Off_da"
  std::string language;  // ISO 639-1
  std::uint64_t count;   // published sample count
  double positive_ratio;
};

// The five per-language competition corpora (English, Arabic, Danish, Greek,
// Turkish) with their published sizes and positive ratios.
const std::vector<CorpusShape>& CompetitionCorpusShapes();

}  // namespace offdet
