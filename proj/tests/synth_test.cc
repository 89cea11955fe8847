#include "offdet/synth.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "offdet/corpus.h"
#include "offdet/error.h"
#include "offdet/eval.h"
#include "offdet/preprocess.h"
#include "offdet/tokenize.h"

namespace offdet {
namespace {

SynthSpec DanishSpec(double noise) {
  const SynthVocabulary v = MakeSynthVocabulary("da", 300, 8);
  SynthSpec s;
  s.name = "Off_da";
  s.language = "da";
  s.n_samples = 3000;
  s.positive_ratio = 0.128;
  s.benign_vocabulary = v.benign;
  s.offensive_marker_words = v.markers;
  s.noise_rate = noise;
  s.seed = 7;
  return s;
}

bool HasMarker(const Sample& s, const std::set<std::string>& markers) {
  for (const std::string& t : BasicTokenize(s.text, true))
    if (markers.contains(t)) return true;
  return false;
}

TEST(Synth, DanishShape) {
  const Dataset d = GenerateSynthetic(DanishSpec(0.1));
  const DatasetStats st = ComputeStats(d);
  EXPECT_EQ(st.count, 3000u);
  EXPECT_LE(std::abs(st.positive_ratio - 0.128), 1.0 / std::sqrt(3000.0));
  EXPECT_NEAR(100 * st.positive_ratio, 12.80, 0.05);
  std::set<std::string> ids;
  for (const Sample& s : d.samples) {
    EXPECT_TRUE(s.label.has_value());
    ids.insert(s.id);
  }
  EXPECT_EQ(ids.size(), d.size());
}

TEST(Synth, NoiselessMarkerRuleIsPerfect) {
  const SynthSpec spec = DanishSpec(0.0);
  const Dataset d = GenerateSynthetic(spec);
  const std::set<std::string> markers(spec.offensive_marker_words.begin(),
                                      spec.offensive_marker_words.end());
  std::vector<int> pred, gold;
  for (const Sample& s : d.samples) {
    pred.push_back(HasMarker(s, markers));
    gold.push_back(ToInt(*s.label));
  }
  EXPECT_EQ(ComputeMetrics(Confusion(pred, gold)).f1_positive, 1.0);
}

TEST(Synth, NoiseRateIsRealized) {
  const SynthSpec spec = DanishSpec(0.1);
  const Dataset d = GenerateSynthetic(spec);
  const std::set<std::string> markers(spec.offensive_marker_words.begin(),
                                      spec.offensive_marker_words.end());
  int flipped = 0;
  for (const Sample& s : d.samples) flipped += HasMarker(s, markers) != (*s.label == Label::kPositive);
  const double rate = flipped / 3000.0;
  // Four binomial standard deviations.
  EXPECT_NEAR(rate, 0.1, 4 * std::sqrt(0.1 * 0.9 / 3000));
}

TEST(Synth, Deterministic) {
  EXPECT_EQ(GenerateSynthetic(DanishSpec(0.1)), GenerateSynthetic(DanishSpec(0.1)));
  SynthSpec other = DanishSpec(0.1);
  other.seed = 8;
  EXPECT_NE(GenerateSynthetic(other), GenerateSynthetic(DanishSpec(0.1)));
}

TEST(Synth, ExercisesPreprocessing) {
  const Dataset d = GenerateSynthetic(DanishSpec(0.1));
  const std::string dir = OFFDET_RESOURCE_DIR;
  const EmojiTable table = EmojiTable::Load(dir + "/emoji.tsv");
  const SegmenterLexicon lex = SegmenterLexicon::Load(dir + "/segmenter_words.txt");
  int hashtags = 0, emoji = 0;
  for (const Sample& s : d.samples) {
    hashtags += s.text.find('#') != std::string::npos;
    const std::string out = Preprocess(s.text, table, lex);
    EXPECT_EQ(out.find('#'), std::string::npos) << s.text;
    emoji += out.find(':') != std::string::npos;
  }
  EXPECT_GT(hashtags, 600);
  EXPECT_GT(emoji, 600);
  for (const std::string& e : SynthEmojiFixture())
    EXPECT_EQ(ReplaceEmojis(e, table).find(e), std::string::npos) << e;
}

TEST(Synth, TsvRoundTrip) {
  SynthSpec spec = DanishSpec(0.1);
  spec.n_samples = 200;
  const Dataset d = GenerateSynthetic(spec);
  std::stringstream buf;
  WriteOlidTsv(d, buf);
  const Dataset back = ParseLabeledTsv(buf, TsvFormat::kOlidLabeled, d.name, d.language);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.samples[i].id, d.samples[i].id);
    EXPECT_EQ(back.samples[i].text, d.samples[i].text);
    EXPECT_EQ(back.samples[i].label, d.samples[i].label);
  }
}

TEST(Synth, SpecValidation) {
  SynthSpec s = DanishSpec(0.1);
  s.n_samples = 9;
  EXPECT_THROW(GenerateSynthetic(s), UsageError);
  s = DanishSpec(0.1);
  s.offensive_marker_words.push_back(s.benign_vocabulary[0]);
  EXPECT_THROW(GenerateSynthetic(s), UsageError);
  s = DanishSpec(1.0);
  EXPECT_THROW(GenerateSynthetic(s), UsageError);
  s = DanishSpec(0.1);
  s.positive_ratio = 0.0;
  EXPECT_THROW(GenerateSynthetic(s), UsageError);
}

TEST(Synth, VocabularyDisjointAndDeterministic) {
  const auto shared = SharedSynthMarkers();
  const SynthVocabulary a = MakeSynthVocabulary("tr", 200, 10, shared);
  const SynthVocabulary b = MakeSynthVocabulary("tr", 200, 10, shared);
  EXPECT_EQ(a.benign, b.benign);
  EXPECT_EQ(a.markers, b.markers);
  EXPECT_EQ(a.markers.size(), 10 + shared.size());
  const std::set<std::string> benign(a.benign.begin(), a.benign.end());
  EXPECT_EQ(benign.size(), 200u);
  for (const auto& m : a.markers) EXPECT_FALSE(benign.contains(m)) << m;
  EXPECT_NE(MakeSynthVocabulary("ar", 200, 10).benign, a.benign);
}

TEST(Synth, CorpusShapesSumToTableTotal) {
  std::vector<DatasetSummary> parts;
  for (const CorpusShape& c : CompetitionCorpusShapes()) parts.push_back({c.name, c.count, 0});
  EXPECT_EQ(ConcatSummaries(parts, "all").count, 9125438u);
}

}  // namespace
}  // namespace offdet
