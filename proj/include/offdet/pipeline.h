#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "offdet/corpus.h"
#include "offdet/features.h"
#include "offdet/gbdt.h"
#include "offdet/preprocess.h"
#include "offdet/progress.h"
#include "offdet/transformer.h"

namespace offdet {

// Lexicons and tables shared by preprocessing and featurization.
struct Resources {
  EmojiTable emoji;
  SegmenterLexicon segmenter;
  std::shared_ptr<const PosLexicon> pos;
  std::shared_ptr<const SentimentLexicon> sentiment;

  // Expects emoji.tsv, segmenter_words.txt, pos.tsv and sentiment.tsv.
  static std::shared_ptr<const Resources> Load(const std::string& dir);
};

// $OFFDET_RESOURCE_DIR when set, otherwise the resources/ directory of the
// source tree this library was built from.
std::string DefaultResourceDir();

enum class ModelFamily { kGbdt, kTransformer };

const char* ModelFamilyName(ModelFamily f);
ModelFamily ParseModelFamily(std::string_view name);

struct ModelSpec {
  ModelFamily family = ModelFamily::kGbdt;
  GbdtParams gbdt;
  FeatureSpec features;
  TransformerConfig transformer;  // vocab_size is filled in at training time
  TrainingConfig training;
  bool lowercase = true;
  // Vocabulary: loaded from `vocab_path` when set, otherwise built from the
  // training texts (see BuildVocab).
  std::string vocab_path;
  std::size_t vocab_min_count = 2;
  std::size_t vocab_max_size = 8000;

  bool operator==(const ModelSpec&) const = default;
};

// A trained model together with everything needed to go from raw text to a
// probability of the offensive class.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual ModelFamily family() const = 0;
  virtual double PredictProba(std::string_view raw_text) const = 0;
  virtual std::vector<std::uint8_t> Save() const = 0;

  int Predict(std::string_view raw_text) const { return PredictProba(raw_text) >= 0.5 ? 1 : 0; }
};

std::unique_ptr<TextClassifier> TrainClassifier(const ModelSpec& spec, const Dataset& train,
                                                std::shared_ptr<const Resources> resources,
                                                std::uint64_t seed, const ProgressFn& progress = {});

// Dispatches on the serialized kind (gbdt-pipeline or transformer-pipeline).
std::unique_ptr<TextClassifier> LoadClassifier(std::span<const std::uint8_t> bytes,
                                               std::shared_ptr<const Resources> resources);

// Labels of `d` as 0/1; throws if any sample is unlabeled.
std::vector<int> LabelsOf(const Dataset& d);

}  // namespace offdet
