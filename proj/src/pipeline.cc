#include "offdet/pipeline.h"

#include <cstdlib>
#include <filesystem>

#include "offdet/binary_io.h"
#include "offdet/error.h"

#ifndef OFFDET_DEFAULT_RESOURCE_DIR
#define OFFDET_DEFAULT_RESOURCE_DIR "resources"
#endif

namespace offdet {
namespace {

std::vector<std::string> PreprocessAll(const Dataset& d, const Resources& res) {
  std::vector<std::string> out;
  out.reserve(d.size());
  for (const auto& s : d.samples) out.push_back(Preprocess(s.text, res.emoji, res.segmenter));
  return out;
}

class GbdtClassifier final : public TextClassifier {
 public:
  GbdtClassifier(std::shared_ptr<const Resources> res, FeatureExtractor fx, GbdtModel model)
      : res_(std::move(res)), fx_(std::move(fx)), model_(std::move(model)) {}

  ModelFamily family() const override { return ModelFamily::kGbdt; }

  double PredictProba(std::string_view raw_text) const override {
    const std::string text = Preprocess(raw_text, res_->emoji, res_->segmenter);
    return model_.PredictProba(FeatureExtractor::Flatten(fx_.Transform(text)));
  }

  std::vector<std::uint8_t> Save() const override {
    ByteWriter w;
    w.Header(ModelKind::kGbdtPipeline);
    w.Bytes(fx_.SaveModels());
    w.Bytes(SaveGbdt(model_));
    return w.Take();
  }

 private:
  std::shared_ptr<const Resources> res_;
  FeatureExtractor fx_;
  GbdtModel model_;
};

class EncoderClassifier final : public TextClassifier {
 public:
  EncoderClassifier(std::shared_ptr<const Resources> res, WordPieceVocab vocab, bool lowercase,
                    TransformerClassifier model)
      : res_(std::move(res)), vocab_(std::move(vocab)), lowercase_(lowercase), model_(std::move(model)) {}

  ModelFamily family() const override { return ModelFamily::kTransformer; }

  double PredictProba(std::string_view raw_text) const override {
    const std::string text = Preprocess(raw_text, res_->emoji, res_->segmenter);
    return model_.PredictProba(EncodeText(text, vocab_, model_.config().max_len, lowercase_))[1];
  }

  std::vector<std::uint8_t> Save() const override {
    ByteWriter w;
    w.Header(ModelKind::kTransformerPipeline);
    w.U8(lowercase_ ? 1 : 0);
    w.Str(vocab_.continuation_prefix());
    w.Str(vocab_.unk_token());
    w.U64(vocab_.size());
    for (const auto& t : vocab_.tokens()) w.Str(t);
    w.Bytes(SaveTransformer(model_));
    return w.Take();
  }

 private:
  std::shared_ptr<const Resources> res_;
  WordPieceVocab vocab_;
  bool lowercase_;
  TransformerClassifier model_;
};

}  // namespace

std::shared_ptr<const Resources> Resources::Load(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("resource directory not found: " + dir);
  auto res = std::make_shared<Resources>();
  res->emoji = EmojiTable::Load((fs::path(dir) / "emoji.tsv").string());
  res->segmenter = SegmenterLexicon::Load((fs::path(dir) / "segmenter_words.txt").string());
  res->pos = std::make_shared<PosLexicon>(PosLexicon::Load((fs::path(dir) / "pos.tsv").string()));
  res->sentiment = std::make_shared<SentimentLexicon>(
      SentimentLexicon::Load((fs::path(dir) / "sentiment.tsv").string()));
  return res;
}

std::string DefaultResourceDir() {
  if (const char* env = std::getenv("OFFDET_RESOURCE_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return OFFDET_DEFAULT_RESOURCE_DIR;
}

const char* ModelFamilyName(ModelFamily f) {
  return f == ModelFamily::kGbdt ? "gbdt" : "transformer";
}

ModelFamily ParseModelFamily(std::string_view name) {
  if (name == "gbdt" || name == "baseline") return ModelFamily::kGbdt;
  if (name == "transformer") return ModelFamily::kTransformer;
  throw UsageError("unknown model kind '" + std::string(name) + "' (expected gbdt or transformer)");
}

std::vector<int> LabelsOf(const Dataset& d) {
  std::vector<int> y;
  y.reserve(d.size());
  for (const auto& s : d.samples) {
    if (!s.label) throw DataError("sample '" + s.id + "' has no label");
    y.push_back(ToInt(*s.label));
  }
  return y;
}

std::unique_ptr<TextClassifier> TrainClassifier(const ModelSpec& spec, const Dataset& train,
                                                std::shared_ptr<const Resources> resources,
                                                std::uint64_t seed, const ProgressFn& progress) {
  if (!resources) throw UsageError("train: resources are required");
  if (train.samples.empty()) throw DataError("train: empty dataset '" + train.name + "'");
  const std::vector<int> labels = LabelsOf(train);
  const std::vector<std::string> texts = PreprocessAll(train, *resources);

  if (spec.family == ModelFamily::kGbdt) {
    FeatureExtractor fx(spec.features, resources->pos, resources->sentiment);
    fx.Fit(texts);
    SparseMatrix x;
    x.n_cols = fx.dimension();
    x.rows.reserve(texts.size());
    for (const auto& t : texts) x.rows.push_back(FeatureExtractor::Flatten(fx.Transform(t)));
    GbdtModel model = TrainGbdt(x, labels, spec.gbdt, progress);
    return std::make_unique<GbdtClassifier>(std::move(resources), std::move(fx), std::move(model));
  }

  WordPieceVocab vocab;
  if (!spec.vocab_path.empty()) {
    vocab = WordPieceVocab::Load(spec.vocab_path);
  } else {
    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(texts.size());
    for (const auto& t : texts) tokenized.push_back(BasicTokenize(t, spec.lowercase));
    vocab = BuildVocab(tokenized, spec.vocab_min_count, spec.vocab_max_size);
  }
  TransformerConfig tcfg = spec.transformer;
  tcfg.vocab_size = vocab.size();
  TrainingConfig tr = spec.training;
  tr.seed = seed;
  std::vector<EncodedExample> examples;
  examples.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    examples.push_back({EncodeText(texts[i], vocab, tcfg.max_len, spec.lowercase), labels[i]});
  }
  TransformerClassifier model = TrainTransformer(examples, tcfg, tr, progress);
  return std::make_unique<EncoderClassifier>(std::move(resources), std::move(vocab), spec.lowercase,
                                             std::move(model));
}

std::unique_ptr<TextClassifier> LoadClassifier(std::span<const std::uint8_t> bytes,
                                               std::shared_ptr<const Resources> resources) {
  if (!resources) throw UsageError("load: resources are required");
  const ModelKind kind = PeekModelKind(bytes);
  ByteReader r(bytes);
  if (kind == ModelKind::kGbdtPipeline) {
    r.ExpectHeader(ModelKind::kGbdtPipeline);
    FeatureExtractor fx(FeatureSpec{}, resources->pos, resources->sentiment);
    fx.LoadModels(r.Bytes());
    GbdtModel model = LoadGbdt(r.Bytes());
    r.ExpectEnd();
    if (model.n_features != fx.dimension()) throw DataError("gbdt pipeline: feature dimension mismatch");
    return std::make_unique<GbdtClassifier>(std::move(resources), std::move(fx), std::move(model));
  }
  if (kind == ModelKind::kTransformerPipeline) {
    r.ExpectHeader(ModelKind::kTransformerPipeline);
    const bool lowercase = r.U8() != 0;
    std::string prefix = r.Str();
    std::string unk = r.Str();
    const std::uint64_t n = r.U64();
    if (n > r.remaining()) throw DataError("model payload: truncated");
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) tokens.push_back(r.Str());
    WordPieceVocab vocab;
    try {
      vocab = WordPieceVocab(std::move(tokens), std::move(prefix), std::move(unk));
    } catch (const UsageError& e) {
      throw DataError(std::string("transformer pipeline: ") + e.what());
    }
    TransformerClassifier model = LoadTransformer(r.Bytes());
    r.ExpectEnd();
    if (model.config().vocab_size != vocab.size()) {
      throw DataError("transformer pipeline: vocabulary size mismatch");
    }
    return std::make_unique<EncoderClassifier>(std::move(resources), std::move(vocab), lowercase,
                                               std::move(model));
  }
  throw DataError(std::string("not a classifier pipeline (kind ") + ModelKindName(kind) + ")");
}

}  // namespace offdet
