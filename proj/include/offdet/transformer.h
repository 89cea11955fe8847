#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "offdet/progress.h"
#include "offdet/rng.h"
#include "offdet/tokenize.h"

namespace offdet {

struct TransformerConfig {
  std::size_t vocab_size = 0;
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 128;
  int max_len = 64;
  // One set of encoder-layer weights reused by every layer.
  bool share_layer_params = false;
  double dropout = 0.1;
  // Standard deviation of the normal initializer for weight matrices.
  double init_std = 0.02;

  void Validate() const;

  bool operator==(const TransformerConfig&) const = default;
};

struct TrainingConfig {
  double learning_rate = 2e-5;
  int epochs = 4;
  double weight_decay = 0.01;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void Validate() const;

  bool operator==(const TrainingConfig&) const = default;
};

// One training/evaluation example: token ids (already wrapped in [CLS] ...
// [SEP]) and a 0/1 label.
struct EncodedExample {
  std::vector<std::int32_t> ids;
  int label = 0;
};

// Basic tokenization, WordPiece, then [CLS] pieces [SEP]; pieces beyond
// max_len - 2 are dropped.
std::vector<std::int32_t> EncodeText(std::string_view text, const WordPieceVocab& vocab,
                                     int max_len, bool lowercase);

// Post-norm transformer encoder with a linear classification head on the
// first position. Parameters live in one flat double array.
class TransformerClassifier {
 public:
  TransformerClassifier() = default;
  TransformerClassifier(const TransformerConfig& config, std::uint64_t seed);

  struct Trace {
    std::array<double, 2> probabilities{};
    // attention[layer][head] is an L x L row-major matrix.
    std::vector<std::vector<std::vector<double>>> attention;
    // Hidden states after each layer (row-major L x d_model).
    std::vector<std::vector<double>> layer_outputs;
  };

  std::array<double, 2> PredictProba(std::span<const std::int32_t> ids) const;
  Trace Forward(std::span<const std::int32_t> ids) const;

  // Mean cross-entropy over `batch`; adds d(loss)/d(params) into `grad`
  // (which must have parameter_count() entries). Dropout is applied only when
  // `dropout_rng` is non-null.
  double LossAndGradient(std::span<const EncodedExample> batch, std::span<double> grad,
                         SplitMix64* dropout_rng) const;
  double Loss(std::span<const EncodedExample> batch) const;

  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  // 1 for weight matrices and embeddings, 0 for biases and norm parameters.
  const std::vector<std::uint8_t>& decay_mask() const { return decay_mask_; }
  const TransformerConfig& config() const { return config_; }

  // Offset of the first parameter of a layer's block; equal for every layer
  // when parameters are shared.
  std::size_t LayerOffset(int layer) const;
  std::size_t LayerBlockSize() const { return layer_block_size_; }

  bool operator==(const TransformerClassifier& o) const { return params_ == o.params_; }

 private:
  struct Cache;
  void BuildLayout();
  void Initialize(std::uint64_t seed);
  double ForwardBackward(const EncodedExample& ex, double scale, std::span<double> grad,
                         SplitMix64* dropout_rng, Trace* trace) const;

  friend std::vector<std::uint8_t> SaveTransformer(const TransformerClassifier& m);
  friend TransformerClassifier LoadTransformer(std::span<const std::uint8_t> bytes);

  TransformerConfig config_;
  std::vector<double> params_;
  std::vector<std::uint8_t> decay_mask_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, emb_ln_g_ = 0, emb_ln_b_ = 0;
  std::size_t layers_begin_ = 0, layer_block_size_ = 0;
  std::size_t head_w_ = 0, head_b_ = 0;
};

// AdamW with decoupled weight decay: w -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * w)
// for decayed parameters.
class AdamW {
 public:
  AdamW(std::size_t n, const TrainingConfig& cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}
  void Step(std::span<double> params, std::span<const double> grad,
            std::span<const std::uint8_t> decay_mask);

 private:
  TrainingConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

// Shuffled mini-batch AdamW training; returns the final-epoch model.
// Deterministic for a given seed. Reports the mean training loss per epoch.
TransformerClassifier TrainTransformer(std::span<const EncodedExample> data,
                                       const TransformerConfig& tcfg, const TrainingConfig& train,
                                       const ProgressFn& progress = {});

// Central-difference check of LossAndGradient (no dropout) on a random subset
// of `n_params` parameters. Returns max |a - f| / max(|a|, |f|, 1e-8).
double GradCheck(TransformerClassifier& model, std::span<const EncodedExample> batch,
                 double epsilon = 1e-5, std::size_t n_params = 64, std::uint64_t seed = 1);

std::vector<std::uint8_t> SaveTransformer(const TransformerClassifier& m);
TransformerClassifier LoadTransformer(std::span<const std::uint8_t> bytes);

}  // namespace offdet
