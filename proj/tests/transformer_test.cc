#include "offdet/transformer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <vector>

#include "offdet/binary_io.h"
#include "offdet/error.h"
#include "offdet/gbdt.h"
#include "offdet/rng.h"
#include "offdet/tokenize.h"

namespace offdet {
namespace {

TransformerConfig TinyConfig() {
  TransformerConfig c;
  c.vocab_size = 12;
  c.d_model = 8;
  c.n_heads = 1;
  c.n_layers = 1;
  c.d_ff = 16;
  c.max_len = 8;
  c.dropout = 0.0;
  c.init_std = 0.3;
  return c;
}

std::vector<EncodedExample> TinyBatch() {
  return {{{2, 5, 6, 3}, 1}, {{2, 7, 3}, 0}, {{2, 8, 9, 10, 11, 3}, 1}};
}

TEST(TransformerTest, GradientMatchesFiniteDifferences) {
  TransformerClassifier model(TinyConfig(), 11);
  const auto batch = TinyBatch();
  EXPECT_LT(GradCheck(model, batch, 1e-5, 200, 3), 1e-4);
}

TEST(TransformerTest, GradientMatchesFiniteDifferencesMultiHeadTwoLayers) {
  TransformerConfig c = TinyConfig();
  c.n_heads = 2;
  c.n_layers = 2;
  TransformerClassifier model(c, 5);
  EXPECT_LT(GradCheck(model, TinyBatch(), 1e-5, 200, 9), 1e-4);
}

TEST(TransformerTest, GradientMatchesWithSharedLayers) {
  TransformerConfig c = TinyConfig();
  c.n_layers = 3;
  c.share_layer_params = true;
  TransformerClassifier model(c, 5);
  EXPECT_LT(GradCheck(model, TinyBatch(), 1e-5, 200, 4), 1e-4);
}


std::vector<std::int32_t> RandomIds(SplitMix64& rng, const TransformerConfig& c) {
  std::vector<std::int32_t> ids{2};
  const std::size_t len = rng.Below(static_cast<std::uint64_t>(c.max_len - 1));
  for (std::size_t i = 0; i < len; ++i)
    ids.push_back(static_cast<std::int32_t>(4 + rng.Below(c.vocab_size - 4)));
  ids.push_back(3);
  return ids;
}

// Label 1 iff token 5 occurs; a pattern the encoder has to attend to.
std::vector<EncodedExample> OverfitSet() {
  SplitMix64 rng(77);
  std::vector<EncodedExample> out;
  for (int i = 0; i < 16; ++i) {
    EncodedExample ex;
    ex.ids.push_back(2);
    for (int k = 0; k < 5; ++k) ex.ids.push_back(static_cast<std::int32_t>(6 + rng.Below(10)));
    ex.label = i % 2;
    if (ex.label) ex.ids[1 + rng.Below(5)] = 5;
    ex.ids.push_back(3);
    out.push_back(ex);
  }
  return out;
}

TransformerConfig SmallConfig() {
  TransformerConfig c;
  c.vocab_size = 16;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_layers = 1;
  c.d_ff = 32;
  c.max_len = 16;
  c.dropout = 0.1;
  return c;
}

TEST(TransformerTest, ProbabilitiesAndAttentionRowsSumToOne) {
  TransformerConfig c = SmallConfig();
  c.n_layers = 2;
  const TransformerClassifier model(c, 3);
  SplitMix64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ids = RandomIds(rng, c);
    const auto trace = model.Forward(ids);
    EXPECT_NEAR(trace.probabilities[0] + trace.probabilities[1], 1.0, 1e-6);
    ASSERT_EQ(trace.attention.size(), 2u);
    for (const auto& layer : trace.attention) {
      ASSERT_EQ(layer.size(), 2u);
      for (const auto& head : layer) {
        ASSERT_EQ(head.size(), ids.size() * ids.size());
        for (std::size_t row = 0; row < ids.size(); ++row) {
          const double sum = std::accumulate(head.begin() + row * ids.size(),
                                             head.begin() + (row + 1) * ids.size(), 0.0);
          EXPECT_NEAR(sum, 1.0, 1e-6);
        }
      }
    }
  }
}

TEST(TransformerTest, OverfitsSixteenSamples) {
  const auto data = OverfitSet();
  TrainingConfig t;
  t.learning_rate = 1e-3;
  t.epochs = 20;
  t.batch_size = 4;
  t.seed = 1;
  std::vector<double> losses;
  const TransformerClassifier model = TrainTransformer(data, SmallConfig(), t, [&](const ProgressRecord& r) {
    EXPECT_EQ(r.unit, "epoch");
    losses.push_back(r.loss);
  });
  ASSERT_EQ(losses.size(), 20u);
  EXPECT_LT(losses.back(), losses.front());
  int correct = 0;
  for (const auto& ex : data) {
    const auto p = model.PredictProba(ex.ids);
    correct += (p[1] >= 0.5) == (ex.label == 1);
  }
  EXPECT_EQ(correct, 16);
}

TEST(TransformerTest, SameSeedIsBitwiseIdentical) {
  const auto data = OverfitSet();
  TrainingConfig t;
  t.learning_rate = 1e-3;
  t.epochs = 3;
  t.batch_size = 4;
  t.seed = 9;
  const TransformerClassifier a = TrainTransformer(data, SmallConfig(), t);
  const TransformerClassifier b = TrainTransformer(data, SmallConfig(), t);
  EXPECT_TRUE(a == b);
  t.seed = 10;
  EXPECT_FALSE(a == TrainTransformer(data, SmallConfig(), t));
}

TEST(TransformerTest, SharedLayersCountAndOffsets) {
  TransformerConfig one = SmallConfig();
  one.n_layers = 1;
  TransformerConfig shared = SmallConfig();
  shared.n_layers = 4;
  shared.share_layer_params = true;
  TransformerConfig unshared = shared;
  unshared.share_layer_params = false;
  const TransformerClassifier m1(one, 1), ms(shared, 1), mu(unshared, 1);
  EXPECT_EQ(ms.parameter_count(), m1.parameter_count());
  EXPECT_EQ(mu.parameter_count(), m1.parameter_count() + 3 * m1.LayerBlockSize());
  for (int l = 1; l < 4; ++l) {
    EXPECT_EQ(ms.LayerOffset(l), ms.LayerOffset(0));
    EXPECT_EQ(mu.LayerOffset(l), mu.LayerOffset(0) + l * mu.LayerBlockSize());
  }
}

TEST(TransformerTest, SharedBlockChangesEveryLayer) {
  TransformerConfig c = SmallConfig();
  c.n_layers = 3;
  c.share_layer_params = true;
  TransformerClassifier m(c, 2);
  const std::vector<std::int32_t> ids{2, 6, 7, 3};
  const auto before = m.Forward(ids).layer_outputs;
  // First output-projection bias of the single shared block.
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  m.parameters()[m.LayerOffset(0) + 4 * d * d + 3 * d] += 0.5;
  const auto after = m.Forward(ids).layer_outputs;
  ASSERT_EQ(after.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) EXPECT_NE(after[l], before[l]) << l;
}

TEST(TransformerTest, ZeroLossBatchHasNearZeroGradient) {
  TransformerClassifier m(TinyConfig(), 4);
  const std::size_t n = m.parameter_count();
  m.parameters()[n - 1] = 60.0;  // head bias for class 1
  std::vector<EncodedExample> batch{{{2, 5, 3}, 1}, {{2, 6, 7, 3}, 1}};
  std::vector<double> grad(n, 0.0);
  const double loss = m.LossAndGradient(batch, grad, nullptr);
  EXPECT_LT(loss, 1e-20);
  for (double g : grad) EXPECT_LT(std::abs(g), 1e-20);
}

TEST(TransformerTest, FiniteDifferenceErrorScalesQuadratically) {
  TransformerClassifier m(TinyConfig(), 11);
  const auto batch = TinyBatch();
  std::vector<double> grad(m.parameter_count(), 0.0);
  m.LossAndGradient(batch, grad, nullptr);
  auto central = [&](std::size_t i, double eps) {
    const double w = m.parameters()[i];
    m.parameters()[i] = w + eps;
    const double up = m.Loss(batch);
    m.parameters()[i] = w - eps;
    const double down = m.Loss(batch);
    m.parameters()[i] = w;
    return (up - down) / (2 * eps);
  };
  std::vector<double> ratios;
  for (std::size_t i = 0; i < grad.size(); i += 7) {
    const double e1 = std::abs(central(i, 1e-2) - grad[i]);
    const double e2 = std::abs(central(i, 2e-2) - grad[i]);
    if (e1 > 1e-9) ratios.push_back(e2 / e1);
  }
  ASSERT_GT(ratios.size(), 10u);
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  EXPECT_GT(median, 3.5);
  EXPECT_LT(median, 4.5);
}

TEST(TransformerTest, SaveLoadPredictsIdentically) {
  TransformerConfig c = SmallConfig();
  c.share_layer_params = true;
  c.n_layers = 2;
  const TransformerClassifier m(c, 8);
  const std::vector<std::uint8_t> bytes = SaveTransformer(m);
  EXPECT_EQ(PeekModelKind(bytes), ModelKind::kTransformer);
  const TransformerClassifier back = LoadTransformer(bytes);
  SplitMix64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto ids = RandomIds(rng, c);
    EXPECT_EQ(back.PredictProba(ids), m.PredictProba(ids));
  }
}

TEST(TransformerTest, BadPayloadsAreErrors) {
  const TransformerClassifier m(TinyConfig(), 1);
  std::vector<std::uint8_t> bytes = SaveTransformer(m);
  std::vector<std::uint8_t> bad = bytes;
  bad[0] ^= 0x01;
  EXPECT_THROW(LoadTransformer(bad), DataError);
  bad = bytes;
  bad.resize(bytes.size() - 1);
  EXPECT_THROW(LoadTransformer(bad), DataError);
  bad = bytes;
  // vocab_size occupies bytes 9..16 after the header.
  bad[9] = 0xff;
  bad[16] = 0x7f;
  EXPECT_THROW(LoadTransformer(bad), DataError);
  const GbdtModel g{1, 0.0, 0.1, {}};
  EXPECT_THROW(LoadTransformer(SaveGbdt(g)), DataError);
  EXPECT_THROW(LoadGbdt(bytes), DataError);
}

TEST(TransformerTest, EncodeTextTruncates) {
  const WordPieceVocab v({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b"});
  EXPECT_EQ(EncodeText("a b a", v, 16, true), (std::vector<std::int32_t>{2, 4, 5, 4, 3}));
  EXPECT_EQ(EncodeText("A b zz a", v, 4, true), (std::vector<std::int32_t>{2, 4, 5, 3}));
  EXPECT_EQ(EncodeText("", v, 4, true), (std::vector<std::int32_t>{2, 3}));
}

TEST(TransformerTest, ConfigErrors) {
  TransformerConfig c = TinyConfig();
  c.n_heads = 3;
  EXPECT_THROW(c.Validate(), UsageError);
  EXPECT_THROW(TrainTransformer({}, TinyConfig(), TrainingConfig{}), UsageError);
}

}  // namespace
}  // namespace offdet
