#include "offdet/transformer.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "offdet/binary_io.h"
#include "offdet/error.h"

namespace offdet {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;
using CMat = Eigen::Map<const RowMat>;
using MMat = Eigen::Map<RowMat>;
using CVec = Eigen::Map<const RowVec>;
using MVec = Eigen::Map<RowVec>;

constexpr double kLayerNormEps = 1e-5;
const double kGeluC = std::sqrt(2.0 / std::numbers::pi);

// Offsets inside one encoder-layer block.
struct LayerLayout {
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b, size;

  LayerLayout(std::size_t d, std::size_t f) {
    std::size_t at = 0;
    const auto take = [&at](std::size_t n) {
      const std::size_t o = at;
      at += n;
      return o;
    };
    wq = take(d * d);
    bq = take(d);
    wk = take(d * d);
    bk = take(d);
    wv = take(d * d);
    bv = take(d);
    wo = take(d * d);
    bo = take(d);
    ln1_g = take(d);
    ln1_b = take(d);
    w1 = take(d * f);
    b1 = take(f);
    w2 = take(f * d);
    b2 = take(d);
    ln2_g = take(d);
    ln2_b = take(d);
    size = at;
  }
};

struct NormCache {
  RowMat xhat;
  Eigen::VectorXd inv_std;
};

RowMat LayerNorm(const RowMat& x, CVec gamma, CVec beta, NormCache& cache) {
  const Eigen::Index d = x.cols();
  cache.xhat.resize(x.rows(), d);
  cache.inv_std.resize(x.rows());
  RowMat y(x.rows(), d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std(i) = inv;
    cache.xhat.row(i) = (x.row(i).array() - mean) * inv;
    y.row(i) = cache.xhat.row(i).cwiseProduct(gamma) + beta;
  }
  return y;
}

RowMat LayerNormBackward(const RowMat& dy, const NormCache& cache, CVec gamma, MVec dgamma,
                         MVec dbeta) {
  dgamma += (dy.cwiseProduct(cache.xhat)).colwise().sum();
  dbeta += dy.colwise().sum();
  RowMat dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const RowVec dxhat = dy.row(i).cwiseProduct(gamma);
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
    dx.row(i) = cache.inv_std(i) * (dxhat.array() - m1 - cache.xhat.row(i).array() * m2);
  }
  return dx;
}

double Gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

double GeluGrad(double x) {
  const double t = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

// Inverted dropout mask (entries 0 or 1/(1-p)); empty when disabled.
RowMat DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, SplitMix64* rng) {
  if (rng == nullptr || p <= 0.0) return {};
  RowMat mask(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->Uniform() < p ? 0.0 : keep;
  return mask;
}

void ApplyMask(RowMat& x, const RowMat& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

struct LayerCache {
  RowMat input;
  RowMat q, k, v;
  std::vector<RowMat> attn;
  RowMat context;
  RowMat drop1;
  NormCache norm1;
  RowMat h1;
  RowMat pre_act;
  RowMat act;
  RowMat drop2;
  NormCache norm2;
};

}  // namespace

void TransformerConfig::Validate() const {
  if (vocab_size < 4) throw UsageError("transformer: vocab_size must cover the special tokens");
  if (d_model < 1 || n_heads < 1 || n_layers < 1 || d_ff < 1) {
    throw UsageError("transformer: sizes must be positive");
  }
  if (d_model % n_heads != 0) throw UsageError("transformer: d_model must be divisible by n_heads");
  if (max_len < 2) throw UsageError("transformer: max_len must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("transformer: dropout must be in [0, 1)");
  if (!(init_std > 0.0)) throw UsageError("transformer: init_std must be positive");
}

void TrainingConfig::Validate() const {
  if (epochs < 1) throw UsageError("training: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("training: learning_rate must be > 0");
  if (batch_size < 1) throw UsageError("training: batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) throw UsageError("training: weight_decay must be >= 0");
}

std::vector<std::int32_t> EncodeText(std::string_view text, const WordPieceVocab& vocab,
                                     int max_len, bool lowercase) {
  std::vector<std::int32_t> ids = {vocab.cls_id()};
  const auto limit = static_cast<std::size_t>(max_len - 1);
  for (const auto& word : BasicTokenize(text, lowercase)) {
    for (const auto& piece : WordPieceTokenize(word, vocab)) {
      if (ids.size() >= limit) break;
      ids.push_back(vocab.Id(piece));
    }
    if (ids.size() >= limit) break;
  }
  ids.push_back(vocab.sep_id());
  return ids;
}

TransformerClassifier::TransformerClassifier(const TransformerConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.Validate();
  BuildLayout();
  Initialize(seed);
}

void TransformerClassifier::BuildLayout() {
  const std::size_t d = config_.d_model;
  const std::size_t f = config_.d_ff;
  const LayerLayout layer(d, f);
  std::size_t at = 0;
  tok_emb_ = at;
  at += config_.vocab_size * d;
  pos_emb_ = at;
  at += static_cast<std::size_t>(config_.max_len) * d;
  emb_ln_g_ = at;
  at += d;
  emb_ln_b_ = at;
  at += d;
  layers_begin_ = at;
  layer_block_size_ = layer.size;
  const std::size_t blocks = config_.share_layer_params ? 1 : static_cast<std::size_t>(config_.n_layers);
  at += blocks * layer.size;
  head_w_ = at;
  at += d * 2;
  head_b_ = at;
  at += 2;
  params_.assign(at, 0.0);

  decay_mask_.assign(at, 0);
  const auto mark = [&](std::size_t begin, std::size_t n) {
    std::fill(decay_mask_.begin() + begin, decay_mask_.begin() + begin + n, 1);
  };
  mark(tok_emb_, config_.vocab_size * d);
  mark(pos_emb_, static_cast<std::size_t>(config_.max_len) * d);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t base = layers_begin_ + b * layer.size;
    mark(base + layer.wq, d * d);
    mark(base + layer.wk, d * d);
    mark(base + layer.wv, d * d);
    mark(base + layer.wo, d * d);
    mark(base + layer.w1, d * f);
    mark(base + layer.w2, f * d);
  }
  mark(head_w_, d * 2);
}

void TransformerClassifier::Initialize(std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_[i] = decay_mask_[i] ? config_.init_std * rng.Normal() : 0.0;
  }
  const std::size_t d = config_.d_model;
  const LayerLayout layer(d, config_.d_ff);
  std::fill_n(params_.begin() + emb_ln_g_, d, 1.0);
  const std::size_t blocks = config_.share_layer_params ? 1 : static_cast<std::size_t>(config_.n_layers);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t base = layers_begin_ + b * layer.size;
    std::fill_n(params_.begin() + base + layer.ln1_g, d, 1.0);
    std::fill_n(params_.begin() + base + layer.ln2_g, d, 1.0);
  }
}

std::size_t TransformerClassifier::LayerOffset(int layer) const {
  if (layer < 0 || layer >= config_.n_layers) throw UsageError("layer index out of range");
  return layers_begin_ + (config_.share_layer_params ? 0 : static_cast<std::size_t>(layer)) * layer_block_size_;
}

double TransformerClassifier::ForwardBackward(const EncodedExample& ex, double scale,
                                              std::span<double> grad, SplitMix64* dropout_rng,
                                              Trace* trace) const {
  const Eigen::Index d = config_.d_model;
  const Eigen::Index f = config_.d_ff;
  const int heads = config_.n_heads;
  const Eigen::Index hw = d / heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(hw));
  const auto len = static_cast<Eigen::Index>(ex.ids.size());
  if (len < 1) throw UsageError("transformer: empty input sequence");
  if (len > config_.max_len) throw UsageError("transformer: sequence longer than max_len");
  const double p_drop = config_.dropout;
  const LayerLayout lay(static_cast<std::size_t>(d), static_cast<std::size_t>(f));
  const double* P = params_.data();

  const auto cmat = [&](std::size_t off, Eigen::Index r, Eigen::Index c) { return CMat(P + off, r, c); };
  const auto cvec = [&](std::size_t off, Eigen::Index n) { return CVec(P + off, n); };

  // Embeddings.
  RowMat x(len, d);
  for (Eigen::Index t = 0; t < len; ++t) {
    const std::int32_t id = ex.ids[static_cast<std::size_t>(t)];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw UsageError("transformer: token id out of range");
    }
    x.row(t) = cvec(tok_emb_ + static_cast<std::size_t>(id) * d, d) + cvec(pos_emb_ + t * d, d);
  }
  NormCache emb_norm;
  RowMat h = LayerNorm(x, cvec(emb_ln_g_, d), cvec(emb_ln_b_, d), emb_norm);
  const RowMat emb_mask = DropoutMask(len, d, p_drop, dropout_rng);
  ApplyMask(h, emb_mask);

  std::vector<LayerCache> caches(static_cast<std::size_t>(config_.n_layers));
  if (trace) {
    trace->attention.assign(caches.size(), {});
    trace->layer_outputs.clear();
  }
  for (int l = 0; l < config_.n_layers; ++l) {
    LayerCache& c = caches[static_cast<std::size_t>(l)];
    const std::size_t base = LayerOffset(l);
    c.input = h;
    c.q = (h * cmat(base + lay.wq, d, d)).rowwise() + cvec(base + lay.bq, d);
    c.k = (h * cmat(base + lay.wk, d, d)).rowwise() + cvec(base + lay.bk, d);
    c.v = (h * cmat(base + lay.wv, d, d)).rowwise() + cvec(base + lay.bv, d);
    c.context.resize(len, d);
    c.attn.resize(static_cast<std::size_t>(heads));
    for (int hd = 0; hd < heads; ++hd) {
      RowMat s = c.q.middleCols(hd * hw, hw) * c.k.middleCols(hd * hw, hw).transpose() * attn_scale;
      for (Eigen::Index i = 0; i < len; ++i) {
        const double m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp();
        s.row(i) /= s.row(i).sum();
      }
      c.context.middleCols(hd * hw, hw).noalias() = s * c.v.middleCols(hd * hw, hw);
      if (trace) {
        trace->attention[static_cast<std::size_t>(l)].emplace_back(s.data(), s.data() + s.size());
      }
      c.attn[static_cast<std::size_t>(hd)] = std::move(s);
    }
    RowMat attn_out = (c.context * cmat(base + lay.wo, d, d)).rowwise() + cvec(base + lay.bo, d);
    c.drop1 = DropoutMask(len, d, p_drop, dropout_rng);
    ApplyMask(attn_out, c.drop1);
    c.h1 = LayerNorm(h + attn_out, cvec(base + lay.ln1_g, d), cvec(base + lay.ln1_b, d), c.norm1);

    c.pre_act = (c.h1 * cmat(base + lay.w1, d, f)).rowwise() + cvec(base + lay.b1, f);
    c.act = c.pre_act.unaryExpr(&Gelu);
    RowMat ff = (c.act * cmat(base + lay.w2, f, d)).rowwise() + cvec(base + lay.b2, d);
    c.drop2 = DropoutMask(len, d, p_drop, dropout_rng);
    ApplyMask(ff, c.drop2);
    h = LayerNorm(c.h1 + ff, cvec(base + lay.ln2_g, d), cvec(base + lay.ln2_b, d), c.norm2);
    if (trace) trace->layer_outputs.emplace_back(h.data(), h.data() + h.size());
  }

  const RowVec pooled = h.row(0);
  RowVec logits = pooled * cmat(head_w_, d, 2) + cvec(head_b_, 2);
  const double mx = logits.maxCoeff();
  RowVec prob = (logits.array() - mx).exp();
  prob /= prob.sum();
  if (trace) trace->probabilities = {prob(0), prob(1)};
  const int y = ex.label;
  const double loss = -std::log(std::max(prob(y), 1e-300));
  if (grad.empty()) return loss;

  // Backward.
  double* G = grad.data();
  const auto gmat = [&](std::size_t off, Eigen::Index r, Eigen::Index c) { return MMat(G + off, r, c); };
  const auto gvec = [&](std::size_t off, Eigen::Index n) { return MVec(G + off, n); };

  RowVec dlogits = prob;
  dlogits(y) -= 1.0;
  dlogits *= scale;
  gmat(head_w_, d, 2).noalias() += pooled.transpose() * dlogits;
  gvec(head_b_, 2) += dlogits;
  RowMat dh = RowMat::Zero(len, d);
  dh.row(0) = dlogits * cmat(head_w_, d, 2).transpose();

  for (int l = config_.n_layers - 1; l >= 0; --l) {
    const LayerCache& c = caches[static_cast<std::size_t>(l)];
    const std::size_t base = LayerOffset(l);
    RowMat dr2 = LayerNormBackward(dh, c.norm2, cvec(base + lay.ln2_g, d), gvec(base + lay.ln2_g, d),
                                   gvec(base + lay.ln2_b, d));
    RowMat dff = dr2;
    ApplyMask(dff, c.drop2);
    gmat(base + lay.w2, f, d).noalias() += c.act.transpose() * dff;
    gvec(base + lay.b2, d) += dff.colwise().sum();
    RowMat dact = dff * cmat(base + lay.w2, f, d).transpose();
    RowMat dpre = dact.cwiseProduct(c.pre_act.unaryExpr(&GeluGrad));
    gmat(base + lay.w1, d, f).noalias() += c.h1.transpose() * dpre;
    gvec(base + lay.b1, f) += dpre.colwise().sum();
    RowMat dh1 = dr2;
    dh1.noalias() += dpre * cmat(base + lay.w1, d, f).transpose();

    RowMat dr1 = LayerNormBackward(dh1, c.norm1, cvec(base + lay.ln1_g, d), gvec(base + lay.ln1_g, d),
                                   gvec(base + lay.ln1_b, d));
    RowMat dattn = dr1;
    ApplyMask(dattn, c.drop1);
    gmat(base + lay.wo, d, d).noalias() += c.context.transpose() * dattn;
    gvec(base + lay.bo, d) += dattn.colwise().sum();
    const RowMat dcontext = dattn * cmat(base + lay.wo, d, d).transpose();

    RowMat dq(len, d), dk(len, d), dv(len, d);
    for (int hd = 0; hd < heads; ++hd) {
      const RowMat& a = c.attn[static_cast<std::size_t>(hd)];
      const auto dctx_h = dcontext.middleCols(hd * hw, hw);
      const RowMat da = dctx_h * c.v.middleCols(hd * hw, hw).transpose();
      dv.middleCols(hd * hw, hw).noalias() = a.transpose() * dctx_h;
      RowMat ds = a.cwiseProduct(
          (da.colwise() - da.cwiseProduct(a).rowwise().sum()));
      ds *= attn_scale;
      dq.middleCols(hd * hw, hw).noalias() = ds * c.k.middleCols(hd * hw, hw);
      dk.middleCols(hd * hw, hw).noalias() = ds.transpose() * c.q.middleCols(hd * hw, hw);
    }
    gmat(base + lay.wq, d, d).noalias() += c.input.transpose() * dq;
    gmat(base + lay.wk, d, d).noalias() += c.input.transpose() * dk;
    gmat(base + lay.wv, d, d).noalias() += c.input.transpose() * dv;
    gvec(base + lay.bq, d) += dq.colwise().sum();
    gvec(base + lay.bk, d) += dk.colwise().sum();
    gvec(base + lay.bv, d) += dv.colwise().sum();
    dh = dr1;
    dh.noalias() += dq * cmat(base + lay.wq, d, d).transpose();
    dh.noalias() += dk * cmat(base + lay.wk, d, d).transpose();
    dh.noalias() += dv * cmat(base + lay.wv, d, d).transpose();
  }

  ApplyMask(dh, emb_mask);
  const RowMat dx = LayerNormBackward(dh, emb_norm, cvec(emb_ln_g_, d), gvec(emb_ln_g_, d),
                                      gvec(emb_ln_b_, d));
  for (Eigen::Index t = 0; t < len; ++t) {
    const auto id = static_cast<std::size_t>(ex.ids[static_cast<std::size_t>(t)]);
    gvec(tok_emb_ + id * d, d) += dx.row(t);
    gvec(pos_emb_ + t * d, d) += dx.row(t);
  }
  return loss;
}

TransformerClassifier::Trace TransformerClassifier::Forward(std::span<const std::int32_t> ids) const {
  Trace trace;
  EncodedExample ex{{ids.begin(), ids.end()}, 0};
  ForwardBackward(ex, 0.0, {}, nullptr, &trace);
  return trace;
}

std::array<double, 2> TransformerClassifier::PredictProba(std::span<const std::int32_t> ids) const {
  Trace trace;
  EncodedExample ex{{ids.begin(), ids.end()}, 0};
  ForwardBackward(ex, 0.0, {}, nullptr, &trace);
  return trace.probabilities;
}

double TransformerClassifier::LossAndGradient(std::span<const EncodedExample> batch,
                                              std::span<double> grad, SplitMix64* dropout_rng) const {
  if (batch.empty()) throw UsageError("transformer: empty batch");
  if (grad.size() != params_.size()) throw UsageError("transformer: gradient buffer size mismatch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& ex : batch) total += ForwardBackward(ex, scale, grad, dropout_rng, nullptr);
  return total * scale;
}

double TransformerClassifier::Loss(std::span<const EncodedExample> batch) const {
  if (batch.empty()) throw UsageError("transformer: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total += ForwardBackward(ex, 0.0, {}, nullptr, nullptr);
  return total / static_cast<double>(batch.size());
}

void AdamW::Step(std::span<double> params, std::span<const double> grad,
                 std::span<const std::uint8_t> decay_mask) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    double update = m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    if (decay_mask[i]) update += cfg_.weight_decay * params[i];
    params[i] -= lr * update;
  }
}

TransformerClassifier TrainTransformer(std::span<const EncodedExample> data,
                                       const TransformerConfig& tcfg, const TrainingConfig& train,
                                       const ProgressFn& progress) {
  train.Validate();
  if (data.empty()) throw UsageError("train_transformer: empty dataset");
  TransformerClassifier model(tcfg, MixSeed(train.seed, 0x1417));
  AdamW opt(model.parameter_count(), train);
  SplitMix64 order_rng(MixSeed(train.seed, 0x5a17));
  SplitMix64 dropout_rng(MixSeed(train.seed, 0xd20f));

  std::vector<std::size_t> order(data.size());
  std::vector<double> grad(model.parameter_count());
  std::vector<EncodedExample> batch;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Shuffle(std::span<std::size_t>(order), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(train.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(train.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss = model.LossAndGradient(batch, grad, &dropout_rng);
      epoch_loss += loss * static_cast<double>(batch.size());
      opt.Step(model.parameters(), grad, model.decay_mask());
    }
    if (progress) {
      progress({"transformer", "epoch", epoch + 1, epoch_loss / static_cast<double>(data.size())});
    }
  }
  return model;
}

double GradCheck(TransformerClassifier& model, std::span<const EncodedExample> batch, double epsilon,
                 std::size_t n_params, std::uint64_t seed) {
  std::vector<double> grad(model.parameter_count(), 0.0);
  model.LossAndGradient(batch, grad, nullptr);

  // Prefer parameters that the batch actually touches: sample from those
  // with a nonzero analytic gradient, topped up with arbitrary ones.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (grad[i] != 0.0) candidates.push_back(i);
  }
  SplitMix64 rng(seed);
  Shuffle(std::span<std::size_t>(candidates), rng);
  candidates.resize(std::min(candidates.size(), n_params));
  while (candidates.size() < n_params && candidates.size() < grad.size()) {
    candidates.push_back(rng.Below(grad.size()));
  }

  auto params = model.parameters();
  double worst = 0.0;
  for (std::size_t i : candidates) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = model.Loss(batch);
    params[i] = saved - epsilon;
    const double down = model.Loss(batch);
    params[i] = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::fabs(grad[i]), std::fabs(fd), 1e-8});
    worst = std::max(worst, std::fabs(grad[i] - fd) / denom);
  }
  return worst;
}

std::vector<std::uint8_t> SaveTransformer(const TransformerClassifier& m) {
  ByteWriter w;
  w.Header(ModelKind::kTransformer);
  const TransformerConfig& c = m.config_;
  w.U64(c.vocab_size);
  w.I32(c.d_model);
  w.I32(c.n_heads);
  w.I32(c.n_layers);
  w.I32(c.d_ff);
  w.I32(c.max_len);
  w.U8(c.share_layer_params ? 1 : 0);
  w.F64(c.dropout);
  w.F64(c.init_std);
  w.F64Array(m.params_);
  return w.Take();
}

TransformerClassifier LoadTransformer(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.ExpectHeader(ModelKind::kTransformer);
  TransformerConfig c;
  c.vocab_size = r.U64();
  c.d_model = r.I32();
  c.n_heads = r.I32();
  c.n_layers = r.I32();
  c.d_ff = r.I32();
  c.max_len = r.I32();
  c.share_layer_params = r.U8() != 0;
  c.dropout = r.F64();
  c.init_std = r.F64();
  try {
    c.Validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("transformer payload: ") + e.what());
  }
  std::vector<double> params = r.F64Array();
  r.ExpectEnd();
  // Check the header against the stored array before allocating anything.
  const double d = c.d_model, f = c.d_ff;
  const double blocks = c.share_layer_params ? 1.0 : c.n_layers;
  const double expected = (static_cast<double>(c.vocab_size) + c.max_len + 2.0) * d +
                          blocks * (4.0 * d * d + 9.0 * d + 2.0 * d * f + f) + 2.0 * d + 2.0;
  if (expected != static_cast<double>(params.size())) {
    throw DataError("transformer payload: parameter count mismatch");
  }
  TransformerClassifier m;
  m.config_ = c;
  m.BuildLayout();
  m.params_ = std::move(params);
  return m;
}

}  // namespace offdet
