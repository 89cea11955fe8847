// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "offdet/corpus.h"
#include "offdet/eval.h"
#include "offdet/features.h"
#include "offdet/gbdt.h"
#include "offdet/pipeline.h"
#include "offdet/preprocess.h"
#include "offdet/rng.h"
#include "offdet/synth.h"
#include "offdet/tokenize.h"
#include "offdet/transformer.h"
#include "oracles.h"

namespace offdet {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void Note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome HeuristicGrid() {
  Outcome o;
  const auto t0 = Clock::now();
  const LabelHeuristic h;
  std::size_t cells = 0, agree = 0;
  bool monotone = true;
  for (int si = 0; si <= 50; ++si) {
    const double sd = si / 100.0;
    int prev = 0;
    for (int ai = 0; ai <= 100; ++ai) {
      const double avg = ai / 100.0;
      const int got = ToInt(ScoreToLabel(avg, sd, h));
      agree += got == static_cast<int>(oracle::HeuristicLabel(avg, sd));
      ++cells;
      monotone = monotone && got >= prev;
      prev = got;
    }
  }
  const double secs = Seconds(t0);
  o.Require(agree == cells, std::to_string(cells - agree) + " grid cells disagree");
  o.Require(monotone, "not monotone in avg");
  o.Require(secs < 1.0, "took " + Fmt("%.3f s", secs));
  o.Note(std::to_string(agree) + "/" + std::to_string(cells) + " cells agree, " + Fmt("%.3f s", secs));
  return o;
}

Outcome CorpusArithmetic() {
  Outcome o;
  std::vector<DatasetSummary> parts;
  for (const CorpusShape& s : CompetitionCorpusShapes()) {
    parts.push_back({s.name, s.count,
                     static_cast<std::uint64_t>(std::llround(s.positive_ratio * static_cast<double>(s.count)))});
  }
  const DatasetSummary all = ConcatSummaries(parts, "all");
  o.Require(all.count == 9125438, "concatenated count " + std::to_string(all.count));

  const SynthVocabulary v = MakeSynthVocabulary("da", 300, 8);
  SynthSpec spec;
  spec.name = "Off_da";
  spec.language = "da";
  spec.n_samples = 3000;
  spec.positive_ratio = 0.1280;
  spec.benign_vocabulary = v.benign;
  spec.offensive_marker_words = v.markers;
  spec.seed = 1;
  const double pct = 100.0 * ComputeStats(GenerateSynthetic(spec)).positive_ratio;
  o.Require(std::abs(pct - 12.80) <= 0.05, "Danish-shaped ratio " + Fmt("%.3f%%", pct));
  o.Note("total " + std::to_string(all.count) + ", Danish-shaped " + Fmt("%.2f%%", pct));
  return o;
}

Outcome WordPieceOracle() {
  Outcome o;
  const auto t0 = Clock::now();
  SplitMix64 rng(2024);
  int mismatches = 0, roundtrip_failures = 0, segmented = 0;
  for (int i = 0; i < 1000; ++i) {
    const oracle::WordPieceCase c = oracle::RandomWordPieceCase(rng);
    const WordPieceVocab vocab(c.vocab);
    const std::set<std::string> vs(c.vocab.begin(), c.vocab.end());
    const auto got = WordPieceTokenize(c.word, vocab);
    mismatches += got != oracle::WordPiece(c.word, vs);
    if (got.size() == 1 && got[0] == vocab.unk_token()) continue;
    ++segmented;
    std::string joined;
    for (std::size_t k = 0; k < got.size(); ++k) joined += k == 0 ? got[k] : got[k].substr(2);
    roundtrip_failures += joined != c.word;
  }
  const double secs = Seconds(t0);
  o.Require(mismatches == 0, std::to_string(mismatches) + " oracle mismatches");
  o.Require(roundtrip_failures == 0, std::to_string(roundtrip_failures) + " round-trip failures");
  o.Require(secs < 5.0, "took " + Fmt("%.3f s", secs));
  o.Note("1000 cases, " + std::to_string(segmented) + " segmented, " + Fmt("%.3f s", secs));
  return o;
}

Outcome HashtagExample(const Resources& res) {
  Outcome o;
  const std::string got = NormalizeHashtags("#MakeAmericaGreatAgain", res.segmenter);
  o.Require(got == "Make America Great Again", "got '" + got + "'");
  o.Note("'" + got + "'");
  return o;
}

Outcome TfIdfFixture() {
  Outcome o;
  const TfIdfModel m = TfIdfModel::Fit({{"a", "b"}, {"a", "c"}}, {NGramUnit::kWord, {1}}, 1);
  // Smoothed idf: 1 + ln((1 + N) / (1 + df)).
  const double idf_a = 1.0 + std::log(3.0 / 3.0), idf_b = 1.0 + std::log(3.0 / 2.0);
  o.Require(m.terms() == std::vector<std::string>{"a", "b", "c"}, "unexpected vocabulary");
  if (!o.pass) return o;
  o.Require(std::abs(m.idf()[0] - idf_a) <= 1e-9, "idf(a) " + Fmt("%.12f", m.idf()[0]));
  o.Require(std::abs(m.idf()[1] - idf_b) <= 1e-9, "idf(b) " + Fmt("%.12f", m.idf()[1]));
  o.Require(std::abs(m.idf()[1] - 1.4055) <= 1e-4, "idf(b) not ~1.4055");
  const SparseVector v = m.Transform({"a", "a", "b"});
  const double wa = 2.0 * idf_a, wb = idf_b, len = std::hypot(wa, wb);
  o.Require(v.size() == 2 && v[0].first == 0 && v[1].first == 1, "unexpected sparse layout");
  if (!o.pass) return o;
  o.Require(std::abs(v[0].second - wa / len) <= 1e-9 && std::abs(v[1].second - wb / len) <= 1e-9,
            "weights off");
  o.Note("idf " + Fmt("%.4f", m.idf()[0]) + ", " + Fmt("%.4f", m.idf()[1]));
  return o;
}

Outcome FleschKincaidCheck() {
  Outcome o;
  const double fk = FleschKincaid("The cat sat.");
  o.Require(std::abs(fk - (-2.62)) <= 0.01, "FK " + Fmt("%.4f", fk));
  for (const std::string t : {"The cat sat.", "Readable sentences are nice! Are they?"}) {
    const double base = FleschKincaid(t);
    for (int k : {2, 5, 10}) {
      std::string rep;
      for (int i = 0; i < k; ++i) rep += (i ? " " : "") + t;
      o.Require(std::abs(FleschKincaid(rep) - base) <= 1e-9, "repetition x" + std::to_string(k) + " differs");
    }
  }
  o.Note("FK " + Fmt("%.4f", fk));
  return o;
}

SparseVector DenseRow(const std::vector<double>& v) {
  SparseVector out;
  for (std::size_t j = 0; j < v.size(); ++j)
    if (v[j] != 0.0) out.emplace_back(static_cast<std::uint32_t>(j), v[j]);
  return out;
}

Outcome GbdtChecks() {
  Outcome o;
  const auto t0 = Clock::now();
  SplitMix64 rng(99);
  int violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    SparseMatrix x;
    std::vector<int> y;
    const std::size_t n = 20 + rng.Below(100);
    x.n_cols = 1 + rng.Below(8);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(x.n_cols, 0.0);
      for (double& v : row)
        if (rng.Bernoulli(0.6)) v = std::round(rng.Normal() * 4.0) / 2.0;
      x.rows.push_back(DenseRow(row));
      y.push_back(i < 2 ? static_cast<int>(i) : rng.Bernoulli(0.4));
    }
    GbdtParams p;
    p.n_rounds = 30;
    p.max_depth = 1 + static_cast<int>(rng.Below(4));
    p.learning_rate = 0.05 + 0.9 * rng.Uniform();
    double prev = INFINITY;
    TrainGbdt(x, y, p, [&](const ProgressRecord& r) {
      violations += r.loss > prev + 1e-12;
      prev = r.loss;
    });
  }
  o.Require(violations == 0, std::to_string(violations) + " rounds increased the loss");

  // Four positives at p = 0.5: G = -2, H = 1, w = -G / (H + lambda) = 1.
  SparseMatrix x{2, {DenseRow({1, 0}), DenseRow({0, 1}), DenseRow({1, 1}), DenseRow({2, 3})}};
  const std::vector<double> g(4, -0.5), h(4, 0.25);
  GbdtParams p;
  p.max_depth = 1;
  p.l2_leaf_reg = 1.0;
  const RegressionTree t = FitTree(ColumnIndex(x), g, h, p);
  o.Require(t.nodes.size() == 1 && std::abs(t.nodes[0].weight - 1.0) < 1e-12, "closed-form leaf weight wrong");

  SparseMatrix sx;
  std::vector<int> sy;
  sx.n_cols = 2;
  SplitMix64 srng(7);
  for (int i = 0; i < 200; ++i) {
    const double a = srng.Uniform(), b = srng.Uniform();
    sx.rows.push_back(DenseRow({a, b}));
    sy.push_back(a + 0.5 * b > 0.75);
  }
  GbdtParams sp;
  sp.n_rounds = 50;
  const GbdtModel m = TrainGbdt(sx, sy, sp);
  int correct = 0;
  for (std::size_t i = 0; i < sx.rows.size(); ++i) correct += (m.PredictProba(sx.rows[i]) >= 0.5) == (sy[i] == 1);
  const double acc = correct / 200.0, secs = Seconds(t0);
  o.Require(acc >= 0.95, "separable accuracy " + Fmt("%.3f", acc));
  o.Require(secs < 10.0, "took " + Fmt("%.2f s", secs));
  o.Note("separable accuracy " + Fmt("%.3f", acc) + ", " + Fmt("%.2f s", secs));
  return o;
}

Outcome TransformerChecks() {
  Outcome o;
  TransformerConfig tiny;
  tiny.vocab_size = 12;
  tiny.d_model = 8;
  tiny.n_heads = 1;
  tiny.n_layers = 1;
  tiny.d_ff = 16;
  tiny.max_len = 8;
  tiny.dropout = 0.0;
  tiny.init_std = 0.3;
  TransformerClassifier gc(tiny, 11);
  const std::vector<EncodedExample> batch = {{{2, 5, 6, 3}, 1}, {{2, 7, 3}, 0}, {{2, 8, 9, 10, 11, 3}, 1}};
  const double rel = GradCheck(gc, batch, 1e-5, 200, 3);
  o.Require(rel < 1e-4, "grad check relative error " + Fmt("%.2e", rel));

  TransformerConfig small;
  small.vocab_size = 16;
  small.d_model = 16;
  small.n_heads = 2;
  small.n_layers = 1;
  small.d_ff = 32;
  small.max_len = 16;
  small.dropout = 0.1;

  SplitMix64 rng(77);
  std::vector<EncodedExample> data;
  for (int i = 0; i < 16; ++i) {
    EncodedExample ex;
    ex.ids.push_back(2);
    for (int k = 0; k < 5; ++k) ex.ids.push_back(static_cast<std::int32_t>(6 + rng.Below(10)));
    ex.label = i % 2;
    if (ex.label) ex.ids[1 + rng.Below(5)] = 5;
    ex.ids.push_back(3);
    data.push_back(ex);
  }
  double worst_sum = 0.0;
  const TransformerClassifier fresh(small, 3);
  for (const auto& ex : data) {
    const auto p = fresh.PredictProba(ex.ids);
    worst_sum = std::max(worst_sum, std::abs(p[0] + p[1] - 1.0));
  }
  o.Require(worst_sum <= 1e-6, "probability rows off by " + Fmt("%.2e", worst_sum));

  TrainingConfig t;
  t.learning_rate = 1e-3;
  t.epochs = 20;
  t.batch_size = 4;
  t.seed = 1;
  const TransformerClassifier a = TrainTransformer(data, small, t);
  int correct = 0;
  for (const auto& ex : data) correct += (a.PredictProba(ex.ids)[1] >= 0.5) == (ex.label == 1);
  o.Require(correct == 16, "overfit accuracy " + std::to_string(correct) + "/16");
  const TransformerClassifier b = TrainTransformer(data, small, t);
  o.Require(a == b, "two runs with the same seed differ");
  o.Note("grad rel err " + Fmt("%.2e", rel) + ", overfit " + std::to_string(correct) + "/16");
  return o;
}

Outcome MetricsChecks() {
  Outcome o;
  SplitMix64 rng(5);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Below(200);
    std::vector<int> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.Bernoulli(0.5);
      gold[i] = rng.Bernoulli(0.3);
    }
    const ConfusionMatrix cm = Confusion(pred, gold);
    const oracle::Counts c = oracle::RecountConfusion(pred, gold);
    mismatches += !(static_cast<std::int64_t>(cm.tp) == c.tp && static_cast<std::int64_t>(cm.fp) == c.fp &&
                    static_cast<std::int64_t>(cm.fn) == c.fn && static_cast<std::int64_t>(cm.tn) == c.tn);
  }
  o.Require(mismatches == 0, std::to_string(mismatches) + " recount mismatches");
  ConfusionMatrix cm;
  cm.tp = 3;
  cm.fp = 1;
  cm.fn = 2;
  cm.tn = 4;
  const MetricsReport m = ComputeMetrics(cm);
  o.Require(std::abs(m.precision - 0.75) <= 1e-12, "precision " + Fmt("%.6f", m.precision));
  o.Require(std::abs(m.recall - 0.6) <= 1e-12, "recall " + Fmt("%.6f", m.recall));
  o.Require(std::abs(m.f1_positive - 0.6667) <= 1e-4, "F1 " + Fmt("%.6f", m.f1_positive));
  o.Note("cm(3,1,2,4): P " + Fmt("%.4f", m.precision) + " R " + Fmt("%.4f", m.recall) + " F1 " +
         Fmt("%.4f", m.f1_positive));
  return o;
}

// Table-1-shaped corpora scaled to 3,000-5,000 samples per language.
DatasetRegistry SyntheticRegistry(double noise) {
  const std::vector<std::pair<std::string, std::size_t>> sizes = {
      {"Off_en", 5000}, {"Off_ar", 3500}, {"Off_da", 3000}, {"Off_gr", 4000}, {"Off_tr", 5000}};
  DatasetRegistry reg;
  for (const CorpusShape& shape : CompetitionCorpusShapes()) {
    std::size_t n = 0;
    for (const auto& [name, size] : sizes)
      if (name == shape.name) n = size;
    const SynthVocabulary v = MakeSynthVocabulary(shape.language, 300, 8, SharedSynthMarkers());
    SynthSpec s;
    s.name = shape.name;
    s.language = shape.language;
    s.n_samples = n;
    s.positive_ratio = shape.positive_ratio;
    s.benign_vocabulary = v.benign;
    s.offensive_marker_words = v.markers;
    s.noise_rate = noise;
    s.seed = 7;
    SplitSpec split;
    split.seed = 7;
    const SplitResult r = StratifiedSplit(GenerateSynthetic(s), split);
    reg[shape.name + "_train"] = r.train;
    reg[shape.name + "_val"] = r.validation;
  }
  return reg;
}

const std::vector<std::string>& Languages() {
  static const std::vector<std::string> kNames = {"Off_en", "Off_ar", "Off_da", "Off_gr", "Off_tr"};
  return kNames;
}

// One block per validation language, as in the per-language result tables.
std::vector<ExperimentSpec> DeskMatrix() {
  ModelSpec baseline;
  ModelSpec transformer;
  transformer.family = ModelFamily::kTransformer;
  transformer.transformer.d_model = 32;
  transformer.transformer.n_heads = 2;
  transformer.transformer.n_layers = 1;
  transformer.transformer.d_ff = 64;
  transformer.transformer.max_len = 40;
  transformer.training.learning_rate = 1e-3;
  transformer.training.epochs = 4;
  transformer.training.batch_size = 32;
  std::vector<std::string> all;
  for (const auto& name : Languages()) all.push_back(name + "_train");
  std::vector<ExperimentSpec> specs;
  for (const auto& name : Languages()) {
    const std::vector<std::string> single = {name + "_train"};
    const std::string val = name + "_val";
    specs.push_back({"Baseline", baseline, single, val, 1});
    specs.push_back({"Baseline", baseline, all, val, 1});
    specs.push_back({"Transformer", transformer, single, val, 1});
    specs.push_back({"Transformer", transformer, all, val, 1});
  }
  return specs;
}

// Best achievable positive-class F1 when the only evidence is marker
// presence and each label flips the marker with probability `noise`.
double MarkerOnlyF1Bound(double ratio, double noise) {
  const double marked = ratio * (1 - noise) + (1 - ratio) * noise;
  const double precision = ratio * (1 - noise) / marked, recall = 1 - noise;
  const double follow_marker = 2 * precision * recall / (precision + recall);
  const double all_positive = 2 * ratio / (1 + ratio);
  return std::max(follow_marker, all_positive);
}

Outcome EndToEnd(std::shared_ptr<const Resources> res) {
  Outcome o;
  const auto t0 = Clock::now();
  const DatasetRegistry reg = SyntheticRegistry(0.1);
  const auto specs = DeskMatrix();
  const auto results = RunExperimentMatrix(specs, reg, res, {});
  const double secs = Seconds(t0);
  std::printf("%s", RenderReport(results, ReportFormat::kMarkdown, SelectionMetric::kF1Positive).c_str());

  const auto rows = ParseReportCsv(RenderReport(results, ReportFormat::kCsv, SelectionMetric::kF1Positive));
  std::map<std::string, int> best;
  for (const auto& r : rows) best[r.validation] += r.best;
  bool shape = rows.size() == 4 * Languages().size() && best.size() == Languages().size();
  for (const auto& [val, n] : best) shape = shape && n == 1;
  o.Require(shape, "report shape");
  o.Require(secs < 300.0, "took " + Fmt("%.1f s", secs));

  std::string summary;
  for (std::size_t k = 0; k < Languages().size(); ++k) {
    const std::string& lang = Languages()[k];
    const double base = std::max(results[4 * k].metrics.f1_positive, results[4 * k + 1].metrics.f1_positive);
    const double single = results[4 * k + 2].metrics.f1_positive, all = results[4 * k + 3].metrics.f1_positive;
    o.Require(all >= single - 0.02,
              lang + " concat transformer F1 " + Fmt("%.4f", all) + " < single " + Fmt("%.4f", single) + " - 0.02");
    o.Require(base >= 0.85, lang + " baseline F1 " + Fmt("%.4f", base) + " < 0.85");
    double ratio = 0.0;
    for (const CorpusShape& s : CompetitionCorpusShapes())
      if (s.name == lang) ratio = s.positive_ratio;
    summary += (summary.empty() ? "" : ", ") + lang + " bound " + Fmt("%.4f", MarkerOnlyF1Bound(ratio, 0.1));
  }
  o.Note(Fmt("%.1f s", secs) + "; marker-only F1 bound at noise 0.1: " + summary);

  // The baseline cells again with the label noise removed.
  const DatasetRegistry clean = SyntheticRegistry(0.0);
  std::vector<ExperimentSpec> base_only;
  for (const auto& s : specs)
    if (s.label == "Baseline" && s.fine_tuning.size() == 1) base_only.push_back(s);
  const auto clean_results = RunExperimentMatrix(base_only, clean, res, {});
  std::string clean_summary;
  for (const auto& r : clean_results)
    clean_summary += (clean_summary.empty() ? "" : ", ") + r.spec.validation + " " + Fmt("%.4f", r.metrics.f1_positive);
  o.Note("single-language baseline F1 at noise 0: " + clean_summary);
  return o;
}

Outcome SerializationRoundTrip(std::shared_ptr<const Resources> res) {
  Outcome o;
  const SynthVocabulary v = MakeSynthVocabulary("en", 80, 5);
  SynthSpec s;
  s.name = "Off_en";
  s.n_samples = 200;
  s.positive_ratio = 0.3;
  s.benign_vocabulary = v.benign;
  s.offensive_marker_words = v.markers;
  s.seed = 5;
  const Dataset train = GenerateSynthetic(s);

  ModelSpec gbdt;
  gbdt.gbdt.n_rounds = 20;
  ModelSpec tr;
  tr.family = ModelFamily::kTransformer;
  tr.transformer.d_model = 16;
  tr.transformer.n_heads = 2;
  tr.transformer.n_layers = 1;
  tr.transformer.d_ff = 32;
  tr.transformer.max_len = 32;
  tr.training.learning_rate = 1e-3;
  tr.training.epochs = 2;
  tr.training.batch_size = 16;

  for (const ModelSpec& spec : {gbdt, tr}) {
    const auto model = TrainClassifier(spec, train, res, 3);
    const auto back = LoadClassifier(model->Save(), res);
    SplitMix64 rng(11);
    int diffs = 0;
    for (int i = 0; i < 100; ++i) {
      std::string text;
      const std::size_t n = 1 + rng.Below(15);
      for (std::size_t k = 0; k < n; ++k) {
        if (k) text += ' ';
        const std::uint64_t pick = rng.Below(8);
        if (pick == 0) text += v.markers[rng.Below(v.markers.size())];
        else if (pick == 1) text += "#" + v.benign[rng.Below(v.benign.size())];
        else if (pick == 2) text += "unseen" + std::to_string(rng.Below(50));
        else text += v.benign[rng.Below(v.benign.size())];
      }
      diffs += back->PredictProba(text) != model->PredictProba(text) || back->Predict(text) != model->Predict(text);
    }
    o.Require(diffs == 0, std::string(ModelFamilyName(spec.family)) + ": " + std::to_string(diffs) + " differ");
  }
  o.Note("gbdt and transformer identical on 100 inputs each");
  return o;
}

}  // namespace
}  // namespace offdet

int main() {
  using namespace offdet;
  const auto res = Resources::Load(OFFDET_RESOURCE_DIR);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"label heuristic grid matches oracle", HeuristicGrid},
      {"corpus size arithmetic and Danish-shaped ratio", CorpusArithmetic},
      {"WordPiece matches brute-force oracle", WordPieceOracle},
      {"hashtag segmentation example", [&] { return HashtagExample(*res); }},
      {"TF-IDF hand fixture", TfIdfFixture},
      {"Flesch-Kincaid fixture and repetition invariance", FleschKincaidCheck},
      {"GBDT loss, closed-form leaf, separable accuracy", GbdtChecks},
      {"transformer gradients, probabilities, overfit, determinism", TransformerChecks},
      {"confusion recounts and metric fixture", MetricsChecks},
      {"desk-scale experiment matrix", [&] { return EndToEnd(res); }},
      {"save/load/predict round trip", [&] { return SerializationRoundTrip(res); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
