// offdet: command-line front end for ingesting corpora, training and
// evaluating the two classifiers, and running experiment matrices.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "offdet/binary_io.h"
#include "offdet/config.h"
#include "offdet/corpus.h"
#include "offdet/error.h"
#include "offdet/eval.h"
#include "offdet/features.h"
#include "offdet/pipeline.h"
#include "offdet/preprocess.h"
#include "offdet/progress.h"
#include "offdet/synth.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace offdet {
namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to `path`, or to stdout when the path is empty or "-".
template <typename Fn>
void WriteOutput(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  fn(out);
  if (!out) throw DataError("write failed: " + path);
}

void LogProgress(const ProgressRecord& r) { std::cerr << FormatProgress(r) << '\n'; }

std::shared_ptr<const Resources> LoadResources(const std::string& flag, const std::string& config) {
  if (!flag.empty()) return Resources::Load(flag);
  if (!config.empty()) return Resources::Load(config);
  return Resources::Load(DefaultResourceDir());
}

Dataset ReadInput(const std::string& path, const std::string& format, const std::string& language,
                  const LabelHeuristic& heuristic = {}) {
  const TsvFormat f = ParseTsvFormat(format);
  Dataset d = ReadLabeledTsv(path, f, fs::path(path).stem().string(), language);
  if (f == TsvFormat::kScoredEnglish) d = ApplyLabelHeuristic(d, heuristic);
  return d;
}

std::vector<double> Probabilities(const TextClassifier& model, const Dataset& d) {
  std::vector<double> p;
  p.reserve(d.size());
  for (const Sample& s : d.samples) p.push_back(model.PredictProba(s.text));
  return p;
}

// --- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::string config;
  std::string output_dir;
};

int RunIngest(const IngestArgs& a) {
  RunConfig cfg = LoadRunConfig(a.config);
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  cfg.Validate();
  const DatasetRegistry reg = BuildRegistry(cfg);
  std::vector<DatasetSummary> rows;
  for (const DatasetSource& s : cfg.datasets) {
    std::vector<std::string> names{s.id};
    if (s.split) {
      names.push_back(s.id + "_train");
      names.push_back(s.id + "_val");
    }
    for (const std::string& name : names) {
      const Dataset& d = reg.at(name);
      rows.push_back(Summarize(d));
      WriteOutput((fs::path(cfg.output_dir) / (name + ".tsv")).string(),
                  [&](std::ostream& out) { WriteOlidTsv(d, out); });
    }
  }
  std::cout << FormatStatsTable(rows);
  return kOk;
}

// --- preprocess -----------------------------------------------------------

struct PreprocessArgs {
  std::string input;
  std::string format = "olid_labeled";
  std::string output;
  std::string resources;
};

int RunPreprocess(const PreprocessArgs& a) {
  const auto res = LoadResources(a.resources, "");
  Dataset d = ReadInput(a.input, a.format, "");
  for (Sample& s : d.samples) s.text = Preprocess(s.text, res->emoji, res->segmenter);
  WriteOutput(a.output, [&](std::ostream& out) {
    if (ParseTsvFormat(a.format) == TsvFormat::kUnlabeled) {
      out << "id\ttext\n";
      for (const Sample& s : d.samples) out << s.id << '\t' << s.text << '\n';
    } else {
      WriteOlidTsv(d, out);
    }
  });
  return kOk;
}

// --- featurize ------------------------------------------------------------

struct FeaturizeArgs {
  std::string train;
  std::string input;
  std::string format = "olid_labeled";
  std::string model_config;
  std::string output;
  std::string resources;
};

int RunFeaturize(const FeaturizeArgs& a) {
  const auto res = LoadResources(a.resources, "");
  const ModelSpec spec = a.model_config.empty() ? ModelSpec{} : ParseModelSpec(ReadText(a.model_config));
  const Dataset train = ReadInput(a.train, a.format, "");
  const Dataset input = a.input.empty() ? train : ReadInput(a.input, a.format, "");
  FeatureExtractor fx(spec.features, res->pos, res->sentiment);
  std::vector<std::string> texts;
  for (const Sample& s : train.samples) texts.push_back(Preprocess(s.text, res->emoji, res->segmenter));
  fx.Fit(texts);
  ordered_json info;
  info["dimension"] = fx.dimension();
  info["word_terms"] = fx.word_model().vocabulary_size();
  info["pos_terms"] = fx.pos_model().vocabulary_size();
  info["char_terms"] = fx.char_model().vocabulary_size();
  std::cerr << info.dump() << '\n';
  WriteOutput(a.output, [&](std::ostream& out) {
    for (const Sample& s : input.samples) {
      const FeatureVector v = fx.Transform(Preprocess(s.text, res->emoji, res->segmenter));
      ordered_json row;
      row["id"] = s.id;
      ordered_json dense = ordered_json::object();
      for (std::size_t k = 0; k < kDenseFeatureCount; ++k) dense[kDenseFeatureNames[k]] = v.dense[k];
      row["dense"] = dense;
      ordered_json sparse = ordered_json::array();
      for (const auto& [col, x] : v.sparse) sparse.push_back({col + kDenseFeatureCount, x});
      row["sparse"] = sparse;
      out << row.dump() << '\n';
    }
  });
  return kOk;
}

// --- train / evaluate -----------------------------------------------------

struct DataArgs {
  std::string config;
  std::vector<std::string> datasets;  // ids from the config
  std::vector<std::string> files;
  std::string format = "olid_labeled";
  std::string language;
  std::string resources;
};

struct Loaded {
  Dataset data;
  std::shared_ptr<const Resources> resources;
  std::optional<RunConfig> config;
};

Loaded LoadData(const DataArgs& a, const std::string& name) {
  Loaded l;
  std::vector<Dataset> parts;
  std::string config_resources;
  if (!a.config.empty()) {
    l.config = LoadRunConfig(a.config);
    l.config->Validate();
    config_resources = l.config->resource_dir;
    if (!a.datasets.empty()) {
      const DatasetRegistry reg = BuildRegistry(*l.config);
      for (const std::string& id : a.datasets) {
        const auto it = reg.find(id);
        if (it == reg.end()) throw UsageError("unknown dataset id '" + id + "'");
        parts.push_back(it->second);
      }
    }
  }
  for (const std::string& f : a.files) {
    parts.push_back(ReadInput(f, a.format, a.language, l.config ? l.config->heuristic : LabelHeuristic{}));
  }
  if (parts.empty()) throw UsageError("no input data: give --input files or --config with --dataset ids");
  l.data = ConcatDatasets(parts, name);
  l.resources = LoadResources(a.resources, config_resources);
  return l;
}

struct TrainArgs {
  DataArgs data;
  std::string model_name;
  std::string family;
  std::string model_config;
  std::optional<std::uint64_t> seed;
  std::string output;
};

int RunTrain(const TrainArgs& a) {
  Loaded l = LoadData(a.data, "train");
  ModelSpec spec;
  if (!a.model_config.empty()) {
    spec = ParseModelSpec(ReadText(a.model_config));
  } else if (!a.model_name.empty()) {
    if (!l.config) throw UsageError("--model needs --config");
    const auto it = l.config->models.find(a.model_name);
    if (it == l.config->models.end()) throw UsageError("unknown model '" + a.model_name + "'");
    spec = it->second;
  }
  if (!a.family.empty()) spec.family = ParseModelFamily(a.family);
  const std::uint64_t seed = a.seed.value_or(l.config ? l.config->seed : 0);
  const auto model = TrainClassifier(spec, l.data, l.resources, seed, LogProgress);
  const std::vector<std::uint8_t> bytes = model->Save();
  WriteFileBytes(a.output, bytes);
  ordered_json info;
  info["model"] = ModelFamilyName(model->family());
  info["samples"] = l.data.size();
  info["bytes"] = bytes.size();
  info["output"] = a.output;
  std::cout << info.dump() << '\n';
  return kOk;
}

struct EvaluateArgs {
  DataArgs data;
  std::string model;
  double threshold = 0.5;
};

int RunEvaluate(const EvaluateArgs& a) {
  Loaded l = LoadData(a.data, "eval");
  const auto model = LoadClassifier(ReadFileBytes(a.model), l.resources);
  const std::vector<int> gold = LabelsOf(l.data);
  std::vector<int> pred;
  for (double p : Probabilities(*model, l.data)) pred.push_back(p >= a.threshold ? 1 : 0);
  const ConfusionMatrix cm = Confusion(pred, gold);
  const MetricsReport m = ComputeMetrics(cm);
  ordered_json out;
  out["model"] = ModelFamilyName(model->family());
  out["samples"] = cm.total();
  out["tp"] = cm.tp;
  out["fp"] = cm.fp;
  out["fn"] = cm.fn;
  out["tn"] = cm.tn;
  out["accuracy"] = m.accuracy;
  out["precision"] = m.precision;
  out["recall"] = m.recall;
  out["f1"] = m.f1_positive;
  out["f1_macro"] = m.f1_macro;
  std::cout << out.dump() << '\n';
  return kOk;
}

// --- experiment -----------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::string output_dir;
  std::optional<int> max_parallel;
  std::optional<std::uint64_t> seed;
  std::string resources;
};

int RunExperiment(const ExperimentArgs& a) {
  RunConfig cfg = LoadRunConfig(a.config);
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  if (a.max_parallel) cfg.max_parallel = *a.max_parallel;
  if (a.seed) {
    cfg.seed = *a.seed;
    for (ExperimentSpec& e : cfg.experiments) e.seed = *a.seed;
  }
  cfg.Validate();
  if (cfg.experiments.empty()) throw UsageError("config has no experiments");
  const auto resources = LoadResources(a.resources, cfg.resource_dir);
  const DatasetRegistry reg = BuildRegistry(cfg);

  MatrixOptions opts;
  opts.max_parallel = cfg.max_parallel;
  std::mutex log_mu;
  opts.progress = [&](std::size_t cell, const ProgressRecord& r) {
    ordered_json j;
    j["experiment"] = cell + 1;
    j["model"] = r.model;
    j[r.unit] = r.step;
    j["loss"] = r.loss;
    std::lock_guard lock(log_mu);
    std::cerr << j.dump() << '\n';
  };
  const std::vector<ExperimentResult> results = RunExperimentMatrix(cfg.experiments, reg, resources, opts);

  const std::string md = RenderReport(results, ReportFormat::kMarkdown, cfg.selection);
  const std::string csv = RenderReport(results, ReportFormat::kCsv, cfg.selection);
  const fs::path dir(cfg.output_dir);
  WriteOutput((dir / "report.md").string(), [&](std::ostream& out) { out << md; });
  WriteOutput((dir / "report.csv").string(), [&](std::ostream& out) { out << csv; });
  std::cout << md << '\n';
  for (const auto& [validation, index] : SelectBestPerValidation(results, cfg.selection)) {
    const ExperimentResult& r = results[index];
    std::printf("best for %s: %s trained on %s (F1 %.2f, F1-macro %.2f)\n", validation.c_str(),
                r.spec.label.c_str(), r.spec.FineTuningName().c_str(), 100 * r.metrics.f1_positive,
                100 * r.metrics.f1_macro);
  }
  return kOk;
}

// --- predict --------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string input;
  std::string output;
  bool with_text = false;
  std::string resources;
};

int RunPredict(const PredictArgs& a) {
  const auto res = LoadResources(a.resources, "");
  const auto model = LoadClassifier(ReadFileBytes(a.model), res);
  const Dataset d = ReadLabeledTsv(a.input, TsvFormat::kUnlabeled, "input", "");
  WriteOutput(a.output, [&](std::ostream& out) {
    out << (a.with_text ? "id\ttext\tlabel\n" : "id\tlabel\n");
    for (const Sample& s : d.samples) {
      const char* label = model->Predict(s.text) ? "OFF" : "NOT";
      out << s.id << '\t';
      if (a.with_text) out << s.text << '\t';
      out << label << '\n';
    }
  });
  return kOk;
}

// --- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string language = "en";
  std::size_t n = 3000;
  double ratio = 0.2;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::size_t benign = 300;
  std::size_t markers = 8;
  bool shared_markers = false;
  bool table = false;
  std::string output;
};

Dataset SynthFor(const std::string& name, const std::string& language, double ratio,
                 const SynthArgs& a) {
  const SynthVocabulary v = MakeSynthVocabulary(
      language, a.benign, a.markers, a.shared_markers ? SharedSynthMarkers() : std::vector<std::string>{});
  SynthSpec s;
  s.name = name;
  s.language = language;
  s.n_samples = a.n;
  s.positive_ratio = ratio;
  s.benign_vocabulary = v.benign;
  s.offensive_marker_words = v.markers;
  s.noise_rate = a.noise;
  s.seed = a.seed;
  return GenerateSynthetic(s);
}

int RunSynth(const SynthArgs& a) {
  if (!a.table) {
    const Dataset d = SynthFor("synth_" + a.language, a.language, a.ratio, a);
    WriteOutput(a.output, [&](std::ostream& out) { WriteOlidTsv(d, out); });
    return kOk;
  }
  if (a.output.empty() || a.output == "-") throw UsageError("--table needs --output DIR");
  std::vector<DatasetSummary> rows;
  for (const CorpusShape& shape : CompetitionCorpusShapes()) {
    const Dataset d = SynthFor(shape.name, shape.language, shape.positive_ratio, a);
    WriteOutput((fs::path(a.output) / (shape.name + ".tsv")).string(),
                [&](std::ostream& out) { WriteOlidTsv(d, out); });
    rows.push_back(Summarize(d));
  }
  std::cout << FormatStatsTable(rows);
  return kOk;
}

void AddDataOptions(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--config", d.config, "Run config (JSON)");
  cmd->add_option("--dataset", d.datasets, "Dataset id from the config; repeat to concatenate");
  cmd->add_option("--input", d.files, "TSV file; repeat to concatenate");
  cmd->add_option("--format", d.format, "olid_labeled or scored_english");
  cmd->add_option("--language", d.language, "Language tag for --input files");
  cmd->add_option("--resources", d.resources, "Resource directory");
}

int Main(int argc, char** argv) {
  CLI::App app{"Offensive language identification toolkit"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse, label and split datasets; print statistics");
  c_ingest->add_option("--config", ingest.config, "Run config (JSON)")->required();
  c_ingest->add_option("--output-dir", ingest.output_dir, "Directory for canonical TSV files");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Replace emoji and split hashtags");
  c_pre->add_option("--input", pre.input, "TSV file")->required();
  c_pre->add_option("--format", pre.format, "olid_labeled, scored_english or unlabeled");
  c_pre->add_option("--output", pre.output, "Output TSV (default stdout)");
  c_pre->add_option("--resources", pre.resources, "Resource directory");

  FeaturizeArgs feat;
  auto* c_feat = app.add_subcommand("featurize", "Fit baseline features and emit JSON lines");
  c_feat->add_option("--train", feat.train, "TSV used to fit the TF-IDF models")->required();
  c_feat->add_option("--input", feat.input, "TSV to transform (default: --train)");
  c_feat->add_option("--format", feat.format, "Format of both files");
  c_feat->add_option("--model-config", feat.model_config, "JSON model spec with a features section");
  c_feat->add_option("--output", feat.output, "Output file (default stdout)");
  c_feat->add_option("--resources", feat.resources, "Resource directory");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a classifier and save it");
  AddDataOptions(c_train, train.data);
  c_train->add_option("--model", train.model_name, "Model name from the config");
  c_train->add_option("--family", train.family, "gbdt or transformer");
  c_train->add_option("--model-config", train.model_config, "JSON model spec");
  c_train->add_option("--seed", train.seed, "Training seed");
  c_train->add_option("--output", train.output, "Model file")->required();

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Score a saved model on labeled data");
  AddDataOptions(c_eval, eval.data);
  c_eval->add_option("--model", eval.model, "Model file")->required();
  c_eval->add_option("--threshold", eval.threshold, "Decision threshold");

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Run an experiment matrix and write reports");
  c_exp->add_option("--config", exp.config, "Run config (JSON)")->required();
  c_exp->add_option("--output-dir", exp.output_dir, "Report directory");
  c_exp->add_option("--max-parallel", exp.max_parallel, "Concurrent cells");
  c_exp->add_option("--seed", exp.seed, "Seed for the split and every experiment");
  c_exp->add_option("--resources", exp.resources, "Resource directory");

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Label id<TAB>text rows as OFF or NOT");
  c_pred->add_option("--model", pred.model, "Model file")->required();
  c_pred->add_option("--input", pred.input, "TSV with id and text columns")->required();
  c_pred->add_option("--output", pred.output, "Output TSV (default stdout)");
  c_pred->add_flag("--with-text", pred.with_text, "Also write the text column (olid_labeled layout)");
  c_pred->add_option("--resources", pred.resources, "Resource directory");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  c_syn->add_option("--language", syn.language, "Language tag");
  c_syn->add_option("-n,--samples", syn.n, "Samples per corpus");
  c_syn->add_option("--ratio", syn.ratio, "Positive ratio");
  c_syn->add_option("--noise", syn.noise, "Label noise rate");
  c_syn->add_option("--seed", syn.seed, "Seed");
  c_syn->add_option("--benign-words", syn.benign, "Benign vocabulary size");
  c_syn->add_option("--marker-words", syn.markers, "Marker vocabulary size");
  c_syn->add_flag("--shared-markers", syn.shared_markers, "Add markers common to all languages");
  c_syn->add_flag("--table", syn.table, "Write one corpus per published language shape");
  c_syn->add_option("--output", syn.output, "Output file, or directory with --table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*c_ingest) return RunIngest(ingest);
  if (*c_pre) return RunPreprocess(pre);
  if (*c_feat) return RunFeaturize(feat);
  if (*c_train) return RunTrain(train);
  if (*c_eval) return RunEvaluate(eval);
  if (*c_exp) return RunExperiment(exp);
  if (*c_pred) return RunPredict(pred);
  if (*c_syn) return RunSynth(syn);
  return kUsage;
}

}  // namespace
}  // namespace offdet

int main(int argc, char** argv) {
  using namespace offdet;
  try {
    return Main(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
