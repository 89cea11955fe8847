#include "offdet/config.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "offdet/error.h"

namespace offdet {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Reads fields from one JSON object and remembers which ones were used, so
// that leftovers can be reported.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UsageError(where_ + ": expected an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw UsageError(where_ + "." + key + ": wrong type");
    }
  }

  const json* Sub(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void Finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) throw UsageError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

std::string Resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base.empty()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

ModelSpec ModelFromJson(const json& j, const std::string& where) {
  ModelSpec m;
  Fields f(j, where);
  std::string family = "gbdt";
  f.Get("family", family);
  m.family = ParseModelFamily(family);
  if (const json* g = f.Sub("gbdt")) {
    Fields gf(*g, where + ".gbdt");
    gf.Get("n_rounds", m.gbdt.n_rounds);
    gf.Get("max_depth", m.gbdt.max_depth);
    gf.Get("learning_rate", m.gbdt.learning_rate);
    gf.Get("l2_leaf_reg", m.gbdt.l2_leaf_reg);
    gf.Get("min_child_weight", m.gbdt.min_child_weight);
    gf.Finish();
  }
  if (const json* x = f.Sub("features")) {
    Fields xf(*x, where + ".features");
    xf.Get("word_n", m.features.word_n);
    xf.Get("pos_n", m.features.pos_n);
    xf.Get("char_n", m.features.char_n);
    xf.Get("word_min_df", m.features.word_min_df);
    xf.Get("pos_min_df", m.features.pos_min_df);
    xf.Get("char_min_df", m.features.char_min_df);
    xf.Finish();
  }
  if (const json* t = f.Sub("transformer")) {
    Fields tf(*t, where + ".transformer");
    tf.Get("d_model", m.transformer.d_model);
    tf.Get("n_heads", m.transformer.n_heads);
    tf.Get("n_layers", m.transformer.n_layers);
    tf.Get("d_ff", m.transformer.d_ff);
    tf.Get("max_len", m.transformer.max_len);
    tf.Get("share_layer_params", m.transformer.share_layer_params);
    tf.Get("dropout", m.transformer.dropout);
    tf.Get("init_std", m.transformer.init_std);
    tf.Finish();
  }
  if (const json* t = f.Sub("training")) {
    Fields tf(*t, where + ".training");
    tf.Get("learning_rate", m.training.learning_rate);
    tf.Get("epochs", m.training.epochs);
    tf.Get("weight_decay", m.training.weight_decay);
    tf.Get("batch_size", m.training.batch_size);
    tf.Get("beta1", m.training.beta1);
    tf.Get("beta2", m.training.beta2);
    tf.Get("epsilon", m.training.epsilon);
    tf.Finish();
  }
  f.Get("lowercase", m.lowercase);
  f.Get("vocab_path", m.vocab_path);
  f.Get("vocab_min_count", m.vocab_min_count);
  f.Get("vocab_max_size", m.vocab_max_size);
  f.Finish();
  m.gbdt.Validate();
  m.training.Validate();
  return m;
}

json ParseJson(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(what + ": " + e.what());
  }
}

}  // namespace

void RunConfig::Validate() const {
  heuristic.Validate();
  SplitSpec{validation_ratio, seed}.Validate();
  if (max_parallel < 1) throw UsageError("config: max_parallel must be >= 1");
  std::set<std::string> ids;
  for (const DatasetSource& s : datasets) {
    if (s.id.empty()) throw UsageError("config: dataset without id");
    if (!ids.insert(s.id).second) throw UsageError("config: duplicate dataset id '" + s.id + "'");
    if (s.split) {
      ids.insert(s.id + "_train");
      ids.insert(s.id + "_val");
    }
    if (!fs::exists(s.path)) throw DataError("config: dataset '" + s.id + "': no such file " + s.path);
  }
  for (const ExperimentSpec& e : experiments) {
    if (e.fine_tuning.empty()) throw UsageError("config: experiment '" + e.label + "' has no fine_tuning");
    for (const std::string& id : e.fine_tuning) {
      if (!ids.contains(id)) {
        throw UsageError("config: experiment '" + e.label + "' uses undeclared dataset '" + id + "'");
      }
    }
    if (!ids.contains(e.validation)) {
      throw UsageError("config: experiment '" + e.label + "' validates on undeclared dataset '" +
                       e.validation + "'");
    }
  }
}

ModelSpec ParseModelSpec(const std::string& json_text) {
  return ModelFromJson(ParseJson(json_text, "model"), "model");
}

RunConfig ParseRunConfig(const std::string& json_text, const std::string& base_dir) {
  const json root = ParseJson(json_text, "config");
  RunConfig c;
  Fields f(root, "config");
  f.Get("seed", c.seed);
  f.Get("resource_dir", c.resource_dir);
  c.resource_dir = Resolve(base_dir, c.resource_dir);
  if (const json* h = f.Sub("heuristic")) {
    Fields hf(*h, "config.heuristic");
    hf.Get("hi_threshold", c.heuristic.hi_threshold);
    hf.Get("lo_threshold", c.heuristic.lo_threshold);
    hf.Get("std_threshold", c.heuristic.std_threshold);
    hf.Finish();
  }
  f.Get("validation_ratio", c.validation_ratio);
  if (const json* ds = f.Sub("datasets")) {
    if (!ds->is_array()) throw UsageError("config.datasets: expected an array");
    for (std::size_t i = 0; i < ds->size(); ++i) {
      Fields df((*ds)[i], "config.datasets[" + std::to_string(i) + "]");
      DatasetSource s;
      std::string format = "olid_labeled";
      df.Get("id", s.id);
      df.Get("path", s.path);
      df.Get("format", format);
      df.Get("language", s.language);
      df.Get("split", s.split);
      df.Finish();
      s.format = ParseTsvFormat(format);
      if (s.format == TsvFormat::kUnlabeled) {
        throw UsageError("config: dataset '" + s.id + "' must be labeled or scored");
      }
      s.path = Resolve(base_dir, s.path);
      c.datasets.push_back(std::move(s));
    }
  }
  if (const json* ms = f.Sub("models")) {
    if (!ms->is_object()) throw UsageError("config.models: expected an object");
    for (const auto& [name, body] : ms->items()) {
      ModelSpec m = ModelFromJson(body, "config.models." + name);
      m.vocab_path = Resolve(base_dir, m.vocab_path);
      c.models.emplace(name, std::move(m));
    }
  }
  if (const json* es = f.Sub("experiments")) {
    if (!es->is_array()) throw UsageError("config.experiments: expected an array");
    for (std::size_t i = 0; i < es->size(); ++i) {
      const std::string where = "config.experiments[" + std::to_string(i) + "]";
      Fields ef((*es)[i], where);
      ExperimentSpec e;
      std::string model;
      e.seed = c.seed;
      ef.Get("model", model);
      ef.Get("label", e.label);
      ef.Get("fine_tuning", e.fine_tuning);
      ef.Get("validation", e.validation);
      ef.Get("seed", e.seed);
      ef.Finish();
      const auto it = c.models.find(model);
      if (it == c.models.end()) throw UsageError(where + ": unknown model '" + model + "'");
      e.model = it->second;
      if (e.label.empty()) e.label = model;
      c.experiments.push_back(std::move(e));
    }
  }
  f.Get("output_dir", c.output_dir);
  c.output_dir = Resolve(base_dir, c.output_dir);
  f.Get("max_parallel", c.max_parallel);
  std::string selection = "f1";
  f.Get("selection_metric", selection);
  if (selection == "f1") {
    c.selection = SelectionMetric::kF1Positive;
  } else if (selection == "f1_macro") {
    c.selection = SelectionMetric::kF1Macro;
  } else {
    throw UsageError("config.selection_metric: expected f1 or f1_macro");
  }
  f.Finish();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str(), fs::path(path).parent_path().string());
}

DatasetRegistry BuildRegistry(const RunConfig& config) {
  DatasetRegistry reg;
  for (const DatasetSource& s : config.datasets) {
    Dataset d = ReadLabeledTsv(s.path, s.format, s.id, s.language);
    if (s.format == TsvFormat::kScoredEnglish) d = ApplyLabelHeuristic(d, config.heuristic);
    if (s.split) {
      SplitResult r = StratifiedSplit(d, {config.validation_ratio, config.seed});
      reg[r.train.name] = std::move(r.train);
      reg[r.validation.name] = std::move(r.validation);
    }
    reg[s.id] = std::move(d);
  }
  return reg;
}

}  // namespace offdet
