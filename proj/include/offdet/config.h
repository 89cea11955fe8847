#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "offdet/corpus.h"
#include "offdet/eval.h"
#include "offdet/pipeline.h"

namespace offdet {

struct DatasetSource {
  std::string id;
  std::string path;
  TsvFormat format = TsvFormat::kOlidLabeled;
  std::string language;
  // Also register "<id>_train" and "<id>_val" from a stratified split.
  bool split = false;
};

// Everything one CLI run needs, read from a JSON document. Relative paths are
// resolved against the directory holding the config file.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string resource_dir;  // empty: DefaultResourceDir()
  LabelHeuristic heuristic;
  double validation_ratio = 0.10;
  std::vector<DatasetSource> datasets;
  std::map<std::string, ModelSpec> models;
  // Each experiment names a model from `models`.
  std::vector<ExperimentSpec> experiments;
  std::string output_dir = ".";
  int max_parallel = 1;
  SelectionMetric selection = SelectionMetric::kF1Positive;

  // Ids referenced by experiments are declared and source files exist.
  void Validate() const;
};

// Parses a config document; unknown keys are UsageErrors so typos surface.
RunConfig ParseRunConfig(const std::string& json_text, const std::string& base_dir);
RunConfig LoadRunConfig(const std::string& path);

// Model hyperparameters from a JSON object such as
// {"family": "gbdt", "gbdt": {"n_rounds": 50}}.
ModelSpec ParseModelSpec(const std::string& json_text);

// Reads every source, labels scored sets with the heuristic and adds the
// requested splits.
DatasetRegistry BuildRegistry(const RunConfig& config);

}  // namespace offdet
