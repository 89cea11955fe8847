#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "offdet/corpus.h"
#include "offdet/pipeline.h"

namespace offdet {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Positive (offensive) = 1.
ConfusionMatrix Confusion(std::span<const int> predictions, std::span<const int> labels);

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1_positive = 0.0;
  double f1_macro = 0.0;
};

// Zero denominators yield 0.
MetricsReport ComputeMetrics(const ConfusionMatrix& cm);

struct ExperimentSpec {
  std::string label;  // e.g. "Baseline", "Transformer"
  ModelSpec model;
  std::vector<std::string> fine_tuning;  // dataset ids, concatenated in order
  std::string validation;
  std::uint64_t seed = 0;

  // "Off_da_train+OLID+HASOC_all"
  std::string FineTuningName() const;
};

struct ExperimentResult {
  ExperimentSpec spec;
  ConfusionMatrix confusion;
  MetricsReport metrics;
};

using DatasetRegistry = std::map<std::string, Dataset>;

struct MatrixOptions {
  // Cells run concurrently up to this many at once; results do not depend on it.
  int max_parallel = 1;
  // Called with the cell index and each training progress record.
  std::function<void(std::size_t, const ProgressRecord&)> progress;
};

// Resolves every dataset id before training anything, then trains and
// evaluates each cell. Cells that differ only in the validation set share
// one trained model. Results come back in spec order.
std::vector<ExperimentResult> RunExperimentMatrix(std::span<const ExperimentSpec> specs,
                                                  const DatasetRegistry& registry,
                                                  std::shared_ptr<const Resources> resources,
                                                  const MatrixOptions& options = {});

enum class SelectionMetric { kF1Positive, kF1Macro };

// Highest F1, then highest accuracy, then first occurrence.
std::size_t SelectBest(std::span<const ExperimentResult> results,
                       SelectionMetric metric = SelectionMetric::kF1Positive);

// Index of the best result for each validation dataset id.
std::map<std::string, std::size_t> SelectBestPerValidation(
    std::span<const ExperimentResult> results, SelectionMetric metric = SelectionMetric::kF1Positive);

enum class ReportFormat { kMarkdown, kCsv };

// Columns: Model, Fine-Tuning Dataset, Validation Dataset, Acc(%), Pr(%),
// Rec(%), F1(%), F1-macro(%), Best. Percentages use two decimals; the best
// row of each validation dataset is flagged.
std::string RenderReport(std::span<const ExperimentResult> results, ReportFormat format,
                         SelectionMetric metric = SelectionMetric::kF1Positive);

struct ReportRow {
  std::string model;
  std::string fine_tuning;
  std::string validation;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double f1_macro = 0.0;
  bool best = false;
};

// Parses the CSV produced by RenderReport (percent values).
std::vector<ReportRow> ParseReportCsv(const std::string& csv);

}  // namespace offdet
