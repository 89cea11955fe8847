#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace offdet {

enum class Label : std::uint8_t { kNegative = 0, kPositive = 1 };

inline int ToInt(Label l) { return l == Label::kPositive ? 1 : 0; }
inline Label FromBool(bool positive) { return positive ? Label::kPositive : Label::kNegative; }

// Semi-supervised annotation: mean and standard deviation of a pool of
// model scores for one sample.
struct Score {
  double average = 0.0;
  double stdev = 0.0;

  bool operator==(const Score&) const = default;
};

struct Sample {
  std::string id;
  std::string text;
  std::optional<Label> label;
  std::optional<Score> score;
  std::string language;
  std::string source;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::string name;
  std::string language;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

// Three-rule conversion of (average, stdev) scores to a binary label:
//   average > hi                                  -> positive
//   lo < average <= hi  and  stdev < std_threshold -> positive
//   otherwise                                      -> negative
struct LabelHeuristic {
  double hi_threshold = 0.6;
  double lo_threshold = 0.5;
  double std_threshold = 0.1;

  void Validate() const;
};

struct SplitSpec {
  double validation_ratio = 0.10;
  std::uint64_t seed = 0;

  void Validate() const;
};

// kUnlabeled reads `id<TAB>text` and leaves both label and score empty.
enum class TsvFormat { kOlidLabeled, kScoredEnglish, kUnlabeled };

TsvFormat ParseTsvFormat(const std::string& name);

// Reads `id<TAB>text<TAB>label` (OFF/NOT) or `id<TAB>text<TAB>average<TAB>std`
// rows. A first row whose first field is "id" is treated as a header. Extra
// trailing columns are ignored; missing columns, bad labels, out-of-range
// scores, empty text and duplicate ids are DataErrors naming the line.
Dataset ParseLabeledTsv(std::istream& in, TsvFormat format, const std::string& name,
                        const std::string& language);
Dataset ReadLabeledTsv(const std::string& path, TsvFormat format, const std::string& name,
                       const std::string& language);

// Writes `id<TAB>text<TAB>label` with a header row. Tabs and line breaks
// inside text are replaced by spaces.
void WriteOlidTsv(const Dataset& d, std::ostream& out);

Label ScoreToLabel(double average, double stdev, const LabelHeuristic& h);

// Returns a copy in which every scored sample has received its label.
Dataset ApplyLabelHeuristic(const Dataset& d, const LabelHeuristic& h);

struct SplitResult {
  Dataset train;
  Dataset validation;
};

// Per-class seeded shuffle; the first k_c of each class go to validation,
// where the k_c are largest-remainder apportionments of round(ratio * n).
// Both outputs keep the input order.
SplitResult StratifiedSplit(const Dataset& d, const SplitSpec& spec);

// Appends parts in order. With more than one part, ids are prefixed with
// "<source>:" (once) so samples from different sources cannot collide.
Dataset ConcatDatasets(std::span<const Dataset> parts, const std::string& name);

struct DatasetStats {
  std::uint64_t count = 0;
  std::uint64_t positives = 0;
  double positive_ratio = 0.0;
};

DatasetStats ComputeStats(const Dataset& d);

// Count-level description of a dataset, for arithmetic over datasets that are
// not materialized (e.g. published corpus sizes).
struct DatasetSummary {
  std::string name;
  std::uint64_t count = 0;
  std::uint64_t positives = 0;
};

DatasetSummary Summarize(const Dataset& d);
DatasetSummary ConcatSummaries(std::span<const DatasetSummary> parts, const std::string& name);

// Renders "Dataset | No. Samples | Positive Ratio (%)" as a markdown table.
std::string FormatStatsTable(std::span<const DatasetSummary> rows);

}  // namespace offdet
