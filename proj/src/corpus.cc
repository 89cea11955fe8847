#include "offdet/corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "offdet/error.h"
#include "offdet/rng.h"

namespace offdet {
namespace {

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

double ParseReal(std::string_view field, std::size_t line_no, const char* what) {
  field = Trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw DataError("invalid " + std::string(what) + " '" + std::string(field) + "', line " +
                    std::to_string(line_no));
  }
  return v;
}

std::string Sanitize(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

void LabelHeuristic::Validate() const {
  if (!(0.0 <= lo_threshold && lo_threshold < hi_threshold && hi_threshold <= 1.0)) {
    throw UsageError("label heuristic requires 0 <= lo < hi <= 1");
  }
  if (!(std_threshold > 0.0)) throw UsageError("label heuristic requires std_threshold > 0");
}

void SplitSpec::Validate() const {
  if (!(validation_ratio > 0.0 && validation_ratio < 1.0)) {
    throw UsageError("validation ratio must lie strictly between 0 and 1");
  }
}

TsvFormat ParseTsvFormat(const std::string& name) {
  if (name == "olid_labeled" || name == "olid") return TsvFormat::kOlidLabeled;
  if (name == "scored_english" || name == "scored") return TsvFormat::kScoredEnglish;
  if (name == "unlabeled") return TsvFormat::kUnlabeled;
  throw UsageError("unknown TSV format '" + name +
                   "' (expected olid_labeled, scored_english or unlabeled)");
}

Dataset ParseLabeledTsv(std::istream& in, TsvFormat format, const std::string& name,
                        const std::string& language) {
  Dataset d;
  d.name = name;
  d.language = language;
  std::unordered_set<std::string> seen;
  const std::size_t required = format == TsvFormat::kOlidLabeled     ? 3
                               : format == TsvFormat::kScoredEnglish ? 4
                                                                     : 2;

  std::string raw;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty()) continue;

    const auto fields = SplitTabs(line);
    if (first_content_line) {
      first_content_line = false;
      std::string head(Trim(fields[0]));
      std::transform(head.begin(), head.end(), head.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (head == "id") continue;
    }
    if (fields.size() < required) {
      throw DataError("malformed row: expected " + std::to_string(required) + " columns, got " +
                      std::to_string(fields.size()) + ", line " + std::to_string(line_no));
    }

    Sample s;
    s.id = std::string(Trim(fields[0]));
    if (s.id.empty()) throw DataError("empty id, line " + std::to_string(line_no));
    s.text = std::string(Trim(fields[1]));
    if (s.text.empty()) throw DataError("empty text, line " + std::to_string(line_no));
    s.language = language;
    s.source = name;

    if (format == TsvFormat::kOlidLabeled) {
      const std::string_view tag = Trim(fields[2]);
      if (tag == "OFF") {
        s.label = Label::kPositive;
      } else if (tag == "NOT") {
        s.label = Label::kNegative;
      } else {
        throw DataError("unknown label, line " + std::to_string(line_no));
      }
    } else if (format == TsvFormat::kScoredEnglish) {
      const double avg = ParseReal(fields[2], line_no, "average");
      const double sd = ParseReal(fields[3], line_no, "std");
      if (!(avg >= 0.0 && avg <= 1.0)) {
        throw DataError("average outside [0,1], line " + std::to_string(line_no));
      }
      if (!(sd >= 0.0) || !std::isfinite(sd)) {
        throw DataError("negative std, line " + std::to_string(line_no));
      }
      s.score = Score{avg, sd};
    }

    if (!seen.insert(s.id).second) {
      throw DataError("duplicate id '" + s.id + "', line " + std::to_string(line_no));
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

Dataset ReadLabeledTsv(const std::string& path, TsvFormat format, const std::string& name,
                       const std::string& language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return ParseLabeledTsv(in, format, name, language);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void WriteOlidTsv(const Dataset& d, std::ostream& out) {
  out << "id\ttext\tlabel\n";
  for (const Sample& s : d.samples) {
    if (!s.label) throw UsageError("cannot write unlabeled sample '" + s.id + "'");
    out << Sanitize(s.id) << '\t' << Sanitize(s.text) << '\t'
        << (*s.label == Label::kPositive ? "OFF" : "NOT") << '\n';
  }
}

Label ScoreToLabel(double average, double stdev, const LabelHeuristic& h) {
  if (average > h.hi_threshold) return Label::kPositive;
  if (average > h.lo_threshold && average <= h.hi_threshold && stdev < h.std_threshold) {
    return Label::kPositive;
  }
  return Label::kNegative;
}

Dataset ApplyLabelHeuristic(const Dataset& d, const LabelHeuristic& h) {
  h.Validate();
  Dataset out = d;
  for (Sample& s : out.samples) {
    if (!s.label && s.score) s.label = ScoreToLabel(s.score->average, s.score->stdev, h);
  }
  return out;
}

SplitResult StratifiedSplit(const Dataset& d, const SplitSpec& spec) {
  spec.Validate();
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& label = d.samples[i].label;
    if (!label) throw UsageError("stratified split requires labeled samples ('" + d.samples[i].id + "')");
    by_class[ToInt(*label)].push_back(i);
  }

  const double ratio = spec.validation_ratio;
  const auto total = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(d.size())));

  // Largest-remainder apportionment of `total` across the classes.
  std::size_t take[2];
  double frac[2];
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    if (!by_class[c].empty() && by_class[c].size() < 2) {
      throw DataError("class too small to stratify");
    }
    const double exact = ratio * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact));
    frac[c] = exact - std::floor(exact);
    assigned += take[c];
  }
  if (by_class[0].empty() || by_class[1].empty()) throw DataError("class too small to stratify");
  const int order[2] = {frac[1] > frac[0] ? 1 : 0, frac[1] > frac[0] ? 0 : 1};
  for (int k = 0; assigned < total && k < 2; ++k) {
    ++take[order[k]];
    ++assigned;
  }

  std::vector<bool> to_validation(d.size(), false);
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> idx = by_class[c];
    SplitMix64 rng(MixSeed(spec.seed, static_cast<std::uint64_t>(c) + 1));
    Shuffle(std::span<std::size_t>(idx), rng);
    for (std::size_t k = 0; k < take[c]; ++k) to_validation[idx[k]] = true;
  }

  SplitResult r;
  r.train.name = d.name + "_train";
  r.validation.name = d.name + "_val";
  r.train.language = r.validation.language = d.language;
  for (std::size_t i = 0; i < d.size(); ++i) {
    (to_validation[i] ? r.validation : r.train).samples.push_back(d.samples[i]);
  }
  return r;
}

Dataset ConcatDatasets(std::span<const Dataset> parts, const std::string& name) {
  if (parts.empty()) throw UsageError("concat_datasets: empty part list");
  Dataset out;
  out.name = name;
  out.language = parts.front().language;
  const bool namespaced = parts.size() > 1;
  std::size_t total = 0;
  for (const Dataset& p : parts) {
    total += p.size();
    if (p.language != out.language) out.language = "multi";
  }
  out.samples.reserve(total);
  for (const Dataset& p : parts) {
    for (const Sample& s : p.samples) {
      Sample copy = s;
      if (namespaced) {
        const std::string prefix = s.source + ":";
        if (copy.id.rfind(prefix, 0) != 0) copy.id = prefix + copy.id;
      }
      out.samples.push_back(std::move(copy));
    }
  }
  if (namespaced) {
    std::unordered_set<std::string> seen;
    seen.reserve(out.samples.size());
    for (const Sample& s : out.samples) {
      if (!seen.insert(s.id).second) {
        throw DataError("concat_datasets: duplicate id '" + s.id + "'");
      }
    }
  }
  return out;
}

DatasetStats ComputeStats(const Dataset& d) {
  if (d.samples.empty()) throw DataError("dataset_stats: empty dataset '" + d.name + "'");
  DatasetStats st;
  st.count = d.samples.size();
  for (const Sample& s : d.samples) {
    if (!s.label) throw UsageError("dataset_stats requires labeled samples ('" + s.id + "')");
    st.positives += ToInt(*s.label);
  }
  st.positive_ratio = static_cast<double>(st.positives) / static_cast<double>(st.count);
  return st;
}

DatasetSummary Summarize(const Dataset& d) {
  const DatasetStats st = ComputeStats(d);
  return {d.name, st.count, st.positives};
}

DatasetSummary ConcatSummaries(std::span<const DatasetSummary> parts, const std::string& name) {
  if (parts.empty()) throw UsageError("concat: empty part list");
  DatasetSummary out{name, 0, 0};
  for (const auto& p : parts) {
    out.count += p.count;
    out.positives += p.positives;
  }
  return out;
}

std::string FormatStatsTable(std::span<const DatasetSummary> rows) {
  std::ostringstream os;
  os << "| Dataset | No. Samples | Positive Ratio (%) |\n";
  os << "|---|---:|---:|\n";
  for (const auto& r : rows) {
    const double pct =
        r.count == 0 ? 0.0 : 100.0 * static_cast<double>(r.positives) / static_cast<double>(r.count);
    os << "| " << r.name << " | " << r.count << " | " << std::fixed << std::setprecision(2) << pct
       << " |\n";
  }
  return os.str();
}

}  // namespace offdet
