#include "offdet/eval.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "offdet/error.h"

namespace offdet {
namespace {

double SafeDiv(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double F1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

double Selected(const MetricsReport& m, SelectionMetric metric) {
  return metric == SelectionMetric::kF1Positive ? m.f1_positive : m.f1_macro;
}

std::string Pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::vector<std::string>> ParseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

double ParsePct(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("csv: bad number '" + s + "'");
  return v;
}

}  // namespace

ConfusionMatrix Confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw UsageError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw UsageError("confusion: no samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool y = labels[i] != 0;
    if (p && y) {
      ++cm.tp;
    } else if (p) {
      ++cm.fp;
    } else if (y) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

MetricsReport ComputeMetrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UsageError("metrics: empty confusion matrix");
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto fn = static_cast<double>(cm.fn);
  const auto tn = static_cast<double>(cm.tn);
  MetricsReport m;
  m.accuracy = (tp + tn) / static_cast<double>(cm.total());
  m.precision = SafeDiv(tp, tp + fp);
  m.recall = SafeDiv(tp, tp + fn);
  m.f1_positive = F1(m.precision, m.recall);
  const double f1_negative = F1(SafeDiv(tn, tn + fn), SafeDiv(tn, tn + fp));
  m.f1_macro = 0.5 * (m.f1_positive + f1_negative);
  return m;
}

std::string ExperimentSpec::FineTuningName() const {
  std::string out;
  for (std::size_t i = 0; i < fine_tuning.size(); ++i) {
    if (i > 0) out += "+";
    out += fine_tuning[i];
  }
  return out;
}

std::vector<ExperimentResult> RunExperimentMatrix(std::span<const ExperimentSpec> specs,
                                                  const DatasetRegistry& registry,
                                                  std::shared_ptr<const Resources> resources,
                                                  const MatrixOptions& options) {
  if (specs.empty()) throw UsageError("experiment matrix: no experiments");
  for (const auto& spec : specs) {
    if (spec.fine_tuning.empty()) {
      throw UsageError("experiment '" + spec.label + "': no fine-tuning datasets");
    }
    for (const auto& id : spec.fine_tuning) {
      if (!registry.contains(id)) throw DataError("experiment '" + spec.label + "': unknown dataset '" + id + "'");
    }
    if (!registry.contains(spec.validation)) {
      throw DataError("experiment '" + spec.label + "': unknown validation dataset '" + spec.validation + "'");
    }
  }

  // Cells with the same model, training data and seed share one trained
  // model, scored on each of their validation sets.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto same = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      const ExperimentSpec& first = specs[g.front()];
      return first.model == specs[i].model && first.fine_tuning == specs[i].fine_tuning &&
             first.seed == specs[i].seed;
    });
    if (same == groups.end()) {
      groups.push_back({i});
    } else {
      same->push_back(i);
    }
  }

  std::vector<ExperimentResult> results(specs.size());
  const auto run_group = [&](std::size_t g) {
    const std::size_t head = groups[g].front();
    const ExperimentSpec& spec = specs[head];
    std::vector<Dataset> parts;
    for (const auto& id : spec.fine_tuning) parts.push_back(registry.at(id));
    const Dataset train = ConcatDatasets(parts, spec.FineTuningName());
    ProgressFn progress;
    if (options.progress) progress = [&, head](const ProgressRecord& r) { options.progress(head, r); };
    const auto clf = TrainClassifier(spec.model, train, resources, spec.seed, progress);
    for (std::size_t i : groups[g]) {
      const Dataset& val = registry.at(specs[i].validation);
      std::vector<int> preds;
      preds.reserve(val.size());
      for (const auto& s : val.samples) preds.push_back(clf->Predict(s.text));
      results[i].spec = specs[i];
      results[i].confusion = Confusion(preds, LabelsOf(val));
      results[i].metrics = ComputeMetrics(results[i].confusion);
    }
  };
  const auto fail = [&](std::size_t g, const std::exception& e) {
    const std::size_t i = groups[g].front();
    return DataError("experiment " + std::to_string(i + 1) + " ('" + specs[i].label + "' on " +
                     specs[i].FineTuningName() + ") failed: " + e.what());
  };

  const std::size_t workers =
      std::min<std::size_t>(groups.size(), static_cast<std::size_t>(std::max(1, options.max_parallel)));
  if (workers <= 1) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      try {
        run_group(g);
      } catch (const std::exception& e) {
        throw fail(g, e);
      }
    }
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  std::size_t failed_group = groups.size();
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t g = next++; g < groups.size(); g = next++) {
        try {
          run_group(g);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (g < failed_group) {
            failed_group = g;
            first_error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      throw fail(failed_group, e);
    }
  }
  return results;
}

std::size_t SelectBest(std::span<const ExperimentResult> results, SelectionMetric metric) {
  if (results.empty()) throw UsageError("select_best: no results");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const double f = Selected(results[i].metrics, metric);
    const double bf = Selected(results[best].metrics, metric);
    if (f > bf || (f == bf && results[i].metrics.accuracy > results[best].metrics.accuracy)) best = i;
  }
  return best;
}

std::map<std::string, std::size_t> SelectBestPerValidation(std::span<const ExperimentResult> results,
                                                           SelectionMetric metric) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < results.size(); ++i) groups[results[i].spec.validation].push_back(i);
  std::map<std::string, std::size_t> best;
  for (const auto& [val, idx] : groups) {
    std::vector<ExperimentResult> subset;
    for (std::size_t i : idx) subset.push_back(results[i]);
    best[val] = idx[SelectBest(subset, metric)];
  }
  return best;
}

std::string RenderReport(std::span<const ExperimentResult> results, ReportFormat format,
                         SelectionMetric metric) {
  std::vector<bool> flagged(results.size(), false);
  for (const auto& [val, i] : SelectBestPerValidation(results, metric)) flagged[i] = true;

  std::ostringstream os;
  if (format == ReportFormat::kCsv) {
    os << "Model,Fine-Tuning Dataset,Validation Dataset,Acc(%),Pr(%),Rec(%),F1(%),F1-macro(%),Best\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      os << CsvField(r.spec.label) << ',' << CsvField(r.spec.FineTuningName()) << ','
         << CsvField(r.spec.validation) << ',' << Pct(r.metrics.accuracy) << ','
         << Pct(r.metrics.precision) << ',' << Pct(r.metrics.recall) << ','
         << Pct(r.metrics.f1_positive) << ',' << Pct(r.metrics.f1_macro) << ','
         << (flagged[i] ? "yes" : "") << '\n';
    }
    return os.str();
  }
  os << "| Model | Fine-Tuning Dataset | Validation Dataset | Acc (%) | Pr (%) | Rec (%) | F1 (%) | "
        "F1-macro (%) | Best |\n";
  os << "|---|---|---|---:|---:|---:|---:|---:|:---:|\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const std::string f1 = Pct(r.metrics.f1_positive);
    os << "| " << r.spec.label << " | " << r.spec.FineTuningName() << " | " << r.spec.validation
       << " | " << Pct(r.metrics.accuracy) << " | " << Pct(r.metrics.precision) << " | "
       << Pct(r.metrics.recall) << " | " << (flagged[i] ? "**" + f1 + "**" : f1) << " | "
       << Pct(r.metrics.f1_macro) << " | " << (flagged[i] ? "*" : "") << " |\n";
  }
  return os.str();
}

std::vector<ReportRow> ParseReportCsv(const std::string& csv) {
  const auto rows = ParseCsv(csv);
  if (rows.empty()) throw DataError("report csv: missing header");
  std::vector<ReportRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 9) throw DataError("report csv: expected 9 fields on row " + std::to_string(i + 1));
    ReportRow r;
    r.model = f[0];
    r.fine_tuning = f[1];
    r.validation = f[2];
    r.accuracy = ParsePct(f[3]);
    r.precision = ParsePct(f[4]);
    r.recall = ParsePct(f[5]);
    r.f1 = ParsePct(f[6]);
    r.f1_macro = ParsePct(f[7]);
    r.best = f[8] == "yes";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace offdet
