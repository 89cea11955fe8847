#pragma once

#include <functional>
#include <string>

namespace offdet {

// One training progress record: a boosting round or an epoch and its loss.
struct ProgressRecord {
  std::string model;
  std::string unit;  // "round" or "epoch"
  int step = 0;
  double loss = 0.0;
};

using ProgressFn = std::function<void(const ProgressRecord&)>;

// Single-line JSON rendering, e.g. {"model":"gbdt","round":3,"loss":0.41}.
std::string FormatProgress(const ProgressRecord& r);

}  // namespace offdet
