#include "offdet/progress.h"

#include "json.hpp"

namespace offdet {

std::string FormatProgress(const ProgressRecord& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j[r.unit] = r.step;
  j["loss"] = r.loss;
  return j.dump();
}

}  // namespace offdet
