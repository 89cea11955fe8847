#include "offdet/binary_io.h"

#include <fstream>
#include <iterator>

namespace offdet {

const char* ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGbdt:
      return "gbdt";
    case ModelKind::kTransformer:
      return "transformer";
    case ModelKind::kTfIdf:
      return "tfidf";
    case ModelKind::kGbdtPipeline:
      return "gbdt-pipeline";
    case ModelKind::kTransformerPipeline:
      return "transformer-pipeline";
  }
  return "unknown";
}

ModelKind PeekModelKind(std::span<const std::uint8_t> data) {
  if (data.size() < 9 || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw DataError("model payload: bad magic");
  }
  ByteReader r(data.subspan(4, 4));
  if (r.U32() != kFormatVersion) throw DataError("model payload: unsupported format version");
  return static_cast<ModelKind>(data[8]);
}

std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace offdet
