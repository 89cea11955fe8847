#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "offdet/error.h"

namespace offdet {

// Kinds carried in the serialized header. Values are part of the on-disk
// format and must never be renumbered.
enum class ModelKind : std::uint8_t {
  kGbdt = 1,
  kTransformer = 2,
  kTfIdf = 3,
  kGbdtPipeline = 16,
  kTransformerPipeline = 17,
};

const char* ModelKindName(ModelKind kind);

// Every serialized artifact starts with:
//   bytes 0..3  magic "ODTM"
//   bytes 4..7  format version, u32 little-endian
//   byte  8     ModelKind
// followed by a kind-specific payload. All integers are little-endian, reals
// are IEEE-754 binary64 bit patterns, strings are u32 length + raw bytes.
inline constexpr char kMagic[4] = {'O', 'D', 'T', 'M'};
inline constexpr std::uint32_t kFormatVersion = 1;

class ByteWriter {
 public:
  void U8(std::uint8_t v) { buf_.push_back(v); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void I32(std::int32_t v) { U32(static_cast<std::uint32_t>(v)); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Str(std::string_view s) {
    U32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void F64Array(std::span<const double> values) {
    U64(values.size());
    for (double v : values) F64(v);
  }
  void Bytes(std::span<const std::uint8_t> bytes) {
    U64(bytes.size());
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }
  void Header(ModelKind kind) {
    buf_.insert(buf_.end(), kMagic, kMagic + 4);
    U32(kFormatVersion);
    U8(static_cast<std::uint8_t>(kind));
  }

  std::vector<std::uint8_t> Take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t U8() {
    Need(1);
    return data_[pos_++];
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t U64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::int32_t I32() { return static_cast<std::int32_t>(U32()); }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string Str() {
    const std::uint32_t n = U32();
    Need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> F64Array() {
    const std::uint64_t n = U64();
    Need(n * 8);
    std::vector<double> out(n);
    for (auto& v : out) v = F64();
    return out;
  }
  std::vector<std::uint8_t> Bytes() {
    const std::uint64_t n = U64();
    Need(n);
    std::vector<std::uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }

  // Validates magic, version and kind; throws DataError on any mismatch.
  void ExpectHeader(ModelKind kind) {
    Need(9);
    if (std::memcmp(data_.data() + pos_, kMagic, 4) != 0) {
      throw DataError("model payload: bad magic");
    }
    pos_ += 4;
    const std::uint32_t version = U32();
    if (version != kFormatVersion) {
      throw DataError("model payload: unsupported format version " + std::to_string(version));
    }
    const auto got = static_cast<ModelKind>(U8());
    if (got != kind) {
      throw DataError(std::string("model payload: expected kind ") + ModelKindName(kind) +
                      ", found " + ModelKindName(got));
    }
  }

  void ExpectEnd() const {
    if (pos_ != data_.size()) throw DataError("model payload: trailing bytes");
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void Need(std::uint64_t n) const {
    if (n > data_.size() - pos_) throw DataError("model payload: truncated");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Reads the kind byte of a serialized artifact without consuming it.
ModelKind PeekModelKind(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace offdet
