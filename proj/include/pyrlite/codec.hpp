#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pyrlite/uid.hpp"
#include "pyrlite/value.hpp"

namespace pyrlite {

/// Appends the log's primitive encodings to a byte buffer.
///
///   varint   unsigned LEB128
///   zigzag   signed values mapped onto varint
///   string   varint length + UTF-8 bytes
///   integer  sign byte (0/1) + varint length + big-endian magnitude
///   real     integer mantissa + zigzag exponent
///   uid      zigzag
class ByteWriter {
 public:
  void byte(std::uint8_t b) { out_.push_back(b); }
  void varint(std::uint64_t v);
  void zigzag(std::int64_t v) { varint((static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63)); }
  void string(std::string_view s);
  void integer(const Integer& i);
  void uid(Uid u) { zigzag(u.value()); }
  void value(const Value& v);
  void domain(const Domain& d);
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  const std::vector<std::uint8_t>& data() const noexcept { return out_; }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  std::size_t size() const noexcept { return out_.size(); }

 private:
  std::vector<std::uint8_t> out_;
};

/// Bounds-checked reader; every failure is a LogCorruption naming the offset.
class ByteReader {
 public:
  /// `base` is the absolute file offset of data[0], used in error messages.
  ByteReader(std::span<const std::uint8_t> data, std::uint64_t base = 0) : data_(data), base_(base) {}

  std::uint8_t byte();
  std::uint64_t varint();
  std::int64_t zigzag() {
    std::uint64_t v = varint();
    return static_cast<std::int64_t>((v >> 1) ^ (~(v & 1) + 1));
  }
  std::string string();
  Integer integer();
  Uid uid() { return Uid{zigzag()}; }
  Value value();
  Domain domain();

  std::size_t position() const noexcept { return pos_; }
  std::uint64_t offset() const noexcept { return base_ + pos_; }
  bool at_end() const noexcept { return pos_ >= data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::span<const std::uint8_t> data_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

/// 64-bit FNV-1a, used for state and prefix hashes.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes) {
    for (auto b : bytes) {
      h_ ^= b;
      h_ *= 1099511628211ULL;
    }
  }
  std::uint64_t digest() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

}  // namespace pyrlite
