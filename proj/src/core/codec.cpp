#include "pyrlite/codec.hpp"

#include "pyrlite/errors.hpp"

namespace pyrlite {

void ByteWriter::varint(std::uint64_t v) {
  while (v >= 0x80) {
    out_.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::string(std::string_view s) {
  varint(s.size());
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::integer(const Integer& i) {
  std::vector<std::uint8_t> mag;
  Integer m = i < 0 ? Integer(-i) : i;
  if (m != 0) boost::multiprecision::export_bits(m, std::back_inserter(mag), 8, true);
  if (mag.size() > kMaxIntegerBytes)
    throw EncodingError("integer magnitude of " + std::to_string(mag.size()) + " bytes exceeds " +
                        std::to_string(kMaxIntegerBytes));
  byte(i < 0 ? 1 : 0);
  varint(mag.size());
  out_.insert(out_.end(), mag.begin(), mag.end());
}

void ByteWriter::value(const Value& v) {
  byte(static_cast<std::uint8_t>(v.kind()));
  switch (v.kind()) {
    case DomainKind::Null: break;
    case DomainKind::Integer: integer(v.as_integer()); break;
    case DomainKind::Real:
      integer(v.as_real().mantissa);
      zigzag(v.as_real().exponent);
      break;
    case DomainKind::Char: string(v.as_text()); break;
    case DomainKind::Boolean: byte(v.as_bool() ? 1 : 0); break;
    case DomainKind::Date: zigzag(v.as_date().days); break;
  }
}

void ByteWriter::domain(const Domain& d) {
  byte(static_cast<std::uint8_t>(d.kind));
  varint(static_cast<std::uint64_t>(d.precision));
  zigzag(d.scale);
  uid(d.named);
}

void ByteReader::fail(const std::string& what) const { throw LogCorruption(offset(), what); }

std::uint8_t ByteReader::byte() {
  if (pos_ >= data_.size()) fail("unexpected end of data");
  return data_[pos_++];
}

std::uint64_t ByteReader::varint() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    std::uint8_t b = byte();
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return v;
  }
  fail("varint too long");
}

std::string ByteReader::string() {
  std::uint64_t n = varint();
  if (n > remaining()) fail("string length " + std::to_string(n) + " overruns record");
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), static_cast<std::size_t>(n));
  pos_ += static_cast<std::size_t>(n);
  return s;
}

Integer ByteReader::integer() {
  std::uint8_t sign = byte();
  if (sign > 1) fail("bad integer sign byte");
  std::uint64_t n = varint();
  if (n > kMaxIntegerBytes || n > remaining()) fail("bad integer length");
  Integer m = 0;
  if (n > 0) {
    if (data_[pos_] == 0) fail("non-canonical integer");
    boost::multiprecision::import_bits(m, data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                       data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n), 8, true);
  } else if (sign) {
    fail("negative zero");
  }
  pos_ += static_cast<std::size_t>(n);
  return sign ? Integer(-m) : m;
}

Value ByteReader::value() {
  std::uint8_t tag = byte();
  switch (static_cast<DomainKind>(tag)) {
    case DomainKind::Null: return {};
    case DomainKind::Integer: return Value::integer(integer());
    case DomainKind::Real: {
      Integer m = integer();
      auto e = zigzag();
      return Value::real(std::move(m), static_cast<std::int32_t>(e));
    }
    case DomainKind::Char: return Value::text(string());
    case DomainKind::Boolean: {
      std::uint8_t b = byte();
      if (b > 1) fail("bad boolean");
      return Value::boolean(b == 1);
    }
    case DomainKind::Date: return Value::date(Date{static_cast<std::int32_t>(zigzag())});
  }
  fail("unknown value tag " + std::to_string(tag));
}

Domain ByteReader::domain() {
  Domain d;
  std::uint8_t k = byte();
  if (k > static_cast<std::uint8_t>(DomainKind::Date)) fail("unknown domain kind");
  d.kind = static_cast<DomainKind>(k);
  d.precision = static_cast<std::int32_t>(varint());
  d.scale = static_cast<std::int32_t>(zigzag());
  d.named = uid();
  return d;
}

}  // namespace pyrlite
