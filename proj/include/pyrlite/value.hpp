#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "pyrlite/uid.hpp"

namespace pyrlite {

using Integer = boost::multiprecision::cpp_int;

/// Integers are stored as sign + magnitude; the magnitude may not exceed this.
inline constexpr std::size_t kMaxIntegerBytes = 255;

/// Exact decimal: mantissa * 10^exponent.
struct Real {
  Integer mantissa;
  std::int32_t exponent = 0;

  friend bool operator==(const Real&, const Real&) = default;
};

/// Calendar date as days since 1970-01-01.
struct Date {
  std::int32_t days = 0;
  friend auto operator<=>(const Date&, const Date&) = default;
};

enum class DomainKind : std::uint8_t { Null = 0, Integer = 1, Real = 2, Char = 3, Boolean = 4, Date = 5 };

/// Column / expression type.
struct Domain {
  DomainKind kind = DomainKind::Null;
  /// Real: total significant digits; Char: maximum length. 0 means unbounded.
  std::int32_t precision = 0;
  /// Real only: digits after the decimal point; meaningful when precision > 0.
  std::int32_t scale = 0;
  /// User-defined domain this one was declared through, if any.
  Uid named{};

  static Domain integer() { return {DomainKind::Integer}; }
  static Domain real(std::int32_t precision = 0, std::int32_t scale = 0) {
    return {DomainKind::Real, precision, scale};
  }
  static Domain text(std::int32_t length = 0) { return {DomainKind::Char, length}; }
  static Domain boolean() { return {DomainKind::Boolean}; }
  static Domain date() { return {DomainKind::Date}; }

  std::string sql() const;
  friend bool operator==(const Domain&, const Domain&) = default;
};

Uid builtin_domain_uid(DomainKind kind);

class Value {
 public:
  Value() = default;
  static Value integer(Integer i) { return Value(Rep(std::move(i))); }
  static Value integer(std::int64_t i) { return Value(Rep(Integer(i))); }
  static Value real(Integer mantissa, std::int32_t exponent) {
    return Value(Rep(Real{std::move(mantissa), exponent}));
  }
  static Value text(std::string s) { return Value(Rep(std::move(s))); }
  static Value boolean(bool b) { return Value(Rep(b)); }
  static Value date(Date d) { return Value(Rep(d)); }

  DomainKind kind() const noexcept { return static_cast<DomainKind>(rep_.index()); }
  bool is_null() const noexcept { return rep_.index() == 0; }

  const Integer& as_integer() const { return std::get<Integer>(rep_); }
  const Real& as_real() const { return std::get<Real>(rep_); }
  const std::string& as_text() const { return std::get<std::string>(rep_); }
  bool as_bool() const { return std::get<bool>(rep_); }
  Date as_date() const { return std::get<Date>(rep_); }

  /// Integer value as int64 when it fits.
  std::optional<std::int64_t> to_int64() const;

  /// Display form: digits, text without quotes, TRUE/FALSE, YYYY-MM-DD, NULL.
  std::string to_string() const;
  /// SQL literal that parses back to an equal value.
  std::string to_sql() const;

  /// Representation equality: 1.0 and 1.00 differ, NULL equals NULL.
  friend bool operator==(const Value& a, const Value& b) { return a.rep_ == b.rep_; }

 private:
  using Rep = std::variant<std::monostate, Integer, Real, std::string, bool, Date>;
  explicit Value(Rep r) : rep_(std::move(r)) {}
  Rep rep_;
};

/// SQL comparison. nullopt when either side is NULL; throws SqlError when the
/// kinds cannot be compared. Integer and Real compare numerically.
std::optional<std::strong_ordering> compare(const Value& a, const Value& b);

/// Total order used by indexes: NULL sorts first, otherwise as compare().
std::strong_ordering index_order(const Value& a, const Value& b);

Value add(const Value& a, const Value& b);
Value subtract(const Value& a, const Value& b);
Value multiply(const Value& a, const Value& b);
/// Integer / Integer truncates; otherwise an exact decimal rounded to
/// kDivisionDigits places beyond the operands' scale.
Value divide(const Value& a, const Value& b);
Value negate(const Value& a);
Value concat(const Value& a, const Value& b);

inline constexpr std::int32_t kDivisionDigits = 16;

/// Assignment conversion into a column domain (rounds Real to the declared
/// scale, checks precision and length). Throws SqlError on mismatch.
Value coerce(const Value& v, const Domain& d);

/// CAST conversion: like coerce, but also converts between text and other
/// kinds and truncates text to the target length.
Value cast(const Value& v, const Domain& d);

/// Rounds half away from zero to the given exponent (e.g. -2 for cents).
Real round_to_exponent(const Real& r, std::int32_t exponent);

Value parse_number(std::string_view text);
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Smallest exponent representation: strips trailing zeros from the mantissa.
Real normalize(const Real& r);

}  // namespace pyrlite
