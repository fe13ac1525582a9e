#include <charconv>
#include "pyrlite/value.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "pyrlite/errors.hpp"

namespace pyrlite {

namespace {

Integer pow10(std::int32_t n) {
  Integer r = 1;
  for (std::int32_t i = 0; i < n; ++i) r *= 10;
  return r;
}

Real to_real(const Value& v) {
  if (v.kind() == DomainKind::Integer) return Real{v.as_integer(), 0};
  return v.as_real();
}

bool numeric(const Value& v) { return v.kind() == DomainKind::Integer || v.kind() == DomainKind::Real; }

// Brings both operands to the smaller exponent.
std::pair<Integer, Integer> align(const Real& a, const Real& b, std::int32_t& exponent) {
  exponent = std::min(a.exponent, b.exponent);
  return {a.mantissa * pow10(a.exponent - exponent), b.mantissa * pow10(b.exponent - exponent)};
}

std::strong_ordering order_of(int c) {
  return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
}

std::size_t digit_count(Integer m) {
  if (m < 0) m = -m;
  std::size_t n = 1;
  while (m >= 10) {
    m /= 10;
    ++n;
  }
  return n;
}

const char* kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::Null: return "NULL";
    case DomainKind::Integer: return "INTEGER";
    case DomainKind::Real: return "NUMERIC";
    case DomainKind::Char: return "CHAR";
    case DomainKind::Boolean: return "BOOLEAN";
    case DomainKind::Date: return "DATE";
  }
  return "?";
}

[[noreturn]] void mismatch(const Value& v, const Domain& d) {
  throw SqlError(std::string("type mismatch: cannot convert ") + kind_name(v.kind()) + " " + v.to_sql() +
                 " to " + d.sql());
}

}  // namespace

std::string Domain::sql() const {
  switch (kind) {
    case DomainKind::Null: return "NULL";
    case DomainKind::Integer: return "INTEGER";
    case DomainKind::Real:
      if (precision > 0) return "NUMERIC(" + std::to_string(precision) + "," + std::to_string(scale) + ")";
      return "NUMERIC";
    case DomainKind::Char:
      if (precision > 0) return "CHAR(" + std::to_string(precision) + ")";
      return "CHAR";
    case DomainKind::Boolean: return "BOOLEAN";
    case DomainKind::Date: return "DATE";
  }
  return "NULL";
}

Uid builtin_domain_uid(DomainKind kind) {
  switch (kind) {
    case DomainKind::Integer: return builtin::kInteger;
    case DomainKind::Real: return builtin::kReal;
    case DomainKind::Char: return builtin::kChar;
    case DomainKind::Boolean: return builtin::kBoolean;
    case DomainKind::Date: return builtin::kDate;
    case DomainKind::Null: break;
  }
  return Uid{};
}

std::optional<std::int64_t> Value::to_int64() const {
  if (kind() != DomainKind::Integer) return std::nullopt;
  const Integer& i = as_integer();
  if (i > std::numeric_limits<std::int64_t>::max() || i < std::numeric_limits<std::int64_t>::min())
    return std::nullopt;
  return static_cast<std::int64_t>(i);
}

std::string Value::to_string() const {
  switch (kind()) {
    case DomainKind::Null: return "NULL";
    case DomainKind::Integer: return as_integer().str();
    case DomainKind::Real: {
      const Real& r = as_real();
      Integer m = r.mantissa;
      bool neg = m < 0;
      if (neg) m = -m;
      std::string digits = m.str();
      if (r.exponent >= 0) {
        if (m != 0) digits.append(static_cast<std::size_t>(r.exponent), '0');
      } else {
        auto places = static_cast<std::size_t>(-r.exponent);
        if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
        digits.insert(digits.size() - places, ".");
      }
      return neg ? "-" + digits : digits;
    }
    case DomainKind::Char: return as_text();
    case DomainKind::Boolean: return as_bool() ? "TRUE" : "FALSE";
    case DomainKind::Date: return format_date(as_date());
  }
  return {};
}

std::string Value::to_sql() const {
  switch (kind()) {
    case DomainKind::Char: {
      std::string out = "'";
      for (char c : as_text()) {
        if (c == '\'') out += '\'';
        out += c;
      }
      return out + "'";
    }
    case DomainKind::Date: return "DATE '" + format_date(as_date()) + "'";
    case DomainKind::Real: {
      // A literal with an exponent >= 0 would re-parse as an Integer.
      const Real& r = as_real();
      if (r.exponent >= 0) {
        return Value::real(r.mantissa * pow10(r.exponent) * 10, -1).to_string();
      }
      return to_string();
    }
    default: return to_string();
  }
}

std::optional<std::strong_ordering> compare(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  if (numeric(a) && numeric(b)) {
    if (a.kind() == DomainKind::Integer && b.kind() == DomainKind::Integer)
      return order_of(a.as_integer().compare(b.as_integer()));
    std::int32_t e;
    auto [x, y] = align(to_real(a), to_real(b), e);
    return order_of(x.compare(y));
  }
  if (a.kind() != b.kind())
    throw SqlError(std::string("cannot compare ") + kind_name(a.kind()) + " with " + kind_name(b.kind()));
  switch (a.kind()) {
    case DomainKind::Char: return order_of(a.as_text().compare(b.as_text()));
    case DomainKind::Boolean: return static_cast<int>(a.as_bool()) <=> static_cast<int>(b.as_bool());
    case DomainKind::Date: return a.as_date() <=> b.as_date();
    default: break;
  }
  return std::strong_ordering::equal;
}

std::strong_ordering index_order(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return static_cast<int>(!a.is_null()) <=> static_cast<int>(!b.is_null());
  return *compare(a, b);
}

Value add(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return {};
  if (!numeric(a) || !numeric(b)) throw SqlError("arithmetic on non-numeric values");
  if (a.kind() == DomainKind::Integer && b.kind() == DomainKind::Integer)
    return Value::integer(a.as_integer() + b.as_integer());
  std::int32_t e;
  auto [x, y] = align(to_real(a), to_real(b), e);
  return Value::real(x + y, e);
}

Value subtract(const Value& a, const Value& b) { return add(a, negate(b)); }

Value negate(const Value& a) {
  switch (a.kind()) {
    case DomainKind::Null: return {};
    case DomainKind::Integer: return Value::integer(Integer(-a.as_integer()));
    case DomainKind::Real: return Value::real(-a.as_real().mantissa, a.as_real().exponent);
    default: throw SqlError("arithmetic on non-numeric values");
  }
}

Value multiply(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return {};
  if (!numeric(a) || !numeric(b)) throw SqlError("arithmetic on non-numeric values");
  if (a.kind() == DomainKind::Integer && b.kind() == DomainKind::Integer)
    return Value::integer(a.as_integer() * b.as_integer());
  Real x = to_real(a), y = to_real(b);
  return Value::real(x.mantissa * y.mantissa, x.exponent + y.exponent);
}

Value divide(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return {};
  if (!numeric(a) || !numeric(b)) throw SqlError("arithmetic on non-numeric values");
  if (a.kind() == DomainKind::Integer && b.kind() == DomainKind::Integer) {
    if (b.as_integer() == 0) throw SqlError("division by zero");
    return Value::integer(Integer(a.as_integer() / b.as_integer()));
  }
  Real x = to_real(a), y = to_real(b);
  if (y.mantissa == 0) throw SqlError("division by zero");
  const std::int32_t target = std::min({x.exponent, y.exponent, 0}) - kDivisionDigits;
  // x/y = (mx/my) * 10^(ex-ey); scale the numerator so the quotient lands at
  // `target` with one guard digit for rounding.
  const std::int32_t shift = x.exponent - y.exponent - target + 1;
  Integer num = x.mantissa;
  Integer den = y.mantissa;
  if (shift >= 0) {
    num *= pow10(shift);
  } else {
    den *= pow10(-shift);
  }
  Integer q = num / den;
  Real r{q, target - 1};
  return Value::real(round_to_exponent(r, target).mantissa, target);
}

Value concat(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return {};
  return Value::text(a.to_string() + b.to_string());
}

Real round_to_exponent(const Real& r, std::int32_t exponent) {
  if (r.exponent >= exponent) return Real{r.mantissa * pow10(r.exponent - exponent), exponent};
  Integer div = pow10(exponent - r.exponent);
  Integer m = r.mantissa;
  bool neg = m < 0;
  if (neg) m = -m;
  Integer q = m / div;
  Integer rem = m % div;
  if (rem * 2 >= div) q += 1;
  return Real{neg ? Integer(-q) : q, exponent};
}

Real normalize(const Real& r) {
  Real out = r;
  if (out.mantissa == 0) return Real{0, 0};
  while (out.mantissa % 10 == 0) {
    out.mantissa /= 10;
    ++out.exponent;
  }
  return out;
}

namespace {

Value to_domain(const Value& v, const Domain& d, bool is_cast) {
  if (v.is_null() || d.kind == DomainKind::Null) return v;
  switch (d.kind) {
    case DomainKind::Integer: {
      if (v.kind() == DomainKind::Integer) return v;
      if (v.kind() == DomainKind::Real) {
        const Real& r = v.as_real();
        if (is_cast) return Value::integer(round_to_exponent(r, 0).mantissa);
        Real n = normalize(r);
        if (n.exponent < 0) mismatch(v, d);
        return Value::integer(n.mantissa * pow10(n.exponent));
      }
      if (is_cast && v.kind() == DomainKind::Char) {
        Value p = parse_number(v.as_text());
        return to_domain(p, d, true);
      }
      mismatch(v, d);
    }
    case DomainKind::Real: {
      Real r;
      if (v.kind() == DomainKind::Integer) {
        r = Real{v.as_integer(), 0};
      } else if (v.kind() == DomainKind::Real) {
        r = v.as_real();
      } else if (is_cast && v.kind() == DomainKind::Char) {
        Value p = parse_number(v.as_text());
        return to_domain(p, d, true);
      } else {
        mismatch(v, d);
      }
      if (d.precision > 0) {
        r = round_to_exponent(r, -d.scale);
        if (r.mantissa != 0 && digit_count(r.mantissa) > static_cast<std::size_t>(d.precision))
          throw SqlError("value " + Value::real(r.mantissa, r.exponent).to_string() + " exceeds " + d.sql());
      }
      return Value::real(r.mantissa, r.exponent);
    }
    case DomainKind::Char: {
      std::string s;
      if (v.kind() == DomainKind::Char) {
        s = v.as_text();
      } else if (is_cast) {
        s = v.to_string();
      } else {
        mismatch(v, d);
      }
      if (d.precision > 0 && s.size() > static_cast<std::size_t>(d.precision)) {
        if (!is_cast) throw SqlError("string too long for " + d.sql());
        s.resize(static_cast<std::size_t>(d.precision));
      }
      return Value::text(std::move(s));
    }
    case DomainKind::Boolean:
      if (v.kind() == DomainKind::Boolean) return v;
      if (is_cast && v.kind() == DomainKind::Char) {
        std::string u = v.as_text();
        std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
        if (u == "TRUE") return Value::boolean(true);
        if (u == "FALSE") return Value::boolean(false);
      }
      mismatch(v, d);
    case DomainKind::Date:
      if (v.kind() == DomainKind::Date) return v;
      if (v.kind() == DomainKind::Char) return Value::date(parse_date(v.as_text()));
      mismatch(v, d);
    case DomainKind::Null: break;
  }
  return v;
}

}  // namespace

Value coerce(const Value& v, const Domain& d) { return to_domain(v, d, false); }
Value cast(const Value& v, const Domain& d) { return to_domain(v, d, true); }

Value parse_number(std::string_view text) {
  std::string t(text);
  auto b = t.find_first_not_of(" \t");
  auto e = t.find_last_not_of(" \t");
  if (b == std::string::npos) throw SqlError("not a number: '" + t + "'");
  t = t.substr(b, e - b + 1);
  bool neg = false;
  std::size_t i = 0;
  if (t[0] == '-' || t[0] == '+') {
    neg = t[0] == '-';
    i = 1;
  }
  std::string digits;
  std::int32_t exponent = 0;
  bool seen_point = false;
  for (; i < t.size(); ++i) {
    char c = t[i];
    if (c >= '0' && c <= '9') {
      digits += c;
      if (seen_point) --exponent;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else if ((c == 'e' || c == 'E') && !digits.empty() && i + 1 < t.size()) {
      std::int32_t scale = 0;
      auto [end, ec] = std::from_chars(t.data() + i + 1 + (t[i + 1] == '+'), t.data() + t.size(), scale);
      if (ec != std::errc{} || end != t.data() + t.size()) throw SqlError("not a number: '" + std::string(text) + "'");
      exponent += scale;
      seen_point = true;
      break;
    } else {
      throw SqlError("not a number: '" + std::string(text) + "'");
    }
  }
  if (digits.empty()) throw SqlError("not a number: '" + std::string(text) + "'");
  // cpp_int reads a leading zero as an octal prefix.
  auto nz = digits.find_first_not_of('0');
  digits = nz == std::string::npos ? "0" : digits.substr(nz);
  Integer m(digits);
  if (neg) m = -m;
  if (!seen_point) return Value::integer(std::move(m));
  // Keep one fractional digit so the literal prints back as the same value.
  if (exponent >= 0) return Value::real(m * pow10(exponent) * 10, -1);
  return Value::real(std::move(m), exponent);
}

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  std::string s(text);
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw SqlError("invalid date '" + s + "'");
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw SqlError("invalid date '" + s + "'");
  return Date{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
}

std::string format_date(Date d) {
  std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{d.days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace pyrlite
