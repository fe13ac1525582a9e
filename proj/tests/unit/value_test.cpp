#include "pyrlite/value.hpp"
#include "pyrlite/errors.hpp"

#include <gtest/gtest.h>

using namespace pyrlite;

namespace {
Value num(const char* s) { return parse_number(s); }
}  // namespace

TEST(Value, ParseNumber) {
  EXPECT_EQ(num("42"), Value::integer(42));
  EXPECT_EQ(num("-17000.00"), Value::real(-1700000, -2));
  EXPECT_EQ(num("0.5"), Value::real(5, -1));
  EXPECT_THROW(num("1.2.3"), SqlError);
  EXPECT_THROW(num(""), SqlError);
}

TEST(Value, DisplayForms) {
  EXPECT_EQ(Value::real(2632, -2).to_string(), "26.32");
  EXPECT_EQ(Value::real(526, -2).to_string(), "5.26");
  EXPECT_EQ(Value::real(5, -3).to_string(), "0.005");
  EXPECT_EQ(Value::real(-5, -3).to_string(), "-0.005");
  EXPECT_EQ(Value::real(12, 2).to_string(), "1200");
  EXPECT_EQ(Value().to_string(), "NULL");
  EXPECT_EQ(Value::text("it's").to_sql(), "'it''s'");
  EXPECT_EQ(Value::date(parse_date("2022-12-04")).to_string(), "2022-12-04");
}

TEST(Value, SqlLiteralReparses) {
  for (const Value& v : {Value::real(12, 2), Value::real(-305, -1), Value::integer(-9), Value::real(0, 0)}) {
    auto back = parse_number(v.to_sql());
    EXPECT_EQ(compare(back, v), std::strong_ordering::equal) << v.to_sql();
    EXPECT_EQ(back.kind(), v.kind());
  }
}

TEST(Value, ComparisonIsThreeValued) {
  EXPECT_FALSE(compare(Value(), Value()).has_value());
  EXPECT_EQ(compare(Value::integer(2), num("2.00")), std::strong_ordering::equal);
  EXPECT_EQ(compare(num("1.5"), Value::integer(2)), std::strong_ordering::less);
  EXPECT_THROW(compare(Value::text("a"), Value::integer(1)), SqlError);
  EXPECT_EQ(index_order(Value(), Value::integer(-100)), std::strong_ordering::less);
}

TEST(Value, Arithmetic) {
  EXPECT_EQ(add(num("1.25"), Value::integer(2)), Value::real(325, -2));
  EXPECT_EQ(multiply(num("1.5"), num("1.5")), Value::real(225, -2));
  EXPECT_EQ(divide(Value::integer(7), Value::integer(2)), Value::integer(3));
  EXPECT_THROW(divide(Value::integer(1), Value::integer(0)), SqlError);
  EXPECT_THROW(divide(num("1.0"), num("0.00")), SqlError);
  EXPECT_TRUE(add(Value(), Value::integer(1)).is_null());
  EXPECT_EQ(concat(Value::text("a"), Value::text("b")), Value::text("ab"));
}

// 20000/76000 = 0.263157894736842105..., rounded at 18 places.
TEST(Value, DecimalDivision) {
  auto q = divide(num("20000.00"), num("76000.00"));
  ASSERT_EQ(q.kind(), DomainKind::Real);
  EXPECT_EQ(q.as_real().exponent, -18);
  EXPECT_EQ(q.as_real().mantissa, Integer("263157894736842105"));
  auto third = divide(num("1.0"), num("3.0"));
  EXPECT_EQ(third.to_string(), "0.33333333333333333");
  auto two_thirds = divide(num("-2.0"), num("3.0"));
  EXPECT_EQ(two_thirds.to_string(), "-0.66666666666666667");
}

TEST(Value, CastRoundsHalfAwayFromZero) {
  auto pct = multiply(divide(num("20000.00"), num("76000.00")), Value::integer(100));
  auto d = cast(pct, Domain::real(6, 2));
  EXPECT_EQ(d.to_string(), "26.32");
  EXPECT_EQ(cast(num("0.125"), Domain::real(6, 2)).to_string(), "0.13");
  EXPECT_EQ(cast(num("-0.125"), Domain::real(6, 2)).to_string(), "-0.13");
  EXPECT_EQ(cast(num("0.124"), Domain::real(6, 2)).to_string(), "0.12");
  EXPECT_EQ(cast(d, Domain::text(6)), Value::text("26.32"));
  EXPECT_EQ(cast(Value::text("123456789"), Domain::text(6)), Value::text("123456"));
}

TEST(Value, CoerceChecksDeclaredDomain) {
  EXPECT_EQ(coerce(Value::integer(17000), Domain::real(8, 2)), Value::real(1700000, -2));
  EXPECT_THROW(coerce(num("1234567.00"), Domain::real(8, 2)), SqlError);
  EXPECT_THROW(coerce(Value::text("thirteen chars"), Domain::text(12)), SqlError);
  EXPECT_THROW(coerce(Value::text("1"), Domain::integer()), SqlError);
  EXPECT_EQ(coerce(num("3.00"), Domain::integer()), Value::integer(3));
  EXPECT_THROW(coerce(num("3.50"), Domain::integer()), SqlError);
  EXPECT_EQ(coerce(Value::text("2020-02-29"), Domain::date()).kind(), DomainKind::Date);
  EXPECT_THROW(parse_date("2021-02-29"), SqlError);
}

TEST(ValueParse, ExponentLiterals) {
  EXPECT_EQ(num("1.5e3").to_sql(), "1500.0");
  EXPECT_EQ(num("25E-3").to_string(), "0.025");
  EXPECT_EQ(num("2e+1").kind(), DomainKind::Real);
  EXPECT_EQ(compare(num("1.5e3"), num("1500")), std::strong_ordering::equal);
  EXPECT_THROW(num("1e"), SqlError);
  EXPECT_THROW(num("1e3x"), SqlError);
}
