#include "pyrlite/sql/json.hpp"

#include <charconv>
#include <cstdlib>

#include "pyrlite/errors.hpp"

namespace pyrlite::sql {

namespace {

const Integer kSafe = (Integer(1) << 53);

Value number_value(const Json& j) {
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return Value::integer(Integer(j.get<std::uint64_t>()));
  return parse_number(j.dump());
}

}  // namespace

Json to_json(const Value& v) {
  switch (v.kind()) {
    case DomainKind::Null: return nullptr;
    case DomainKind::Integer: {
      const Integer& i = v.as_integer();
      if (i > -kSafe && i < kSafe) return static_cast<std::int64_t>(i);
      return v.to_string();
    }
    case DomainKind::Real: {
      const std::string text = v.to_string();
      const double d = std::strtod(text.c_str(), nullptr);
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
      if (ec == std::errc() && compare(parse_number(std::string(buf, end)), v) == std::strong_ordering::equal) return d;
      return text;
    }
    case DomainKind::Char: return v.as_text();
    case DomainKind::Boolean: return v.as_bool();
    case DomainKind::Date: return v.to_string();
  }
  return nullptr;
}

Value from_json(const Json& j, const Domain& d) {
  Value v;
  if (j.is_null()) return v;
  if (j.is_boolean()) {
    v = Value::boolean(j.get<bool>());
  } else if (j.is_number()) {
    v = number_value(j);
  } else if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    switch (d.kind) {
      case DomainKind::Integer:
      case DomainKind::Real: v = parse_number(s); break;
      case DomainKind::Date: v = Value::date(parse_date(s)); break;
      case DomainKind::Boolean: v = Value::boolean(s == "true" || s == "TRUE"); break;
      default: v = Value::text(s);
    }
  } else {
    throw SqlError("unsupported JSON value " + j.dump());
  }
  return d.kind == DomainKind::Null ? v : coerce(v, d);
}

Json row_json(const std::vector<std::string>& names, const std::vector<Value>& row) {
  Json o = Json::object();
  for (std::size_t i = 0; i < names.size() && i < row.size(); ++i) o[names[i]] = to_json(row[i]);
  return o;
}

Json register_json(const AggRegister& r) {
  Json o = Json::object();
  o["sum"] = to_json(r.sum);
  o["count"] = to_json(Value::integer(r.count));
  o["extremum"] = to_json(r.extremum);
  return o;
}

AggRegister register_from_json(AggKind kind, const Json& j, const Domain& d) {
  if (!j.is_object()) throw RemoteError("malformed register " + j.dump());
  AggRegister r = empty_register(kind);
  const Domain sum_domain = d.kind == DomainKind::Integer ? Domain::integer()
                            : d.kind == DomainKind::Null  ? Domain{}
                                                          : Domain::real();
  if (j.contains("sum")) r.sum = from_json(j["sum"], sum_domain);
  if (j.contains("count")) {
    Value c = from_json(j["count"], Domain::integer());
    r.count = c.is_null() ? Integer(0) : c.as_integer();
  }
  if (j.contains("extremum")) r.extremum = from_json(j["extremum"], d);
  if (kind == AggKind::Count || kind == AggKind::Min || kind == AggKind::Max) r.sum = Value{};
  return r;
}

}  // namespace pyrlite::sql
