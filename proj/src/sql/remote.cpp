#include "pyrlite/sql/remote.hpp"

#include "pyrlite/errors.hpp"

namespace pyrlite::sql {

AggRegister empty_register(AggKind kind) {
  AggRegister r;
  r.kind = kind;
  return r;
}

void accumulate(AggRegister& r, const Value& v, bool star) {
  switch (r.kind) {
    case AggKind::Count:
      if (star || !v.is_null()) ++r.count;
      return;
    case AggKind::Sum:
    case AggKind::Avg:
      if (v.is_null()) return;
      r.sum = r.sum.is_null() ? v : add(r.sum, v);
      ++r.count;
      return;
    case AggKind::Min:
    case AggKind::Max: {
      if (v.is_null()) return;
      if (r.extremum.is_null()) {
        r.extremum = v;
        return;
      }
      auto c = compare(v, r.extremum);
      if ((r.kind == AggKind::Min && *c < 0) || (r.kind == AggKind::Max && *c > 0)) r.extremum = v;
      return;
    }
  }
}

AggRegister merge(const AggRegister& a, const AggRegister& b) {
  if (a.kind != b.kind) throw SqlError("cannot merge registers of different aggregates");
  AggRegister r = a;
  r.count = a.count + b.count;
  if (!b.sum.is_null()) r.sum = a.sum.is_null() ? b.sum : add(a.sum, b.sum);
  if (!b.extremum.is_null()) {
    if (a.extremum.is_null()) {
      r.extremum = b.extremum;
    } else {
      auto c = compare(b.extremum, a.extremum);
      if ((r.kind == AggKind::Min && *c < 0) || (r.kind == AggKind::Max && *c > 0)) r.extremum = b.extremum;
    }
  }
  return r;
}

Value finalize(const AggRegister& r) {
  switch (r.kind) {
    case AggKind::Count: return Value::integer(r.count);
    case AggKind::Sum: return r.sum;
    case AggKind::Avg: {
      if (r.count == 0 || r.sum.is_null()) return {};
      // An integer sum would truncate; divide as an exact decimal instead.
      Value sum = r.sum.kind() == DomainKind::Integer ? Value::real(r.sum.as_integer(), 0) : r.sum;
      Value avg = divide(sum, Value::integer(r.count));
      if (avg.kind() != DomainKind::Real) return avg;
      const Real n = normalize(avg.as_real());
      return Value::real(n.mantissa, n.exponent);
    }
    case AggKind::Min:
    case AggKind::Max: return r.extremum;
  }
  return {};
}

std::string RemoteAggregate::label() const {
  return std::string(agg_name(kind)) + "(" + (column.empty() ? std::string("*") : quote_identifier(column)) + ")";
}

}  // namespace pyrlite::sql
