#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "pyrlite/sql/remote.hpp"
#include "pyrlite/value.hpp"

namespace pyrlite::sql {

using Json = nlohmann::json;

/// Integers beyond 53 bits, and decimals a double cannot carry exactly,
/// travel as strings so no client silently rounds them.
Json to_json(const Value& v);
/// Converts into `d` when it names a kind; Null accepts whatever arrives.
Value from_json(const Json& j, const Domain& d);

Json row_json(const std::vector<std::string>& names, const std::vector<Value>& row);

Json register_json(const AggRegister& r);
/// `d` is the domain of the aggregated column.
AggRegister register_from_json(AggKind kind, const Json& j, const Domain& d);

}  // namespace pyrlite::sql
