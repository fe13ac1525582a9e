#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pyrlite/sql/ast.hpp"
#include "pyrlite/value.hpp"

namespace pyrlite::sql {

/// Partial state of one aggregate, computed at a contributor and merged at
/// the querying server. AVG travels as its (sum, count) pair.
struct AggRegister {
  AggKind kind = AggKind::Count;
  Value sum;       // SUM, AVG
  Integer count;   // COUNT, AVG
  Value extremum;  // MIN, MAX

  friend bool operator==(const AggRegister&, const AggRegister&) = default;
};

AggRegister empty_register(AggKind kind);
/// Folds one input value in. `star` counts rows regardless of NULLs.
void accumulate(AggRegister& r, const Value& v, bool star = false);
AggRegister merge(const AggRegister& a, const AggRegister& b);
Value finalize(const AggRegister& r);

struct RemoteAggregate {
  AggKind kind = AggKind::Count;
  std::string column;  // empty for COUNT(*)
  Domain domain;       // of the column
  std::string label() const;  // e.g. SUM(E), COUNT(*)
};

struct RemoteColumn {
  std::string name;
  Domain domain;
};

/// One select against one contributor.
struct RemoteQuery {
  std::string url;
  std::vector<RemoteColumn> columns;
  std::string where;  // SQL conjunct over remote column names, may be empty
  std::vector<RemoteAggregate> aggregates;  // non-empty: registers instead of rows
  bool want_keys = false;
  std::string user;
  std::string password;
};

struct RemoteResult {
  std::vector<std::vector<Value>> rows;  // aligned with the query's columns
  std::vector<std::string> keys;         // per row when requested: key path segment
  std::vector<std::string> etags;        // per row when requested
  std::vector<AggRegister> registers;    // aligned with the query's aggregates
};

/// Access to remote contributors. Implementations throw RemoteError when a
/// contributor cannot be reached or refuses the request.
class RemoteSource {
 public:
  virtual ~RemoteSource() = default;
  virtual RemoteResult fetch(const RemoteQuery& q) = 0;
};

}  // namespace pyrlite::sql
