#pragma once

#include <string>

#include "pyrlite/database.hpp"
#include "pyrlite/rest/transport.hpp"
#include "pyrlite/sql/remote.hpp"

namespace pyrlite::rest {

/// The contributor url carrying a remote select:
/// `?select=<cols>&where=<conjunct>&agg=<list>[&keys=1]`.
std::string remote_target(const sql::RemoteQuery& q);

/// Fetches RESTView rows and registers over a transport.
class HttpRemoteSource : public sql::RemoteSource {
 public:
  explicit HttpRemoteSource(Transport& t) : transport_(t) {}
  sql::RemoteResult fetch(const sql::RemoteQuery& q) override;

 private:
  Transport& transport_;
};

/// Performs a transaction's remote writes. A 412 from the contributor
/// becomes a ConflictError; any other failure a RemoteError.
RemoteExecutor remote_writer(Transport& t);

/// Maps an HTTP error response to the matching engine error and throws it.
[[noreturn]] void throw_for(const Response& r, const std::string& what);

/// The `error` member of a JSON error body, else the body itself.
std::string error_text(const Response& r);

}  // namespace pyrlite::rest
