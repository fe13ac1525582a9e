#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pyrlite/rest/remote.hpp"
#include "pyrlite/sql/session.hpp"

namespace pyrlite::cli {

/// Pipe-delimited rows between dash rules, each column padded to its widest cell.
std::string render_table(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows);
std::string render(const sql::StatementResult& r);

class Shell {
 public:
  virtual ~Shell() = default;
  /// Output for one input line. Errors are rendered, never thrown.
  virtual std::string eval(const std::string& line) = 0;
};

/// A shell over a database file, bootstrapping it when the file is new.
class LocalShell : public Shell {
 public:
  /// Throws AuthenticationError or AuthorizationError on a bad identity.
  LocalShell(std::shared_ptr<Database> db, const std::string& user, const std::string& password,
             const std::string& role, rest::Transport& net);
  std::string eval(const std::string& line) override;
  sql::Session& session() { return *session_; }

 private:
  std::shared_ptr<Database> db_;
  std::unique_ptr<sql::Session> session_;
  rest::HttpRemoteSource remote_;
};

/// A shell that posts each line to a server's SQL endpoint. Every line is
/// its own transaction there, so BEGIN, COMMIT and ROLLBACK are refused.
class RemoteShell : public Shell {
 public:
  /// `url` is scheme://host:port/db. Throws on failed authentication.
  RemoteShell(rest::Transport& net, const std::string& url, const std::string& user, const std::string& password,
              const std::string& role);
  std::string eval(const std::string& line) override;

 private:
  rest::Transport& net_;
  std::string url_;  // .../db/role
  rest::Headers auth_;
};

/// Reads lines after a `SQL> ` prompt until QUIT, EXIT or end of input.
void repl(Shell& shell, std::istream& in, std::ostream& out);

}  // namespace pyrlite::cli
