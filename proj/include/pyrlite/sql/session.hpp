#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pyrlite/database.hpp"
#include "pyrlite/sql/parser.hpp"
#include "pyrlite/sql/plan.hpp"

namespace pyrlite::sql {

struct StatementResult {
  bool has_rows = false;
  ResultSet rows;
  std::int64_t affected = -1;  // INSERT / UPDATE / DELETE
  std::string message;         // DDL, transaction control and warnings
};

/// One user's connection to a database: a declared role plus either
/// autocommit or an explicit transaction.
class Session {
 public:
  Session(std::shared_ptr<Database> db, Uid user, Uid role);

  /// Where RESTView rows come from.
  void set_remote(RemoteSource* source) noexcept { remote_ = source; }
  /// Performs RESTView writes during commit.
  void set_remote_writer(RemoteExecutor writer) { writer_ = std::move(writer); }

  StatementResult execute(std::string_view sql);
  StatementResult execute(const Statement& s);
  std::vector<StatementResult> execute_script(std::string_view sql);
  ResultSet query(std::string_view select);
  /// The reviewed plan of a SELECT.
  std::string explain(std::string_view select);

  bool in_transaction() const noexcept { return tx_.has_value(); }
  Uid user() const noexcept { return user_; }
  Uid role() const noexcept { return role_; }
  Database& database() noexcept { return *db_; }
  const std::shared_ptr<Database>& database_ptr() const noexcept { return db_; }
  /// Result of the most recent commit that wrote to the log.
  const std::optional<CommitResult>& last_commit() const noexcept { return last_commit_; }

 private:
  StatementResult run(const Statement& s, Transaction& tx);
  CommitResult commit(Transaction& tx);

  std::shared_ptr<Database> db_;
  Uid user_;
  Uid role_;
  std::optional<Transaction> tx_;
  std::optional<CommitResult> last_commit_;
  RemoteSource* remote_ = nullptr;
  RemoteExecutor writer_;
};

/// Lets the engine evaluate CHECK constraints through the SQL layer.
void install_check_evaluator(Database& db);

/// The transaction master a resource url belongs to: scheme://host:port/db.
std::string contributor_of(const std::string& url);

}  // namespace pyrlite::sql
