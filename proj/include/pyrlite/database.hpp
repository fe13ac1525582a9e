#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pyrlite/log.hpp"
#include "pyrlite/snapshot.hpp"
#include "pyrlite/transaction.hpp"

namespace pyrlite {

/// Evaluates a CHECK constraint on a row: true, false, or unknown (nullopt).
/// Only false rejects the row.
using CheckEvaluator =
    std::function<std::optional<bool>(const Snapshot&, const SchemaObject& constraint, const Row& row)>;

/// Performs a transaction's remote writes during commit, while the local
/// commit lock is held. Throws to abort the local commit.
using RemoteExecutor = std::function<void(const std::vector<RemoteWrite>&)>;

struct DatabaseOptions {
  bool sync = true;  // fdatasync every append
  std::size_t ring_capacity = std::size_t{1} << 16;
  std::function<std::int64_t()> clock;  // microseconds; system clock when empty
};

struct CommitResult {
  std::shared_ptr<const Snapshot> snapshot;
  std::uint64_t base = 0;  // header position, 0 when nothing was written
  bool wrote = false;
  std::vector<Physical> physicals;   // as appended
  std::unordered_map<Uid, Uid> relocation;  // temporary uid -> file position
};

std::string hash_password(const std::string& user, const std::string& password);

/// One database: the log file plus the published snapshot.
class Database {
 public:
  /// Opens `<dir>/<name>.pyl`, creating it when absent, and replays it.
  static std::shared_ptr<Database> open(const std::filesystem::path& file, DatabaseOptions options = {});

  const std::string& name() const noexcept { return name_; }
  std::shared_ptr<const Snapshot> snapshot() const;
  LogFile& log() noexcept { return log_; }

  /// Requires an existing user permitted to use the role.
  Transaction begin(Uid user, Uid role) const;

  /// Validate, enforce constraints, relocate, run remote writes, append,
  /// install, publish. Throws ConflictError, ConstraintError,
  /// DurableAppendError or RemoteError; on any throw nothing is written.
  CommitResult commit(Transaction& tx, const RemoteExecutor* remote = nullptr);

  /// Creates the first user and a role named after the database when the
  /// database has no users yet. Returns the user's uid either way.
  Uid bootstrap(const std::string& user, const std::string& password);
  Uid authenticate(const std::string& user, const std::string& password) const;
  std::optional<Uid> user_named(const std::string& user) const;
  /// The role named after the database when the user may use it, else the
  /// first usable role.
  std::optional<Uid> default_role(Uid user) const;
  std::optional<Uid> role_named(const std::string& role) const;

  void set_check_evaluator(CheckEvaluator f);
  void set_remote_executor(RemoteExecutor f);

 private:
  Database(std::filesystem::path file, DatabaseOptions options);

  std::int64_t now();
  void apply_with_actions(Snapshot& work, const Physical& p, const InstallContext& ctx, std::vector<Physical>& out,
                          Transaction& tx, int depth);
  void check_constraints(const Snapshot& work, const std::vector<Physical>& staged) const;

  std::string name_;
  DatabaseOptions options_;
  LogFile log_;

  mutable std::mutex publish_mu_;
  std::shared_ptr<const Snapshot> current_;

  std::mutex commit_mu_;
  std::deque<CommittedPhysical> ring_;
  std::int64_t popped_max_ = -1;
  std::int64_t last_timestamp_ = 0;
  CheckEvaluator check_;
  RemoteExecutor remote_;
};

/// Language-neutral description of a table for typed clients.
struct ClassModel {
  struct Column {
    std::string name;
    std::string domain;  // SQL spelling, e.g. NUMERIC(6,2)
    DomainKind kind = DomainKind::Null;
    bool key = false;
    bool autokey = false;
  };
  struct Navigation {
    std::string name;    // e.g. orders, customer
    std::string target;  // target table name
    bool many = false;
    std::vector<std::string> target_fields;  // matched in the target table
    std::vector<std::string> local_fields;   // values taken from this record
  };
  std::string name;
  std::int64_t defining_pos = 0;
  std::int64_t schema_key = 0;
  std::vector<Column> columns;
  std::vector<std::string> key;
  std::vector<std::vector<std::string>> unique;
  std::vector<Navigation> navigation;
};

/// Requires SELECT on the table under the role. Throws NotFound.
ClassModel generate_class_model(const Snapshot& s, Uid user, Uid role, const std::string& table);

}  // namespace pyrlite
