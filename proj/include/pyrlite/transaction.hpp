#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pyrlite/errors.hpp"
#include "pyrlite/snapshot.hpp"

namespace pyrlite {

enum class ConflictReason : std::uint8_t { None, ObjectChanged, ColumnReadUpdated, RowReadUpdated };

const char* reason_name(ConflictReason r);

struct ConflictReport {
  bool ok = true;
  Uid object;
  ConflictReason reason = ConflictReason::None;
  std::string detail;

  static ConflictReport conflict(Uid object, ConflictReason reason, std::string detail) {
    return {false, object, reason, std::move(detail)};
  }
  std::string describe() const;
};

class ConflictError : public Error {
 public:
  explicit ConflictError(ConflictReport r) : Error("transaction conflict: " + r.describe()), report_(std::move(r)) {}
  const ConflictReport& report() const noexcept { return report_; }

 private:
  ConflictReport report_;
};

/// A point lookup through an index, remembered so a later insert of the
/// same key (a phantom) is detected.
struct IndexRead {
  Uid index;
  std::vector<Value> key;
};

struct TableReads {
  std::set<Uid> columns;
  std::set<Uid> rows;
  bool whole_table = false;
  std::vector<IndexRead> keys;
};

struct ReadSet {
  std::map<Uid, TableReads> tables;
  std::set<Uid> objects;  // views, RESTViews, roles, domains...

  bool empty() const noexcept { return tables.empty() && objects.empty(); }
};

/// A write to a remote contributor, performed during commit step (c).
struct RemoteWrite {
  std::string contributor;  // scheme://host:port of the transaction master
  std::string method;       // PUT, POST or DELETE
  std::string url;
  std::string body;
  std::string if_match;
  std::string user;
  std::string password;
};

/// Snapshot + staged physicals + read set. Confined to one thread at a time.
class Transaction {
 public:
  Transaction(std::shared_ptr<const Snapshot> base, Uid user, Uid role);

  const Snapshot& state() const noexcept { return state_; }
  const Snapshot& base() const noexcept { return *base_; }
  const std::shared_ptr<const Snapshot>& base_ptr() const noexcept { return base_; }
  Uid user() const noexcept { return user_; }
  Uid role() const noexcept { return role_; }

  const std::vector<Physical>& staged() const noexcept { return staged_; }
  const ReadSet& reads() const noexcept { return reads_; }
  const std::vector<RemoteWrite>& remote_writes() const noexcept { return remote_; }
  bool has_writes() const noexcept { return !staged_.empty() || !remote_.empty(); }

  // Read tracking --------------------------------------------------------
  /// rows == nullopt records a whole-table read.
  void note_read(Uid table, const std::vector<Uid>& columns, const std::optional<std::vector<Uid>>& rows);
  void note_row_read(Uid table, Uid row, const std::vector<Uid>& columns);
  void note_index_read(Uid table, Uid index, std::vector<Value> key);
  void note_object_read(Uid object);

  // Staging --------------------------------------------------------------
  /// Installs the payload into this transaction's private state under a
  /// fresh temporary uid, which is returned. On error the state is unchanged.
  Uid stage(Payload payload);

  /// INSERT with privilege check, domain coercion, defaults and autokey.
  Uid insert(Uid table, Fields fields);
  void update(Uid table, Uid row, Fields changes);
  void remove(Uid table, Uid row);

  /// Records a write destined for a remote contributor. A second distinct
  /// contributor is refused before any network traffic.
  void stage_remote(RemoteWrite w);

 private:
  friend class Database;

  Uid next_temp() { return Uid{next_temp_++}; }
  void require(Uid object, std::uint32_t action, const char* verb) const;

  std::shared_ptr<const Snapshot> base_;
  Snapshot state_;
  Uid user_;
  Uid role_;
  std::vector<Physical> staged_;
  ReadSet reads_;
  std::vector<RemoteWrite> remote_;
  std::int64_t next_temp_ = Uid::kTransactionBase + 1;
};

/// One physical in the commit ring, with the row image it produced.
struct CommittedPhysical {
  Physical physical;
  RowPtr after;            // Record / Update result
  RowPtr before;           // Update / Delete prior image
  std::vector<Uid> touched;  // objects a schema physical changed
};

/// Checks the transaction against physicals committed after its snapshot.
ConflictReport validate(const Transaction& tx, std::span<const CommittedPhysical> committed);

/// Objects a schema-level physical changes, resolved against `s` (the state
/// it is installed on). Empty for row physicals.
std::vector<Uid> touched_objects(const Snapshot& s, const Physical& p);

}  // namespace pyrlite
