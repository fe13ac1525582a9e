#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pyrlite/log.hpp"
#include "pyrlite/pbtree.hpp"
#include "pyrlite/physical.hpp"

namespace pyrlite {

enum class ObjectKind : std::uint8_t { Table, Column, Index, View, RestView, Role, User, Domain };

const char* object_kind_name(ObjectKind k);

/// Catalog entry built from the physicals that define and alter it. One flat
/// record serves every kind; fields that do not apply stay empty.
struct SchemaObject {
  Uid uid;
  ObjectKind kind = ObjectKind::Table;
  std::string name;
  Uid owner;         // header user of the defining transaction
  Uid definer_role;  // header role of the defining transaction
  Uid schema_key;    // latest definition-affecting physical
  Uid last_change;   // latest physical of any kind that touched the object
  Metadata metadata;

  // Table: columns in position order. Index: key columns.
  std::vector<Uid> columns;
  // Table: indexes and constraints, in definition order.
  std::vector<Uid> indexes;

  // Column
  Uid table;  // also Index
  Domain domain;
  std::int32_t position = 0;
  bool not_null = false;
  Value default_value;

  // Index
  IndexKind index_kind = IndexKind::Plain;
  Uid ref_table;
  Uid ref_index;
  FkAction on_delete = FkAction::Restrict;
  FkAction on_update = FkAction::Restrict;
  std::string check_source;

  // View
  std::vector<std::string> view_columns;
  std::string source;

  // RestView
  std::vector<std::pair<std::string, Domain>> rest_columns;
  Uid using_table;

  // User
  std::string password_hash;
};
using ObjectPtr = std::shared_ptr<const SchemaObject>;

struct Row {
  Uid uid;
  Uid table;
  Uid last_change;
  std::vector<std::pair<Uid, Value>> fields;  // sorted by column uid

  /// NULL for a column the row has no value for.
  const Value& get(Uid column) const;
};
using RowPtr = std::shared_ptr<const Row>;

struct IndexKey {
  std::vector<Value> values;
  Uid row;
};

/// Values in index_order, then row uid; a default Uid sorts before any row.
struct IndexKeyLess {
  bool operator()(const IndexKey& a, const IndexKey& b) const;
};

using IndexTree = PTree<IndexKey, std::monostate, IndexKeyLess>;

struct TableData {
  PTree<Uid, RowPtr> rows;
  PTree<Uid, IndexTree> indexes;  // by index uid; CHECK constraints have none
};

/// Name scopes. Tables, views and RESTViews share one.
enum class Namespace : std::uint8_t { Relation = 0, Role = 1, User = 2, Domain = 3 };

using NameKey = std::pair<std::uint8_t, std::string>;
using GrantKey = std::pair<Uid, Uid>;  // (grantee, object)

/// Immutable database state. Copying a Snapshot copies a handful of tree
/// roots; a transaction begins by doing exactly that.
struct Snapshot {
  std::string name;
  std::uint64_t watermark = kLogHeaderSize;
  PTree<Uid, ObjectPtr> objects;
  PTree<NameKey, Uid> names;
  PTree<Uid, TableData> tables;
  PTree<GrantKey, std::uint32_t> grants;
  Uid owner;  // the first user created

  const SchemaObject* object(Uid uid) const;
  /// Throws NotFound unless uid names an object of the given kind.
  const SchemaObject& require(Uid uid, ObjectKind kind) const;
  std::optional<Uid> lookup(Namespace ns, const std::string& name) const;
  const TableData* table_data(Uid table) const;
  RowPtr row(Uid table, Uid row) const;
  std::uint32_t granted(Uid grantee, Uid object) const;

  std::optional<Uid> column_named(Uid table, const std::string& name) const;
  std::optional<Uid> index_named(Uid table, const std::string& name) const;
  /// The table's PRIMARY KEY index, if it has one.
  const SchemaObject* primary_key(Uid table) const;
  /// Foreign keys in other (or the same) tables that reference `table`.
  std::vector<const SchemaObject*> referencing(Uid table) const;
  std::vector<const SchemaObject*> objects_of(ObjectKind kind) const;
};

/// Header context a physical is installed under.
struct InstallContext {
  Uid user;
  Uid role;
  std::int64_t timestamp_us = 0;
};

/// Applies one physical. The single code path shared by transaction staging,
/// commit and replay. Throws SchemaError when the physical is invalid against
/// the snapshot (unknown reference, duplicate name, ...).
void install(Snapshot& s, const Physical& p, const InstallContext& ctx);

/// Index key of a row for the given index object.
IndexKey index_key(const SchemaObject& index, const Row& row);

/// Rebuilds the database by installing every logged physical in file order.
Snapshot replay(std::span<const std::uint8_t> file, const std::string& name);

/// Deterministic digest of the whole observable state.
std::uint64_t state_hash(const Snapshot& s);

// Security -------------------------------------------------------------------

/// The user may act in the role: it owns the role, or USAGE was granted to it
/// or to PUBLIC.
bool can_use_role(const Snapshot& s, Uid user, Uid role);

/// Owner of the object, the object's definer role, or a grant on it to the
/// role or PUBLIC. Columns fall back to their table's grants.
bool check_privilege(const Snapshot& s, Uid user, Uid role, Uid object, std::uint32_t action);

}  // namespace pyrlite
