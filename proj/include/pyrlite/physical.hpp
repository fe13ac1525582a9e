#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "pyrlite/uid.hpp"
#include "pyrlite/value.hpp"

namespace pyrlite {

/// Kind tag, the first byte of every encoded physical.
enum class PhysicalKind : std::uint8_t {
  TransactionHeader = 1,
  Table,
  Column,
  Record,
  Update,
  Delete,
  Index,
  View,
  RestView,
  Role,
  User,
  Grant,
  Metadata,
  Domain,
  Drop,
  Alter,
};

const char* kind_name(PhysicalKind k);

enum class IndexKind : std::uint8_t { Plain = 0, Primary = 1, Unique = 2, Foreign = 3, Check = 4 };

/// Referential action. NO ACTION has no representation.
enum class FkAction : std::uint8_t { Restrict = 0, Cascade = 1, SetNull = 2 };

enum Privilege : std::uint32_t {
  kSelect = 1,
  kInsert = 2,
  kUpdate = 4,
  kDelete = 8,
  kUsage = 16,
  kOwner = 32,
};

enum class AlterOp : std::uint8_t { Rename = 0, RedefineView = 1, SetPassword = 2 };

/// Metadata words attached to an object. Only URL, ETAG, MIME, USER and
/// PASSWORD affect behaviour; everything else is stored and echoed.
struct Metadata {
  std::vector<std::string> flags;                             // e.g. ETAG, ENTITY, PIE(A,B)
  std::vector<std::pair<std::string, std::string>> strings;  // e.g. URL -> 'http://...'

  bool empty() const noexcept { return flags.empty() && strings.empty(); }
  bool has(std::string_view flag) const;
  const std::string* get(std::string_view key) const;
  /// Later words override earlier string entries with the same key.
  Metadata merged(const Metadata& more) const;
  friend bool operator==(const Metadata&, const Metadata&) = default;
};

using Fields = std::vector<std::pair<Uid, Value>>;

namespace phys {

struct TransactionHeader {
  Uid user;
  Uid role;
  std::int64_t timestamp_us = 0;
  std::uint64_t count = 0;
  friend bool operator==(const TransactionHeader&, const TransactionHeader&) = default;
};
struct Table {
  std::string name;
  Metadata metadata;
  friend bool operator==(const Table&, const Table&) = default;
};
struct Column {
  Uid table;
  std::string name;
  pyrlite::Domain domain;
  std::int32_t position = 0;
  bool not_null = false;
  Value default_value;
  friend bool operator==(const Column&, const Column&) = default;
};
struct Record {
  Uid table;
  Fields fields;
  friend bool operator==(const Record&, const Record&) = default;
};
struct Update {
  Uid table;
  Uid row;
  Fields fields;
  friend bool operator==(const Update&, const Update&) = default;
};
struct Delete {
  Uid table;
  Uid row;
  friend bool operator==(const Delete&, const Delete&) = default;
};
/// Keys and constraints: primary, unique, foreign, check, or a plain index.
struct Index {
  Uid table;
  std::string name;
  IndexKind kind = IndexKind::Plain;
  std::vector<Uid> columns;
  Uid ref_table;   // Foreign only
  Uid ref_index;   // Foreign only: the referenced primary/unique index
  FkAction on_delete = FkAction::Restrict;
  FkAction on_update = FkAction::Restrict;
  std::string check_source;  // Check only
  friend bool operator==(const Index&, const Index&) = default;
};
struct View {
  std::string name;
  std::vector<std::string> columns;
  std::string source;
  Metadata metadata;
  friend bool operator==(const View&, const View&) = default;
};
struct RestView {
  std::string name;
  std::vector<std::pair<std::string, pyrlite::Domain>> columns;
  Uid using_table;
  Metadata metadata;
  friend bool operator==(const RestView&, const RestView&) = default;
};
struct Role {
  std::string name;
  friend bool operator==(const Role&, const Role&) = default;
};
struct User {
  std::string name;
  std::string password_hash;
  friend bool operator==(const User&, const User&) = default;
};
struct Grant {
  std::uint32_t privileges = 0;
  Uid object;
  Uid grantee;
  bool revoke = false;
  friend bool operator==(const Grant&, const Grant&) = default;
};
struct MetadataChange {
  Uid target;
  Metadata metadata;
  friend bool operator==(const MetadataChange&, const MetadataChange&) = default;
};
struct DomainDef {
  std::string name;
  pyrlite::Domain base;
  friend bool operator==(const DomainDef&, const DomainDef&) = default;
};
struct Drop {
  Uid target;
  friend bool operator==(const Drop&, const Drop&) = default;
};
struct Alter {
  Uid target;
  AlterOp op = AlterOp::Rename;
  std::string text;  // new name, new view source, or new password hash
  std::vector<std::string> columns;  // RedefineView: new column names
  friend bool operator==(const Alter&, const Alter&) = default;
};

}  // namespace phys

/// Alternative order follows PhysicalKind: index + 1 is the tag.
using Payload = std::variant<phys::TransactionHeader, phys::Table, phys::Column, phys::Record, phys::Update,
                             phys::Delete, phys::Index, phys::View, phys::RestView, phys::Role, phys::User,
                             phys::Grant, phys::MetadataChange, phys::DomainDef, phys::Drop, phys::Alter>;

/// One durable log record. `pos` is its defining position: the byte offset in
/// the log once committed, a transaction-temporary uid while staged.
struct Physical {
  Uid pos;
  Payload payload;

  PhysicalKind kind() const noexcept { return static_cast<PhysicalKind>(payload.index() + 1); }
  template <class T>
  const T& as() const {
    return std::get<T>(payload);
  }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&payload);
  }
  friend bool operator==(const Physical&, const Physical&) = default;
};

/// Visits every uid a payload references (not the physical's own pos).
void for_each_uid(const Payload& p, const std::function<void(Uid)>& f);
void for_each_uid(Payload& p, const std::function<void(Uid&)>& f);

/// Table a row-level physical (Record / Update / Delete) belongs to.
std::optional<Uid> row_table(const Physical& p);

/// Tag byte, varint body length, body.
std::vector<std::uint8_t> encode_physical(const Physical& p);
void encode_physical(const Physical& p, std::vector<std::uint8_t>& out);

/// Decodes the physical starting at `pos` of a whole-file buffer. Returns the
/// physical (with pos set) and the offset just past it.
std::pair<Physical, std::uint64_t> decode_physical(std::span<const std::uint8_t> file, std::uint64_t pos);

/// Replaces every transaction-temporary uid using `map`; committed and
/// built-in uids pass through. Throws RelocationError for an unmapped one.
Physical relocate(const Physical& p, const std::unordered_map<Uid, Uid>& map);

}  // namespace pyrlite
