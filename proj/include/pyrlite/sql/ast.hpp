#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pyrlite/physical.hpp"
#include "pyrlite/value.hpp"

namespace pyrlite::sql {

/// Shared immutable pointer with deep equality, so AST structs can default
/// their comparison operators.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : p_(std::make_shared<const T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)

  const T* get() const noexcept { return p_.get(); }
  const T* operator->() const noexcept { return p_.get(); }
  const T& operator*() const noexcept { return *p_; }
  explicit operator bool() const noexcept { return p_ != nullptr; }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.p_ || !b.p_) return !a.p_ && !b.p_;
    return a.p_ == b.p_ || *a.p_ == *b.p_;
  }

 private:
  std::shared_ptr<const T> p_;
};

struct Select;
struct Expr;
using ExprPtr = Box<Expr>;
using SelectPtr = Box<Select>;

enum class AggKind : std::uint8_t { Sum, Count, Avg, Min, Max };
const char* agg_name(AggKind k);

/// Type as written: INT, NUMERIC(8,2), CHAR(12), or a user domain name.
struct TypeSpec {
  std::string name;
  std::int32_t precision = 0;
  std::int32_t scale = 0;
  friend bool operator==(const TypeSpec&, const TypeSpec&) = default;
};

enum class ExprKind : std::uint8_t { Literal, Column, Unary, Binary, Case, Cast, Aggregate, Subquery, IsNull };

struct Expr {
  ExprKind kind = ExprKind::Literal;
  Value value;                     // Literal
  std::vector<std::string> name;   // Column: [qualifier,] column
  std::string op;                  // Unary: - NOT; Binary: + - * / || = <> < <= > >= AND OR
  std::vector<ExprPtr> args;       // operands; Case: when, then, ..., [else]
  bool flag = false;               // IsNull: NOT NULL; Case: has ELSE; Aggregate: COUNT(*)
  AggKind agg = AggKind::Count;
  TypeSpec type;                   // Cast
  SelectPtr query;                 // Subquery

  friend bool operator==(const Expr&, const Expr&) = default;

  static ExprPtr literal(Value v);
  static ExprPtr column(std::vector<std::string> name);
  static ExprPtr unary(std::string op, ExprPtr a);
  static ExprPtr binary(std::string op, ExprPtr a, ExprPtr b);
};

struct SelectItem {
  ExprPtr expr;
  std::string alias;
  bool star = false;
  std::string qualifier;  // t.* when star
  friend bool operator==(const SelectItem&, const SelectItem&) = default;
};

struct TableRef {
  std::string name;
  std::string alias;
  friend bool operator==(const TableRef&, const TableRef&) = default;
};

struct OrderItem {
  ExprPtr expr;
  bool desc = false;
  friend bool operator==(const OrderItem&, const OrderItem&) = default;
};

struct Select {
  std::vector<SelectItem> items;
  std::vector<TableRef> from;
  ExprPtr where;
  std::vector<OrderItem> order;
  friend bool operator==(const Select&, const Select&) = default;
};

// Statements --------------------------------------------------------------

struct ForeignRef {
  std::string table;
  std::vector<std::string> columns;  // empty: the referenced primary key
  FkAction on_delete = FkAction::Restrict;
  FkAction on_update = FkAction::Restrict;
  friend bool operator==(const ForeignRef&, const ForeignRef&) = default;
};

struct ColumnDef {
  std::string name;
  TypeSpec type;
  bool not_null = false;
  ExprPtr default_value;
  bool primary = false;
  bool unique = false;
  std::optional<ForeignRef> references;
  ExprPtr check;
  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

struct TableConstraint {
  std::string name;  // may be empty
  IndexKind kind = IndexKind::Primary;
  std::vector<std::string> columns;
  std::optional<ForeignRef> references;
  ExprPtr check;
  friend bool operator==(const TableConstraint&, const TableConstraint&) = default;
};

struct CreateTable {
  std::string name;
  std::vector<ColumnDef> columns;
  std::vector<TableConstraint> constraints;
  Metadata metadata;
  friend bool operator==(const CreateTable&, const CreateTable&) = default;
};

struct CreateView {
  std::string name;
  std::vector<std::string> columns;  // optional column list of a query view
  SelectPtr query;                   // absent for a RESTView
  std::vector<std::pair<std::string, TypeSpec>> rest_columns;  // OF (...)
  std::string using_table;
  Metadata metadata;  // the GET url lands here as URL
  bool is_rest() const noexcept { return !query; }
  friend bool operator==(const CreateView&, const CreateView&) = default;
};

struct CreateRole {
  std::string name;
  friend bool operator==(const CreateRole&, const CreateRole&) = default;
};

struct CreateUser {
  std::string name;
  std::optional<std::string> password;
  friend bool operator==(const CreateUser&, const CreateUser&) = default;
};

struct CreateDomain {
  std::string name;
  TypeSpec type;
  friend bool operator==(const CreateDomain&, const CreateDomain&) = default;
};

struct CreateIndex {
  std::string name;
  std::string table;
  std::vector<std::string> columns;
  bool unique = false;
  friend bool operator==(const CreateIndex&, const CreateIndex&) = default;
};

struct PrivilegeSpec {
  std::string name;  // SELECT, INSERT, UPDATE, DELETE, USAGE, ALL, or a role
  std::vector<std::string> columns;
  friend bool operator==(const PrivilegeSpec&, const PrivilegeSpec&) = default;
};

/// GRANT privileges ON object TO grantees, or GRANT roles TO grantees.
struct Grant {
  bool revoke = false;
  std::vector<PrivilegeSpec> privileges;
  std::string object;  // empty for role grants
  std::vector<std::string> grantees;  // PUBLIC is spelled PUBLIC
  friend bool operator==(const Grant&, const Grant&) = default;
};

struct Insert {
  std::string table;
  std::vector<std::string> columns;
  std::vector<std::vector<ExprPtr>> rows;
  SelectPtr query;  // INSERT ... SELECT
  friend bool operator==(const Insert&, const Insert&) = default;
};

struct Update {
  std::string table;
  std::string alias;
  std::vector<std::pair<std::string, ExprPtr>> sets;
  ExprPtr where;
  friend bool operator==(const Update&, const Update&) = default;
};

struct Delete {
  std::string table;
  std::string alias;
  ExprPtr where;
  friend bool operator==(const Delete&, const Delete&) = default;
};

struct SelectStatement {
  SelectPtr query;
  friend bool operator==(const SelectStatement&, const SelectStatement&) = default;
};

struct SetRole {
  std::string name;
  friend bool operator==(const SetRole&, const SetRole&) = default;
};

enum class ObjectWord : std::uint8_t { Table, View, Role, User, Index, Domain };
const char* object_word_name(ObjectWord w);

struct Drop {
  ObjectWord what = ObjectWord::Table;
  std::string name;
  friend bool operator==(const Drop&, const Drop&) = default;
};

enum class AlterAction : std::uint8_t { AddColumn, AddConstraint, DropColumn, DropConstraint, Rename, Metadata,
                                        RedefineView, SetPassword };

struct Alter {
  ObjectWord what = ObjectWord::Table;
  std::string name;
  AlterAction action = AlterAction::Rename;
  std::optional<ColumnDef> column;
  std::optional<TableConstraint> constraint;
  std::string text;  // dropped name, new name, or password
  Metadata metadata;
  std::vector<std::string> columns;  // RedefineView
  SelectPtr query;                   // RedefineView
  friend bool operator==(const Alter&, const Alter&) = default;
};

struct Begin {
  friend bool operator==(const Begin&, const Begin&) = default;
};
struct Commit {
  friend bool operator==(const Commit&, const Commit&) = default;
};
struct Rollback {
  friend bool operator==(const Rollback&, const Rollback&) = default;
};

using Statement = std::variant<CreateTable, CreateView, CreateRole, CreateUser, CreateDomain, CreateIndex, Grant,
                               Insert, Update, Delete, SelectStatement, SetRole, Drop, Alter, Begin, Commit, Rollback>;

// Printing ----------------------------------------------------------------

/// Identifier as SQL: bare when it would read back unchanged, else quoted.
std::string quote_identifier(const std::string& name);
std::string to_sql(const TypeSpec& t);
std::string to_sql(const Expr& e);
std::string to_sql(const Select& s);
std::string to_sql(const Metadata& m);
std::string to_sql(const Statement& s);

}  // namespace pyrlite::sql
