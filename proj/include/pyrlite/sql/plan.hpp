#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pyrlite/pbtree.hpp"
#include "pyrlite/sql/ast.hpp"
#include "pyrlite/sql/remote.hpp"
#include "pyrlite/transaction.hpp"

namespace pyrlite::sql {

struct PlanNode;
struct BExpr;
using PlanPtr = std::shared_ptr<const PlanNode>;
using BExprPtr = std::shared_ptr<const BExpr>;

enum class BKind : std::uint8_t { Literal, Column, Unary, Binary, Case, Cast, Aggregate, Subquery, IsNull };

/// Bound expression: names resolved to heap uids.
struct BExpr {
  BKind kind = BKind::Literal;
  Domain domain;
  Value value;          // Literal
  Uid column;           // Column
  std::string name;     // Column: the column name it was bound from
  std::string op;
  std::vector<BExprPtr> args;
  bool flag = false;    // as in Expr
  AggKind agg = AggKind::Count;
  PlanPtr query;        // Subquery
  bool correlated = false;
};

enum class NodeKind : std::uint8_t {
  Unit,          // one empty row: SELECT without FROM
  TableScan,
  IndexSeek,
  Filter,
  Project,
  ViewInstance,  // a view reference: projects the view body onto fresh uids
  Order,
  Aggregate,
  Product,
  RestScan,
};
const char* node_kind_name(NodeKind k);

struct RestColumn {
  std::string name;
  Domain domain;
  Uid using_column;  // null for a remote column
};

struct RestInfo {
  std::string url;             // single-contributor view
  Uid using_table;             // multi-contributor view
  std::vector<Uid> using_columns;  // all using-table columns; the last holds the url
  std::vector<RestColumn> columns;  // one per output column
  std::vector<BExprPtr> local_filters;   // using-table columns only
  std::vector<BExprPtr> remote_filters;  // remote columns only
  std::vector<std::string> fetch;        // remote columns requested
  std::vector<BExprPtr> aggregates;      // pushed aggregate calls
  bool want_keys = false;                // DML: rows must carry key and etag
  std::string user;
  std::string password;
};

struct IndexInfo {
  Uid index;
  IndexKind kind = IndexKind::Plain;
  std::vector<Uid> columns;  // table columns, in key order
};

struct PlanNode {
  NodeKind kind = NodeKind::Unit;
  std::vector<Uid> columns;       // heap uids of the output columns
  std::vector<std::string> names;
  std::vector<Domain> domains;
  std::vector<PlanPtr> children;

  Uid object;                     // scanned table, referenced view or RESTView
  Uid role;                       // role the reference was bound under
  std::vector<Uid> base_columns;  // scans: table column per output column
  std::vector<Uid> used;          // scans: table columns the query reads
  Uid rowid;                      // scans: optional extra output with the row uid
  std::vector<IndexInfo> indexes; // scans: candidates for a seek
  Uid index;                      // IndexSeek
  std::vector<BExprPtr> key;      // IndexSeek
  BExprPtr predicate;             // Filter
  std::vector<BExprPtr> exprs;    // Project, ViewInstance, Aggregate (the aggregate calls)
  std::vector<std::pair<BExprPtr, bool>> order;  // Order: key, descending
  bool remote_aggregate = false;  // Aggregate fed by registers from its RestScan child
  RestInfo rest;
};

/// Binds statements against a transaction's state. Each table or view
/// reference receives fresh heap uids.
class Binder {
 public:
  Binder(Transaction& tx, Uid role);

  PlanPtr select(const Select& s);
  /// Single-table scope for DML and constraint bodies. The scan carries a
  /// rowid column; `plan` filters it by `where` (if any).
  struct TableScope {
    PlanPtr plan;
    Uid rowid;
  };
  TableScope table(const std::string& name, const std::string& alias, const ExprPtr& where);
  /// Binds an expression against the output columns of `plan`.
  BExprPtr expression(const PlanPtr& plan, const std::string& qualifier, const Expr& e);
  /// Binds an expression with no columns in scope (VALUES rows, defaults).
  BExprPtr constant(const Expr& e);

  Domain resolve_type(const TypeSpec& t) const;

 private:
  struct Entry {
    std::string qualifier;
    std::string name;
    Uid uid;
    Domain domain;
    Uid base_column;  // when the column is a table column
    Uid role;         // role its SELECT privilege is checked under
  };
  struct Scope {
    std::vector<Entry> entries;
  };
  struct AggCollector;

  Uid fresh();
  PlanPtr from_item(const TableRef& ref, Scope& scope);
  PlanPtr view_instance(const SchemaObject& view, const std::string& qualifier, Scope& scope);
  PlanPtr rest_instance(const SchemaObject& view, const std::string& qualifier, Scope& scope);
  PlanPtr select_in(const Select& s, Uid role);
  BExprPtr bind(const Expr& e, AggCollector* aggs);
  /// The entry and the scope level it was found at.
  std::pair<const Entry*, std::size_t> resolve(const std::vector<std::string>& name);
  void authorise(Uid object, Uid role, const std::string& what);

  Transaction& tx_;
  Uid role_;
  Uid active_role_;
  std::int64_t next_ = Uid::kHeapBase;
  std::vector<Scope> scopes_;
  std::vector<std::size_t> query_base_;      // scope index where each open subquery starts
  std::vector<bool> query_correlated_;
  std::vector<std::pair<Uid, Uid>> checked_;  // (column, role) pairs already authorised
  int view_depth_ = 0;
};

/// Pushes filters down, turns equality on indexed columns into seeks, lets
/// RESTViews absorb filters and aggregates, and records which table columns
/// each scan reads. Idempotent.
PlanPtr review(const PlanPtr& plan);

bool plan_equal(const PlanNode& a, const PlanNode& b);
bool expr_equal(const BExpr& a, const BExpr& b);
/// One line per node, indented by depth. For tests and EXPLAIN-style output.
std::string explain(const PlanNode& p);
/// SQL text of a pushable bound expression, with bare column names.
std::string remote_sql(const BExpr& e);

using Tuple = std::vector<Value>;

/// Query result: column metadata plus rows held in a persistent list, so a
/// Cursor over it is unaffected by anything that happens afterwards.
struct ResultSet {
  std::vector<std::string> columns;
  std::vector<Domain> domains;
  PList<Tuple> rows;

  class Cursor {
   public:
    explicit Cursor(std::optional<PTree<std::size_t, Tuple>::Bookmark> b) : b_(std::move(b)) {}
    bool valid() const noexcept { return b_.has_value(); }
    const Tuple& row() const { return b_->value(); }
    std::size_t position() const { return b_->position(); }
    Cursor next() const { return Cursor(b_->next()); }
    Cursor previous() const { return Cursor(b_->previous()); }

   private:
    std::optional<PTree<std::size_t, Tuple>::Bookmark> b_;
  };
  Cursor first() const { return Cursor(rows.tree().first()); }
  Cursor last() const { return Cursor(rows.tree().last()); }
  std::size_t size() const { return rows.size(); }
  std::vector<Tuple> to_vector() const;
};

/// Runs a reviewed plan, recording reads on the transaction.
class Executor {
 public:
  Executor(Transaction& tx, RemoteSource* remote);
  ResultSet run(const PlanNode& plan);
  std::vector<Tuple> rows(const PlanNode& plan);
  Value evaluate(const BExpr& e);
  /// Evaluates against one row of a plan with the given output columns.
  Value evaluate(const BExpr& e, const std::vector<Uid>& columns, const Tuple& row);

  /// Where a RESTView row came from. A RestScan with want_keys emits the
  /// position in this list as its rowid column.
  struct RestRef {
    std::string contributor;  // base url of the contributor
    std::string key;
    std::string etag;
    std::vector<Value> using_values;  // the contributing using-table row
  };
  const std::vector<RestRef>& rest_refs() const noexcept { return refs_; }

  /// Column bindings visible to an expression, innermost first.
  struct Env;

 private:
  std::vector<Tuple> exec(const PlanNode& p, const Env* outer);
  Value eval(const BExpr& e, const Env* env);
  std::vector<AggRegister> remote_registers(const PlanNode& rest, const Env* outer);
  std::vector<Tuple> rest_rows(const PlanNode& p, const Env* outer);

  Transaction& tx_;
  RemoteSource* remote_;
  std::vector<std::pair<const PlanNode*, std::vector<Tuple>>> memo_;
  std::vector<RestRef> refs_;
};

}  // namespace pyrlite::sql
