#include <algorithm>

#include "pyrlite/sql/parser.hpp"
#include "pyrlite/sql/plan.hpp"

namespace pyrlite::sql {

namespace {

constexpr int kMaxViewDepth = 32;

BExprPtr make(BExpr e) { return std::make_shared<const BExpr>(std::move(e)); }

BExprPtr column_ref(Uid uid, const std::string& name, const Domain& d) {
  BExpr e;
  e.kind = BKind::Column;
  e.column = uid;
  e.name = name;
  e.domain = d;
  return make(std::move(e));
}

bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::Aggregate) return true;
  if (e.kind == ExprKind::Subquery) return false;
  return std::any_of(e.args.begin(), e.args.end(), [](const ExprPtr& a) { return a && contains_aggregate(*a); });
}

Domain arithmetic_domain(const Domain& a, const Domain& b) {
  if (a.kind == DomainKind::Real || b.kind == DomainKind::Real) return Domain::real();
  if (a.kind == DomainKind::Null) return b.kind == DomainKind::Null ? Domain{} : Domain{b.kind};
  return Domain{a.kind};
}

PlanPtr filter(PlanPtr child, BExprPtr pred) {
  PlanNode n;
  n.kind = NodeKind::Filter;
  n.columns = child->columns;
  n.names = child->names;
  n.domains = child->domains;
  n.predicate = std::move(pred);
  n.children = {std::move(child)};
  return std::make_shared<const PlanNode>(std::move(n));
}

std::string display(const std::vector<std::string>& name) {
  std::string s;
  for (const auto& p : name) s += (s.empty() ? "" : ".") + p;
  return s;
}

}  // namespace

struct Binder::AggCollector {
  std::vector<BExprPtr> calls;
  std::vector<Uid> uids;
  bool inside = false;
  std::size_t level = 0;
};

Binder::Binder(Transaction& tx, Uid role) : tx_(tx), role_(role), active_role_(role) {}

Uid Binder::fresh() { return Uid{next_++}; }

Domain Binder::resolve_type(const TypeSpec& t) const {
  const std::string& n = t.name;
  if (n == "INT" || n == "INTEGER" || n == "SMALLINT" || n == "BIGINT") return Domain::integer();
  if (n == "NUMERIC" || n == "DECIMAL" || n == "DEC") return Domain::real(t.precision, t.scale);
  if (n == "REAL" || n == "FLOAT" || n == "DOUBLE") return Domain::real();
  if (n == "CHAR" || n == "CHARACTER" || n == "VARCHAR" || n == "TEXT" || n == "STRING") return Domain::text(t.precision);
  if (n == "BOOLEAN" || n == "BOOL") return Domain::boolean();
  if (n == "DATE") return Domain::date();
  if (auto uid = tx_.state().lookup(Namespace::Domain, n)) {
    const SchemaObject& d = tx_.state().require(*uid, ObjectKind::Domain);
    Domain out = d.domain;
    out.named = *uid;
    return out;
  }
  throw SchemaError("unknown type " + n);
}

void Binder::authorise(Uid object, Uid role, const std::string& what) {
  for (const auto& [o, r] : checked_)
    if (o == object && r == role) return;
  if (!check_privilege(tx_.state(), tx_.user(), role, object, kSelect))
    throw AuthorizationError("permission denied: SELECT on " + what);
  checked_.emplace_back(object, role);
}

std::pair<const Binder::Entry*, std::size_t> Binder::resolve(const std::vector<std::string>& name) {
  const std::string& col = name.back();
  const std::string* qual = name.size() > 1 ? &name[name.size() - 2] : nullptr;
  for (std::size_t level = scopes_.size(); level-- > 0;) {
    const Entry* found = nullptr;
    for (const Entry& e : scopes_[level].entries) {
      if (e.name != col || (qual && e.qualifier != *qual)) continue;
      if (found) throw SchemaError("ambiguous column " + display(name));
      found = &e;
    }
    if (!found) continue;
    for (std::size_t i = 0; i < query_base_.size(); ++i)
      if (query_base_[i] > level) query_correlated_[i] = true;
    if (!found->base_column.is_null()) {
      const SchemaObject* table = tx_.state().object(tx_.state().require(found->base_column, ObjectKind::Column).table);
      authorise(found->base_column, found->role, "column " + found->name + " of " + (table ? table->name : "?"));
    }
    return {found, level};
  }
  throw SchemaError("unknown column " + display(name));
}

PlanPtr Binder::from_item(const TableRef& ref, Scope& scope) {
  const Snapshot& s = tx_.state();
  auto uid = s.lookup(Namespace::Relation, ref.name);
  if (!uid) throw SchemaError("unknown table or view " + ref.name);
  const SchemaObject& obj = *s.object(*uid);
  const std::string q = ref.alias.empty() ? obj.name : ref.alias;
  for (const Entry& e : scope.entries)
    if (e.qualifier == q) throw SchemaError("duplicate table reference " + q + "; use an alias");

  if (obj.kind == ObjectKind::View) {
    authorise(*uid, active_role_, "view " + obj.name);
    tx_.note_object_read(*uid);
    return view_instance(obj, q, scope);
  }
  if (obj.kind == ObjectKind::RestView) {
    authorise(*uid, active_role_, "view " + obj.name);
    tx_.note_object_read(*uid);
    return rest_instance(obj, q, scope);
  }
  if (obj.kind != ObjectKind::Table) throw SchemaError(ref.name + " is not a table or view");

  // Column-level grants are enough to name the table; each column is then
  // checked as it is referenced.
  bool any = check_privilege(s, tx_.user(), active_role_, *uid, kSelect);
  for (std::size_t i = 0; !any && i < obj.columns.size(); ++i)
    any = check_privilege(s, tx_.user(), active_role_, obj.columns[i], kSelect);
  if (!any) throw AuthorizationError("permission denied: SELECT on table " + obj.name);
  if (check_privilege(s, tx_.user(), active_role_, *uid, kSelect)) checked_.emplace_back(*uid, active_role_);

  PlanNode n;
  n.kind = NodeKind::TableScan;
  n.object = *uid;
  n.role = active_role_;
  for (Uid c : obj.columns) {
    const SchemaObject& col = s.require(c, ObjectKind::Column);
    Uid u = fresh();
    n.columns.push_back(u);
    n.names.push_back(col.name);
    n.domains.push_back(col.domain);
    n.base_columns.push_back(c);
    scope.entries.push_back({q, col.name, u, col.domain, c, active_role_});
  }
  for (Uid i : obj.indexes) {
    const SchemaObject* idx = s.object(i);
    if (!idx || idx->kind != ObjectKind::Index || idx->index_kind == IndexKind::Check) continue;
    n.indexes.push_back({i, idx->index_kind, idx->columns});
  }
  return std::make_shared<const PlanNode>(std::move(n));
}

PlanPtr Binder::view_instance(const SchemaObject& view, const std::string& qualifier, Scope& scope) {
  if (view_depth_ >= kMaxViewDepth) throw SchemaError("view " + view.name + " is nested too deeply");
  const Select body = parse_select(view.source);

  // The body sees none of the referencing query's names.
  auto saved_scopes = std::move(scopes_);
  auto saved_base = std::move(query_base_);
  auto saved_corr = std::move(query_correlated_);
  scopes_.clear();
  query_base_.clear();
  query_correlated_.clear();
  ++view_depth_;
  PlanPtr inner;
  try {
    inner = select_in(body, view.definer_role);
  } catch (...) {
    --view_depth_;
    scopes_ = std::move(saved_scopes);
    query_base_ = std::move(saved_base);
    query_correlated_ = std::move(saved_corr);
    throw;
  }
  --view_depth_;
  scopes_ = std::move(saved_scopes);
  query_base_ = std::move(saved_base);
  query_correlated_ = std::move(saved_corr);

  std::vector<std::string> names = view.view_columns.empty() ? inner->names : view.view_columns;
  if (names.size() != inner->columns.size())
    throw SchemaError("view " + view.name + " names " + std::to_string(names.size()) + " columns but its query has " +
                      std::to_string(inner->columns.size()));

  PlanNode n;
  n.kind = NodeKind::ViewInstance;
  n.object = view.uid;
  n.role = active_role_;
  for (std::size_t i = 0; i < names.size(); ++i) {
    Uid u = fresh();
    n.columns.push_back(u);
    n.names.push_back(names[i]);
    n.domains.push_back(inner->domains[i]);
    n.exprs.push_back(column_ref(inner->columns[i], inner->names[i], inner->domains[i]));
    scope.entries.push_back({qualifier, names[i], u, inner->domains[i], Uid{}, Uid{}});
  }
  n.children = {inner};
  return std::make_shared<const PlanNode>(std::move(n));
}

PlanPtr Binder::rest_instance(const SchemaObject& view, const std::string& qualifier, Scope& scope) {
  const Snapshot& s = tx_.state();
  PlanNode n;
  n.kind = NodeKind::RestScan;
  n.object = view.uid;
  n.role = active_role_;
  RestInfo& r = n.rest;
  if (const std::string* url = view.metadata.get("URL")) r.url = *url;
  if (const std::string* u = view.metadata.get("USER")) r.user = *u;
  if (const std::string* p = view.metadata.get("PASSWORD")) r.password = *p;
  r.using_table = view.using_table;
  if (!r.using_table.is_null()) {
    const SchemaObject& ut = s.require(r.using_table, ObjectKind::Table);
    if (ut.columns.empty()) throw SchemaError("using table " + ut.name + " has no columns");
    r.using_columns = ut.columns;
  } else if (r.url.empty()) {
    throw SchemaError("RESTView " + view.name + " has neither a url nor a using table");
  }
  for (const auto& [name, domain] : view.rest_columns) {
    RestColumn rc{name, domain, Uid{}};
    for (std::size_t i = 0; i + 1 < r.using_columns.size(); ++i)
      if (s.require(r.using_columns[i], ObjectKind::Column).name == name) rc.using_column = r.using_columns[i];
    if (rc.using_column.is_null()) r.fetch.push_back(name);
    r.columns.push_back(rc);
    Uid u = fresh();
    n.columns.push_back(u);
    n.names.push_back(name);
    n.domains.push_back(domain);
    scope.entries.push_back({qualifier, name, u, domain, Uid{}, Uid{}});
  }
  return std::make_shared<const PlanNode>(std::move(n));
}

PlanPtr Binder::select(const Select& s) {
  scopes_.clear();
  query_base_.clear();
  query_correlated_.clear();
  active_role_ = role_;
  return select_in(s, role_);
}

PlanPtr Binder::select_in(const Select& s, Uid role) {
  const Uid saved_role = active_role_;
  active_role_ = role;
  const std::size_t level = scopes_.size();
  scopes_.emplace_back();
  struct Restore {
    Binder& b;
    Uid role;
    std::size_t level;
    ~Restore() {
      b.scopes_.resize(level);
      b.active_role_ = role;
    }
  } restore{*this, saved_role, level};

  PlanPtr input;
  if (s.from.empty()) {
    input = std::make_shared<const PlanNode>(PlanNode{});
  }
  for (const TableRef& ref : s.from) {
    Scope scope = std::move(scopes_[level]);
    PlanPtr item;
    try {
      item = from_item(ref, scope);
    } catch (...) {
      scopes_[level] = std::move(scope);
      throw;
    }
    scopes_[level] = std::move(scope);
    if (!input) {
      input = item;
      continue;
    }
    PlanNode p;
    p.kind = NodeKind::Product;
    p.columns = input->columns;
    p.names = input->names;
    p.domains = input->domains;
    p.columns.insert(p.columns.end(), item->columns.begin(), item->columns.end());
    p.names.insert(p.names.end(), item->names.begin(), item->names.end());
    p.domains.insert(p.domains.end(), item->domains.begin(), item->domains.end());
    p.children = {input, item};
    input = std::make_shared<const PlanNode>(std::move(p));
  }
  if (s.where) input = filter(input, bind(*s.where, nullptr));

  const bool aggregate =
      std::any_of(s.items.begin(), s.items.end(), [](const SelectItem& i) { return i.expr && contains_aggregate(*i.expr); });
  AggCollector aggs;
  aggs.level = level;

  std::vector<BExprPtr> outputs;
  std::vector<std::string> names;
  for (const SelectItem& item : s.items) {
    if (item.star) {
      if (aggregate) throw SchemaError("* cannot be combined with aggregates");
      bool any = false;
      const std::vector<Entry> entries = scopes_[level].entries;
      for (const Entry& e : entries) {
        if (!item.qualifier.empty() && e.qualifier != item.qualifier) continue;
        any = true;
        resolve({e.qualifier, e.name});
        outputs.push_back(column_ref(e.uid, e.name, e.domain));
        names.push_back(e.name);
      }
      if (!any) throw SchemaError("unknown table " + item.qualifier + " in select list");
      continue;
    }
    outputs.push_back(bind(*item.expr, aggregate ? &aggs : nullptr));
    if (!item.alias.empty()) {
      names.push_back(item.alias);
    } else if (item.expr->kind == ExprKind::Column) {
      names.push_back(item.expr->name.back());
    } else if (item.expr->kind == ExprKind::Aggregate) {
      names.push_back(agg_name(item.expr->agg));
    } else {
      names.push_back("COL" + std::to_string(names.size() + 1));
    }
  }

  if (aggregate) {
    PlanNode a;
    a.kind = NodeKind::Aggregate;
    a.columns = aggs.uids;
    for (const auto& c : aggs.calls) {
      a.names.push_back(agg_name(c->agg));
      a.domains.push_back(c->domain);
    }
    a.exprs = aggs.calls;
    a.children = {input};
    input = std::make_shared<const PlanNode>(std::move(a));
  }

  PlanNode proj;
  proj.kind = NodeKind::Project;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    proj.columns.push_back(fresh());
    proj.names.push_back(names[i]);
    proj.domains.push_back(outputs[i]->domain);
  }
  proj.exprs = outputs;

  if (s.order.empty()) {
    proj.children = {input};
    return std::make_shared<const PlanNode>(std::move(proj));
  }

  // ORDER BY sees the output names first; otherwise it sorts the input.
  std::vector<std::pair<BExprPtr, bool>> keys;
  Scope out;
  for (std::size_t i = 0; i < proj.columns.size(); ++i)
    out.entries.push_back({"", proj.names[i], proj.columns[i], proj.domains[i], Uid{}, Uid{}});
  Scope saved = std::move(scopes_[level]);
  scopes_[level] = std::move(out);
  bool on_output = true;
  try {
    for (const OrderItem& o : s.order) keys.emplace_back(bind(*o.expr, nullptr), o.desc);
  } catch (const SchemaError&) {
    on_output = false;
  }
  scopes_[level] = std::move(saved);

  PlanNode order;
  order.kind = NodeKind::Order;
  if (on_output) {
    proj.children = {input};
    PlanPtr p = std::make_shared<const PlanNode>(std::move(proj));
    order.columns = p->columns;
    order.names = p->names;
    order.domains = p->domains;
    order.order = std::move(keys);
    order.children = {p};
    return std::make_shared<const PlanNode>(std::move(order));
  }
  if (aggregate) throw SchemaError("ORDER BY of an aggregate query must name an output column");
  keys.clear();
  for (const OrderItem& o : s.order) keys.emplace_back(bind(*o.expr, nullptr), o.desc);
  order.columns = input->columns;
  order.names = input->names;
  order.domains = input->domains;
  order.order = std::move(keys);
  order.children = {input};
  proj.children = {std::make_shared<const PlanNode>(std::move(order))};
  return std::make_shared<const PlanNode>(std::move(proj));
}

BExprPtr Binder::bind(const Expr& e, AggCollector* aggs) {
  BExpr b;
  switch (e.kind) {
    case ExprKind::Literal:
      b.kind = BKind::Literal;
      b.value = e.value;
      b.domain = Domain{e.value.kind()};
      return make(std::move(b));
    case ExprKind::Column: {
      auto [entry, level] = resolve(e.name);
      if (aggs && !aggs->inside && level == aggs->level)
        throw SchemaError("column " + display(e.name) + " must appear inside an aggregate (GROUP BY is not supported)");
      return column_ref(entry->uid, entry->name, entry->domain);
    }
    case ExprKind::Unary: {
      b.kind = BKind::Unary;
      b.op = e.op;
      b.args.push_back(bind(*e.args[0], aggs));
      b.domain = e.op == "NOT" ? Domain::boolean() : Domain{b.args[0]->domain.kind};
      return make(std::move(b));
    }
    case ExprKind::Binary: {
      b.kind = BKind::Binary;
      b.op = e.op;
      b.args.push_back(bind(*e.args[0], aggs));
      b.args.push_back(bind(*e.args[1], aggs));
      if (e.op == "+" || e.op == "-" || e.op == "*" || e.op == "/")
        b.domain = arithmetic_domain(b.args[0]->domain, b.args[1]->domain);
      else if (e.op == "||")
        b.domain = Domain::text();
      else
        b.domain = Domain::boolean();
      return make(std::move(b));
    }
    case ExprKind::Case: {
      b.kind = BKind::Case;
      b.flag = e.flag;
      for (const ExprPtr& a : e.args) b.args.push_back(bind(*a, aggs));
      for (std::size_t i = 1; i < b.args.size(); i += 2)
        if (b.args[i]->domain.kind != DomainKind::Null) {
          b.domain = Domain{b.args[i]->domain.kind};
          break;
        }
      if (b.domain.kind == DomainKind::Null && e.flag) b.domain = Domain{b.args.back()->domain.kind};
      return make(std::move(b));
    }
    case ExprKind::Cast:
      b.kind = BKind::Cast;
      b.args.push_back(bind(*e.args[0], aggs));
      b.domain = resolve_type(e.type);
      return make(std::move(b));
    case ExprKind::IsNull:
      b.kind = BKind::IsNull;
      b.flag = e.flag;
      b.args.push_back(bind(*e.args[0], aggs));
      b.domain = Domain::boolean();
      return make(std::move(b));
    case ExprKind::Aggregate: {
      if (!aggs) throw SchemaError(std::string("aggregate ") + agg_name(e.agg) + " is not allowed here");
      if (aggs->inside) throw SchemaError("aggregates cannot be nested");
      b.kind = BKind::Aggregate;
      b.agg = e.agg;
      b.flag = e.flag;
      if (!e.flag) {
        aggs->inside = true;
        try {
          b.args.push_back(bind(*e.args[0], aggs));
        } catch (...) {
          aggs->inside = false;
          throw;
        }
        aggs->inside = false;
      }
      switch (e.agg) {
        case AggKind::Count: b.domain = Domain::integer(); break;
        case AggKind::Avg: b.domain = Domain::real(); break;
        case AggKind::Sum:
          b.domain = Domain{b.args[0]->domain.kind == DomainKind::Real ? DomainKind::Real : b.args[0]->domain.kind};
          break;
        default: b.domain = b.args[0]->domain;
      }
      const Uid u = fresh();
      const std::string name = agg_name(e.agg);
      const Domain d = b.domain;
      aggs->calls.push_back(make(std::move(b)));
      aggs->uids.push_back(u);
      return column_ref(u, name, d);
    }
    case ExprKind::Subquery: {
      query_base_.push_back(scopes_.size());
      query_correlated_.push_back(false);
      PlanPtr q;
      try {
        q = select_in(*e.query, active_role_);
      } catch (...) {
        query_base_.pop_back();
        query_correlated_.pop_back();
        throw;
      }
      b.correlated = query_correlated_.back();
      query_base_.pop_back();
      query_correlated_.pop_back();
      if (q->columns.size() != 1) throw SchemaError("a scalar subquery must return exactly one column");
      b.kind = BKind::Subquery;
      b.domain = q->domains[0];
      b.query = q;
      return make(std::move(b));
    }
  }
  throw SchemaError("unsupported expression");
}

Binder::TableScope Binder::table(const std::string& name, const std::string& alias, const ExprPtr& where) {
  scopes_.clear();
  query_base_.clear();
  query_correlated_.clear();
  active_role_ = role_;
  const Snapshot& s = tx_.state();
  auto uid = s.lookup(Namespace::Relation, name);
  if (!uid) throw SchemaError("unknown table " + name);
  const SchemaObject& obj = *s.object(*uid);
  const std::string q = alias.empty() ? obj.name : alias;
  scopes_.emplace_back();
  PlanPtr plan;
  if (obj.kind == ObjectKind::Table) {
    PlanNode n;
    n.kind = NodeKind::TableScan;
    n.object = *uid;
    n.role = role_;
    for (Uid c : obj.columns) {
      const SchemaObject& col = s.require(c, ObjectKind::Column);
      Uid u = fresh();
      n.columns.push_back(u);
      n.names.push_back(col.name);
      n.domains.push_back(col.domain);
      n.base_columns.push_back(c);
      scopes_[0].entries.push_back({q, col.name, u, col.domain, c, role_});
    }
    for (Uid i : obj.indexes) {
      const SchemaObject* idx = s.object(i);
      if (!idx || idx->kind != ObjectKind::Index || idx->index_kind == IndexKind::Check) continue;
      n.indexes.push_back({i, idx->index_kind, idx->columns});
    }
    n.rowid = fresh();
    n.columns.push_back(n.rowid);
    n.names.push_back("$ROWID");
    n.domains.push_back(Domain::integer());
    n.base_columns.push_back(Uid{});
    plan = std::make_shared<const PlanNode>(std::move(n));
  } else if (obj.kind == ObjectKind::RestView) {
    PlanPtr r = rest_instance(obj, q, scopes_[0]);
    PlanNode n = *r;
    n.rest.want_keys = true;
    n.rowid = fresh();
    n.columns.push_back(n.rowid);
    n.names.push_back("$ROWID");
    n.domains.push_back(Domain::integer());
    tx_.note_object_read(*uid);
    plan = std::make_shared<const PlanNode>(std::move(n));
  } else {
    throw SchemaError(name + " is not a table");
  }
  const Uid rowid = plan->rowid;
  if (where) plan = filter(plan, bind(*where, nullptr));
  scopes_.clear();
  return {plan, rowid};
}

BExprPtr Binder::expression(const PlanPtr& plan, const std::string& qualifier, const Expr& e) {
  scopes_.clear();
  query_base_.clear();
  query_correlated_.clear();
  active_role_ = role_;
  const PlanNode* scan = plan.get();
  while (scan->kind == NodeKind::Filter) scan = scan->children[0].get();
  scopes_.emplace_back();
  for (std::size_t i = 0; i < plan->columns.size(); ++i) {
    Uid base = i < scan->base_columns.size() ? scan->base_columns[i] : Uid{};
    scopes_[0].entries.push_back({qualifier, plan->names[i], plan->columns[i], plan->domains[i], base, role_});
  }
  BExprPtr out = bind(e, nullptr);
  scopes_.clear();
  return out;
}

BExprPtr Binder::constant(const Expr& e) {
  scopes_.clear();
  query_base_.clear();
  query_correlated_.clear();
  active_role_ = role_;
  scopes_.emplace_back();
  BExprPtr out = bind(e, nullptr);
  scopes_.clear();
  return out;
}

}  // namespace pyrlite::sql
