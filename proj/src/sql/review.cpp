#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "pyrlite/sql/plan.hpp"

namespace pyrlite::sql {

namespace {

using Conjuncts = std::vector<BExprPtr>;

BExprPtr make(BExpr e) { return std::make_shared<const BExpr>(std::move(e)); }
PlanPtr make(PlanNode n) { return std::make_shared<const PlanNode>(std::move(n)); }

void split(const BExprPtr& e, Conjuncts& out) {
  if (e->kind == BKind::Binary && e->op == "AND") {
    split(e->args[0], out);
    split(e->args[1], out);
  } else {
    out.push_back(e);
  }
}

BExprPtr conjoin(const Conjuncts& cs) {
  BExprPtr acc = cs[0];
  for (std::size_t i = 1; i < cs.size(); ++i) {
    BExpr b;
    b.kind = BKind::Binary;
    b.op = "AND";
    b.domain = Domain::boolean();
    b.args = {acc, cs[i]};
    acc = make(std::move(b));
  }
  return acc;
}

void plan_refs(const PlanNode& p, std::set<Uid>& out);

/// Every column uid an expression mentions, including inside subqueries.
void refs(const BExpr& e, std::set<Uid>& out) {
  if (e.kind == BKind::Column) out.insert(e.column);
  for (const auto& a : e.args) refs(*a, out);
  if (e.query) plan_refs(*e.query, out);
}

void plan_refs(const PlanNode& p, std::set<Uid>& out) {
  if (p.predicate) refs(*p.predicate, out);
  for (const auto& e : p.exprs) refs(*e, out);
  for (const auto& e : p.key) refs(*e, out);
  for (const auto& [e, d] : p.order) refs(*e, out);
  for (const auto& e : p.rest.local_filters) refs(*e, out);
  for (const auto& e : p.rest.remote_filters) refs(*e, out);
  for (const auto& e : p.rest.aggregates) refs(*e, out);
  for (const auto& c : p.children) plan_refs(*c, out);
}

bool has_subquery(const BExpr& e) {
  if (e.kind == BKind::Subquery) return true;
  return std::any_of(e.args.begin(), e.args.end(), [](const BExprPtr& a) { return has_subquery(*a); });
}
bool has_aggregate(const BExpr& e) {
  if (e.kind == BKind::Aggregate) return true;
  return std::any_of(e.args.begin(), e.args.end(), [](const BExprPtr& a) { return has_aggregate(*a); });
}

std::set<Uid> outputs(const PlanNode& p) { return {p.columns.begin(), p.columns.end()}; }

bool intersects(const std::set<Uid>& a, const std::set<Uid>& b) {
  return std::any_of(a.begin(), a.end(), [&](Uid u) { return b.count(u) > 0; });
}
bool subset_within(const std::set<Uid>& r, const std::set<Uid>& scope, const std::set<Uid>& part) {
  for (Uid u : r)
    if (scope.count(u) && !part.count(u)) return false;
  return true;
}

/// Replaces references to `from[i]` by `to[i]`.
BExprPtr substitute(const BExprPtr& e, const std::vector<Uid>& from, const std::vector<BExprPtr>& to) {
  if (e->kind == BKind::Column) {
    for (std::size_t i = 0; i < from.size(); ++i)
      if (from[i] == e->column) return to[i];
    return e;
  }
  if (e->args.empty()) return e;
  BExpr c = *e;
  for (auto& a : c.args) a = substitute(a, from, to);
  return make(std::move(c));
}

PlanPtr rv(const PlanPtr& p, Conjuncts pending);

/// Reviews the subquery plans nested in an expression.
BExprPtr rx(const BExprPtr& e) {
  if (!e) return e;
  if (e->kind != BKind::Subquery && e->args.empty()) return e;
  BExpr c = *e;
  for (auto& a : c.args) a = rx(a);
  if (c.query) c.query = rv(c.query, {});
  return make(std::move(c));
}

PlanPtr wrap(PlanPtr node, const Conjuncts& cs) {
  if (cs.empty()) return node;
  PlanNode f;
  f.kind = NodeKind::Filter;
  f.columns = node->columns;
  f.names = node->names;
  f.domains = node->domains;
  f.predicate = conjoin(cs);
  f.children = {std::move(node)};
  return make(std::move(f));
}

const char* flip(const std::string& op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  if (op == ">=") return "<=";
  return nullptr;
}

bool comparison(const std::string& op) {
  return op == "=" || op == "<>" || op == "<" || op == "<=" || op == ">" || op == ">=";
}

/// `col op literal` (normalised so the column is on the left) or `col IS [NOT] NULL`.
BExprPtr simple_filter(const BExprPtr& e) {
  if (e->kind == BKind::IsNull && e->args[0]->kind == BKind::Column) return e;
  if (e->kind != BKind::Binary || !comparison(e->op)) return nullptr;
  const auto& a = e->args[0];
  const auto& b = e->args[1];
  if (a->kind == BKind::Column && b->kind == BKind::Literal) return e;
  if (a->kind == BKind::Literal && b->kind == BKind::Column) {
    BExpr c = *e;
    if (const char* f = flip(e->op)) c.op = f;
    c.args = {b, a};
    return make(std::move(c));
  }
  return nullptr;
}

PlanPtr review_scan(const PlanNode& scan, Conjuncts pending) {
  const std::set<Uid> own = outputs(scan);
  static const IndexKind order[] = {IndexKind::Primary, IndexKind::Unique, IndexKind::Foreign, IndexKind::Plain};
  for (IndexKind kind : order) {
    for (const IndexInfo& idx : scan.indexes) {
      if (idx.kind != kind || idx.columns.empty()) continue;
      std::vector<BExprPtr> key;
      std::vector<std::size_t> taken;
      auto match = [&](Uid out) {
        for (std::size_t i = 0; i < pending.size(); ++i) {
          if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
          const BExpr& c = *pending[i];
          if (c.kind != BKind::Binary || c.op != "=") continue;
          for (int side = 0; side < 2; ++side) {
            const BExprPtr& lhs = c.args[side];
            const BExprPtr& rhs = c.args[1 - side];
            if (lhs->kind != BKind::Column || lhs->column != out) continue;
            std::set<Uid> r;
            refs(*rhs, r);
            if (intersects(r, own) || has_aggregate(*rhs)) continue;
            key.push_back(rhs);
            taken.push_back(i);
            return true;
          }
        }
        return false;
      };
      for (Uid col : idx.columns) {
        auto at = std::find(scan.base_columns.begin(), scan.base_columns.end(), col);
        if (at == scan.base_columns.end() || !match(scan.columns[at - scan.base_columns.begin()])) break;
      }
      if (key.size() != idx.columns.size()) continue;
      PlanNode seek = scan;
      seek.kind = NodeKind::IndexSeek;
      seek.index = idx.index;
      seek.key = key;
      Conjuncts rest;
      for (std::size_t i = 0; i < pending.size(); ++i)
        if (std::find(taken.begin(), taken.end(), i) == taken.end()) rest.push_back(pending[i]);
      return wrap(make(std::move(seek)), rest);
    }
  }
  return wrap(make(scan), pending);
}

PlanPtr review_rest(const PlanNode& node, const Conjuncts& pending) {
  PlanNode n = node;
  Conjuncts rest;
  for (const BExprPtr& c : pending) {
    BExprPtr f = simple_filter(c);
    std::size_t at = n.columns.size();
    if (f) at = std::find(n.columns.begin(), n.columns.end(), f->args[0]->column) - n.columns.begin();
    if (!f || at >= n.rest.columns.size()) {
      rest.push_back(c);
      continue;
    }
    auto& target = n.rest.columns[at].using_column.is_null() ? n.rest.remote_filters : n.rest.local_filters;
    if (std::none_of(target.begin(), target.end(), [&](const BExprPtr& x) { return expr_equal(*x, *f); }))
      target.push_back(f);
  }
  return wrap(make(std::move(n)), rest);
}

bool pushable_aggregate(const PlanNode& agg, const PlanNode& rest) {
  if (rest.kind != NodeKind::RestScan || rest.rest.want_keys) return false;
  for (const auto& call : agg.exprs) {
    if (call->flag) continue;
    const BExpr& a = *call->args[0];
    if (a.kind != BKind::Column) return false;
    auto at = std::find(rest.columns.begin(), rest.columns.end(), a.column);
    if (at - rest.columns.begin() >= static_cast<std::ptrdiff_t>(rest.rest.columns.size())) return false;
    if (!rest.rest.columns[at - rest.columns.begin()].using_column.is_null()) return false;
  }
  return true;
}

PlanPtr rv(const PlanPtr& p, Conjuncts pending) {
  PlanNode n = *p;
  for (auto& e : n.exprs) e = rx(e);
  for (auto& e : n.key) e = rx(e);
  for (auto& [e, d] : n.order) e = rx(e);
  for (auto& e : pending) e = rx(e);

  switch (n.kind) {
    case NodeKind::Filter: {
      Conjuncts own;
      split(rx(n.predicate), own);
      own.insert(own.end(), pending.begin(), pending.end());
      return rv(n.children[0], std::move(own));
    }
    case NodeKind::Order:
      n.children[0] = rv(n.children[0], std::move(pending));
      return make(std::move(n));
    case NodeKind::Project:
    case NodeKind::ViewInstance: {
      Conjuncts down, stay;
      const std::set<Uid> own = outputs(n);
      const bool simple = std::none_of(n.exprs.begin(), n.exprs.end(),
                                       [](const BExprPtr& e) { return has_subquery(*e) || has_aggregate(*e); });
      for (const auto& c : pending) {
        std::set<Uid> r;
        refs(*c, r);
        if (simple && !(has_subquery(*c) && intersects(r, own)))
          down.push_back(substitute(c, n.columns, n.exprs));
        else
          stay.push_back(c);
      }
      n.children[0] = rv(n.children[0], std::move(down));
      return wrap(make(std::move(n)), stay);
    }
    case NodeKind::Aggregate: {
      PlanPtr child = rv(n.children[0], {});
      if (pushable_aggregate(n, *child)) {
        PlanNode r = *child;
        r.rest.aggregates = n.exprs;
        n.remote_aggregate = true;
        child = make(std::move(r));
      } else {
        n.remote_aggregate = false;
        if (child->kind == NodeKind::RestScan && !child->rest.aggregates.empty()) {
          PlanNode r = *child;
          r.rest.aggregates.clear();
          child = make(std::move(r));
        }
      }
      n.children[0] = child;
      return wrap(make(std::move(n)), pending);
    }
    case NodeKind::Product: {
      const std::set<Uid> left = outputs(*n.children[0]);
      const std::set<Uid> right = outputs(*n.children[1]);
      std::set<Uid> both = left;
      both.insert(right.begin(), right.end());
      Conjuncts l, r, stay;
      for (const auto& c : pending) {
        std::set<Uid> cr;
        refs(*c, cr);
        if (subset_within(cr, both, left))
          l.push_back(c);
        else if (subset_within(cr, both, right))
          r.push_back(c);
        else
          stay.push_back(c);
      }
      n.children[0] = rv(n.children[0], std::move(l));
      n.children[1] = rv(n.children[1], std::move(r));
      return wrap(make(std::move(n)), stay);
    }
    case NodeKind::TableScan:
      return review_scan(n, std::move(pending));
    case NodeKind::RestScan:
      return review_rest(n, pending);
    case NodeKind::IndexSeek:
    case NodeKind::Unit:
      return wrap(make(std::move(n)), pending);
  }
  return wrap(make(std::move(n)), pending);
}

/// Records which table columns each scan reads and which remote columns
/// each RestScan fetches.
PlanPtr annotate(const PlanPtr& p, const std::set<Uid>& referenced) {
  PlanNode n = *p;
  for (auto& c : n.children) c = annotate(c, referenced);
  if (n.kind == NodeKind::TableScan || n.kind == NodeKind::IndexSeek) {
    n.used.clear();
    for (std::size_t i = 0; i < n.columns.size(); ++i)
      if (referenced.count(n.columns[i]) && !n.base_columns[i].is_null()) n.used.push_back(n.base_columns[i]);
  }
  if (n.kind == NodeKind::RestScan) {
    n.rest.fetch.clear();
    if (n.rest.aggregates.empty())
      for (std::size_t i = 0; i < n.rest.columns.size(); ++i)
        if (n.rest.columns[i].using_column.is_null() && (referenced.count(n.columns[i]) || n.rest.want_keys))
          n.rest.fetch.push_back(n.rest.columns[i].name);
  }
  return make(std::move(n));
}

bool exprs_equal(const std::vector<BExprPtr>& a, const std::vector<BExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!expr_equal(*a[i], *b[i])) return false;
  return true;
}

std::string expr_text(const BExpr& e) {
  switch (e.kind) {
    case BKind::Literal: return e.value.to_sql();
    case BKind::Column: return e.name + "#" + std::to_string(e.column.value() - Uid::kHeapBase);
    case BKind::Unary: return "(" + e.op + " " + expr_text(*e.args[0]) + ")";
    case BKind::Binary: return "(" + expr_text(*e.args[0]) + " " + e.op + " " + expr_text(*e.args[1]) + ")";
    case BKind::IsNull: return "(" + expr_text(*e.args[0]) + (e.flag ? " IS NOT NULL)" : " IS NULL)");
    case BKind::Cast: return "CAST(" + expr_text(*e.args[0]) + " AS " + e.domain.sql() + ")";
    case BKind::Aggregate: return std::string(agg_name(e.agg)) + "(" + (e.flag ? "*" : expr_text(*e.args[0])) + ")";
    case BKind::Subquery: return e.correlated ? "(correlated subquery)" : "(subquery)";
    case BKind::Case: {
      std::string s = "CASE";
      std::size_t i = 0;
      for (; i + 1 < e.args.size(); i += 2) s += " WHEN " + expr_text(*e.args[i]) + " THEN " + expr_text(*e.args[i + 1]);
      if (e.flag) s += " ELSE " + expr_text(*e.args.back());
      return s + " END";
    }
  }
  return "?";
}

void explain_into(const PlanNode& p, int depth, std::ostringstream& os) {
  os << std::string(depth * 2, ' ') << node_kind_name(p.kind);
  auto list = [&](const std::vector<BExprPtr>& es, const char* sep) {
    for (std::size_t i = 0; i < es.size(); ++i) os << (i ? sep : "") << expr_text(*es[i]);
  };
  switch (p.kind) {
    case NodeKind::Filter: os << " " << expr_text(*p.predicate); break;
    case NodeKind::IndexSeek: os << " key "; list(p.key, ", "); break;
    case NodeKind::Aggregate:
      os << " ";
      list(p.exprs, ", ");
      if (p.remote_aggregate) os << " remote";
      break;
    case NodeKind::Order:
      for (std::size_t i = 0; i < p.order.size(); ++i)
        os << (i ? ", " : " ") << expr_text(*p.order[i].first) << (p.order[i].second ? " DESC" : "");
      break;
    case NodeKind::RestScan:
      if (!p.rest.local_filters.empty()) { os << " local "; list(p.rest.local_filters, " AND "); }
      if (!p.rest.remote_filters.empty()) { os << " remote "; list(p.rest.remote_filters, " AND "); }
      if (!p.rest.aggregates.empty()) { os << " registers "; list(p.rest.aggregates, ", "); }
      break;
    default: break;
  }
  os << " [";
  for (std::size_t i = 0; i < p.names.size(); ++i) os << (i ? ", " : "") << p.names[i];
  os << "]\n";
  for (const auto& c : p.children) explain_into(*c, depth + 1, os);
}

}  // namespace

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Unit: return "Unit";
    case NodeKind::TableScan: return "TableScan";
    case NodeKind::IndexSeek: return "IndexSeek";
    case NodeKind::Filter: return "Filter";
    case NodeKind::Project: return "Project";
    case NodeKind::ViewInstance: return "ViewInstance";
    case NodeKind::Order: return "Order";
    case NodeKind::Aggregate: return "Aggregate";
    case NodeKind::Product: return "Product";
    case NodeKind::RestScan: return "RestScan";
  }
  return "?";
}

PlanPtr review(const PlanPtr& plan) {
  PlanPtr p = rv(plan, {});
  std::set<Uid> referenced(p->columns.begin(), p->columns.end());
  plan_refs(*p, referenced);
  return annotate(p, referenced);
}

bool expr_equal(const BExpr& a, const BExpr& b) {
  if (a.kind != b.kind || !(a.domain == b.domain) || !(a.value == b.value) || a.column != b.column ||
      a.name != b.name || a.op != b.op || a.flag != b.flag || a.agg != b.agg || a.correlated != b.correlated)
    return false;
  if (!exprs_equal(a.args, b.args)) return false;
  if (!a.query || !b.query) return !a.query && !b.query;
  return plan_equal(*a.query, *b.query);
}

bool plan_equal(const PlanNode& a, const PlanNode& b) {
  if (a.kind != b.kind || a.columns != b.columns || a.names != b.names || a.domains != b.domains ||
      a.object != b.object || a.role != b.role || a.base_columns != b.base_columns || a.used != b.used ||
      a.rowid != b.rowid || a.index != b.index || a.remote_aggregate != b.remote_aggregate ||
      a.children.size() != b.children.size() || a.indexes.size() != b.indexes.size())
    return false;
  for (std::size_t i = 0; i < a.indexes.size(); ++i)
    if (a.indexes[i].index != b.indexes[i].index || a.indexes[i].columns != b.indexes[i].columns) return false;
  if (!exprs_equal(a.key, b.key) || !exprs_equal(a.exprs, b.exprs)) return false;
  if (!a.predicate != !b.predicate || (a.predicate && !expr_equal(*a.predicate, *b.predicate))) return false;
  if (a.order.size() != b.order.size()) return false;
  for (std::size_t i = 0; i < a.order.size(); ++i)
    if (a.order[i].second != b.order[i].second || !expr_equal(*a.order[i].first, *b.order[i].first)) return false;
  const RestInfo& x = a.rest;
  const RestInfo& y = b.rest;
  if (x.url != y.url || x.using_table != y.using_table || x.using_columns != y.using_columns || x.fetch != y.fetch ||
      x.want_keys != y.want_keys || x.columns.size() != y.columns.size() ||
      !exprs_equal(x.local_filters, y.local_filters) || !exprs_equal(x.remote_filters, y.remote_filters) ||
      !exprs_equal(x.aggregates, y.aggregates))
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!plan_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

std::string explain(const PlanNode& p) {
  std::ostringstream os;
  explain_into(p, 0, os);
  return os.str();
}

std::string remote_sql(const BExpr& e) {
  switch (e.kind) {
    case BKind::Literal: return e.value.to_sql();
    case BKind::Column: return quote_identifier(e.name);
    case BKind::IsNull: return remote_sql(*e.args[0]) + (e.flag ? " IS NOT NULL" : " IS NULL");
    case BKind::Binary: return remote_sql(*e.args[0]) + " " + e.op + " " + remote_sql(*e.args[1]);
    default: throw SqlError("expression cannot be sent to a contributor");
  }
}

}  // namespace pyrlite::sql
