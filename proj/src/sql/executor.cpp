#include <algorithm>

#include "pyrlite/sql/plan.hpp"

namespace pyrlite::sql {

struct Executor::Env {
  const std::vector<Uid>* columns;
  const Tuple* row;
  const Env* outer;
};

namespace {

const Value& lookup(const Executor::Env* env, Uid uid);

std::optional<bool> truth(const Value& v) {
  if (v.is_null()) return std::nullopt;
  if (v.kind() != DomainKind::Boolean) throw SqlError("condition is not boolean: " + v.to_sql());
  return v.as_bool();
}

}  // namespace

std::vector<Tuple> ResultSet::to_vector() const {
  std::vector<Tuple> out;
  out.reserve(rows.size());
  for (const auto& [pos, row] : rows) out.push_back(row);
  return out;
}

Executor::Executor(Transaction& tx, RemoteSource* remote) : tx_(tx), remote_(remote) {}

ResultSet Executor::run(const PlanNode& plan) {
  ResultSet rs;
  rs.columns = plan.names;
  rs.domains = plan.domains;
  for (auto& t : exec(plan, nullptr)) rs.rows = rs.rows.push_back(std::move(t));
  return rs;
}

std::vector<Tuple> Executor::rows(const PlanNode& plan) { return exec(plan, nullptr); }

Value Executor::evaluate(const BExpr& e) { return eval(e, nullptr); }

Value Executor::evaluate(const BExpr& e, const std::vector<Uid>& columns, const Tuple& row) {
  Env env{&columns, &row, nullptr};
  return eval(e, &env);
}

namespace {

const Value& lookup(const Executor::Env* env, Uid uid) {
  for (; env; env = env->outer)
    for (std::size_t i = 0; i < env->columns->size(); ++i)
      if ((*env->columns)[i] == uid) return (*env->row)[i];
  throw SqlError("internal: unbound column #" + std::to_string(uid.value()));
}

}  // namespace

std::vector<Tuple> Executor::exec(const PlanNode& p, const Env* outer) {
  std::vector<Tuple> out;
  const Snapshot& s = tx_.state();
  auto scan_tuple = [&](const Row& row) {
    Tuple t;
    t.reserve(p.columns.size());
    for (std::size_t i = 0; i < p.columns.size(); ++i)
      t.push_back(p.base_columns[i].is_null() ? Value::integer(row.uid.value()) : row.get(p.base_columns[i]));
    return t;
  };
  switch (p.kind) {
    case NodeKind::Unit:
      out.emplace_back();
      return out;
    case NodeKind::TableScan: {
      const TableData* data = s.table_data(p.object);
      if (!data) throw SchemaError("table no longer exists");
      tx_.note_read(p.object, p.used, std::nullopt);
      for (const auto& [uid, row] : data->rows) out.push_back(scan_tuple(*row));
      return out;
    }
    case NodeKind::IndexSeek: {
      const TableData* data = s.table_data(p.object);
      if (!data) throw SchemaError("table no longer exists");
      std::vector<Value> key;
      for (const auto& k : p.key) key.push_back(eval(*k, outer));
      tx_.note_index_read(p.object, p.index, key);
      std::vector<Uid> hits;
      if (std::none_of(key.begin(), key.end(), [](const Value& v) { return v.is_null(); })) {
        if (const IndexTree* tree = data->indexes.find(p.index)) {
          IndexKey probe{key, Uid{std::numeric_limits<std::int64_t>::min()}};
          for (auto b = tree->seek(probe); b; b = b->next()) {
            const auto& vals = b->key().values;
            bool same = true;
            for (std::size_t i = 0; i < key.size() && same; ++i) {
              auto c = compare(vals[i], key[i]);
              same = c && *c == 0;
            }
            if (!same) break;
            hits.push_back(b->key().row);
          }
        }
      }
      // The seek tested the key columns of each hit, so they count as read.
      std::vector<Uid> read = p.used;
      if (const SchemaObject* ix = s.object(p.index))
        for (Uid c : ix->columns)
          if (std::find(read.begin(), read.end(), c) == read.end()) read.push_back(c);
      tx_.note_read(p.object, read, hits);
      for (Uid r : hits)
        if (RowPtr row = s.row(p.object, r)) out.push_back(scan_tuple(*row));
      return out;
    }
    case NodeKind::Filter: {
      for (auto& t : exec(*p.children[0], outer)) {
        Env env{&p.columns, &t, outer};
        if (truth(eval(*p.predicate, &env)).value_or(false)) out.push_back(std::move(t));
      }
      return out;
    }
    case NodeKind::Project:
    case NodeKind::ViewInstance: {
      const PlanNode& child = *p.children[0];
      for (const auto& t : exec(child, outer)) {
        Env env{&child.columns, &t, outer};
        Tuple r;
        r.reserve(p.exprs.size());
        for (const auto& e : p.exprs) r.push_back(eval(*e, &env));
        out.push_back(std::move(r));
      }
      return out;
    }
    case NodeKind::Order: {
      auto input = exec(*p.children[0], outer);
      std::vector<std::pair<std::vector<Value>, std::size_t>> keyed;
      for (std::size_t i = 0; i < input.size(); ++i) {
        Env env{&p.columns, &input[i], outer};
        std::vector<Value> k;
        for (const auto& [e, desc] : p.order) k.push_back(eval(*e, &env));
        keyed.emplace_back(std::move(k), i);
      }
      // NULLs sort last whatever the direction.
      std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
        for (std::size_t i = 0; i < p.order.size(); ++i) {
          const Value& x = a.first[i];
          const Value& y = b.first[i];
          if (x.is_null() || y.is_null()) {
            if (x.is_null() == y.is_null()) continue;
            return y.is_null();
          }
          auto c = *compare(x, y);
          if (c == 0) continue;
          return p.order[i].second ? c > 0 : c < 0;
        }
        return false;
      });
      for (auto& [k, i] : keyed) out.push_back(std::move(input[i]));
      return out;
    }
    case NodeKind::Aggregate: {
      const PlanNode& child = *p.children[0];
      std::vector<AggRegister> regs;
      if (p.remote_aggregate) {
        regs = remote_registers(child, outer);
      } else {
        for (const auto& c : p.exprs) regs.push_back(empty_register(c->agg));
        for (const auto& t : exec(child, outer)) {
          Env env{&child.columns, &t, outer};
          for (std::size_t i = 0; i < p.exprs.size(); ++i) {
            const BExpr& call = *p.exprs[i];
            accumulate(regs[i], call.flag ? Value{} : eval(*call.args[0], &env), call.flag);
          }
        }
      }
      Tuple t;
      for (const auto& r : regs) t.push_back(finalize(r));
      out.push_back(std::move(t));
      return out;
    }
    case NodeKind::Product: {
      auto left = exec(*p.children[0], outer);
      auto right = exec(*p.children[1], outer);
      for (const auto& l : left)
        for (const auto& r : right) {
          Tuple t = l;
          t.insert(t.end(), r.begin(), r.end());
          out.push_back(std::move(t));
        }
      return out;
    }
    case NodeKind::RestScan:
      return rest_rows(p, outer);
  }
  return out;
}

namespace {

struct Contributor {
  std::string url;
  std::vector<Value> using_values;
};

}  // namespace

static std::vector<Contributor> contributors(Transaction& tx, const PlanNode& p, const Executor::Env* outer,
                                             const std::function<Value(const BExpr&, const Executor::Env*)>& eval) {
  const RestInfo& r = p.rest;
  std::vector<Contributor> out;
  if (r.using_table.is_null()) {
    out.push_back({r.url, {}});
    return out;
  }
  const TableData* data = tx.state().table_data(r.using_table);
  if (!data) throw SchemaError("using table no longer exists");
  tx.note_read(r.using_table, r.using_columns, std::nullopt);
  for (const auto& [uid, row] : data->rows) {
    Contributor c;
    for (Uid col : r.using_columns) c.using_values.push_back(row->get(col));
    const Value& url = c.using_values.back();
    if (url.is_null()) continue;
    c.url = url.to_string();
    if (!r.local_filters.empty()) {
      Tuple t(p.columns.size());
      for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (r.columns[i].using_column.is_null()) continue;
        auto at = std::find(r.using_columns.begin(), r.using_columns.end(), r.columns[i].using_column);
        t[i] = c.using_values[at - r.using_columns.begin()];
      }
      Executor::Env env{&p.columns, &t, outer};
      bool keep = true;
      for (const auto& f : r.local_filters) {
        Value v = eval(*f, &env);
        keep = keep && !v.is_null() && v.as_bool();
      }
      if (!keep) continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

static RemoteQuery base_query(const RestInfo& r) {
  RemoteQuery q;
  q.user = r.user;
  q.password = r.password;
  for (const auto& name : r.fetch)
    for (const auto& c : r.columns)
      if (c.name == name) q.columns.push_back({c.name, c.domain});
  for (const auto& f : r.remote_filters) q.where += (q.where.empty() ? "" : " AND ") + remote_sql(*f);
  q.want_keys = r.want_keys;
  return q;
}

static std::string offline_message(const std::vector<std::string>& failed, std::size_t total) {
  std::string urls;
  for (const auto& f : failed) urls += (urls.empty() ? "" : ", ") + f;
  return "contributor offline: " + urls + " (" + std::to_string(total - failed.size()) + " of " +
         std::to_string(total) + " contributors available)";
}

std::vector<Tuple> Executor::rest_rows(const PlanNode& p, const Env* outer) {
  const RestInfo& r = p.rest;
  if (!remote_) throw RemoteError("no remote access is configured for RESTViews");
  auto ev = [this](const BExpr& e, const Env* env) { return eval(e, env); };
  const auto sources = contributors(tx_, p, outer, ev);
  RemoteQuery q = base_query(r);

  std::vector<Tuple> out;
  std::vector<std::string> failed;
  std::vector<std::pair<const Contributor*, RemoteResult>> results;
  for (const auto& c : sources) {
    q.url = c.url;
    try {
      results.emplace_back(&c, remote_->fetch(q));
    } catch (const RemoteError& e) {
      // A contributor that answered with an error status is not offline.
      if (e.status() != 0) throw;
      failed.push_back(c.url);
    }
  }
  if (!failed.empty()) throw RemoteError(offline_message(failed, sources.size()), 503);

  for (const auto& [c, res] : results) {
    for (std::size_t k = 0; k < res.rows.size(); ++k) {
      Tuple t;
      t.reserve(p.columns.size());
      for (std::size_t i = 0; i < r.columns.size(); ++i) {
        const RestColumn& col = r.columns[i];
        if (!col.using_column.is_null()) {
          auto at = std::find(r.using_columns.begin(), r.using_columns.end(), col.using_column);
          t.push_back(c->using_values[at - r.using_columns.begin()]);
          continue;
        }
        auto f = std::find(r.fetch.begin(), r.fetch.end(), col.name);
        t.push_back(f == r.fetch.end() ? Value{} : res.rows[k][f - r.fetch.begin()]);
      }
      if (p.columns.size() > r.columns.size()) {
        refs_.push_back({c->url, k < res.keys.size() ? res.keys[k] : std::string(),
                         k < res.etags.size() ? res.etags[k] : std::string(), c->using_values});
        t.push_back(Value::integer(static_cast<std::int64_t>(refs_.size() - 1)));
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<AggRegister> Executor::remote_registers(const PlanNode& p, const Env* outer) {
  const RestInfo& r = p.rest;
  if (!remote_) throw RemoteError("no remote access is configured for RESTViews");
  auto ev = [this](const BExpr& e, const Env* env) { return eval(e, env); };
  const auto sources = contributors(tx_, p, outer, ev);
  RemoteQuery q = base_query(r);
  q.columns.clear();
  std::vector<AggRegister> regs;
  for (const auto& call : r.aggregates) {
    RemoteAggregate a;
    a.kind = call->agg;
    if (!call->flag) {
      a.column = call->args[0]->name;
      a.domain = call->args[0]->domain;
    }
    q.aggregates.push_back(a);
    regs.push_back(empty_register(call->agg));
  }
  std::vector<std::string> failed;
  for (const auto& c : sources) {
    q.url = c.url;
    try {
      RemoteResult res = remote_->fetch(q);
      if (res.registers.size() != regs.size()) throw RemoteError(c.url + " returned the wrong registers", 502);
      for (std::size_t i = 0; i < regs.size(); ++i) regs[i] = merge(regs[i], res.registers[i]);
    } catch (const RemoteError& e) {
      if (e.status() != 0) throw;
      failed.push_back(c.url);
    }
  }
  if (!failed.empty()) throw RemoteError(offline_message(failed, sources.size()), 503);
  return regs;
}

Value Executor::eval(const BExpr& e, const Env* env) {
  switch (e.kind) {
    case BKind::Literal: return e.value;
    case BKind::Column: return lookup(env, e.column);
    case BKind::Unary: {
      Value v = eval(*e.args[0], env);
      if (e.op == "NOT") {
        auto t = truth(v);
        return t ? Value::boolean(!*t) : Value{};
      }
      if (e.op == "+") return v;
      return negate(v);
    }
    case BKind::Binary: {
      const std::string& op = e.op;
      if (op == "AND" || op == "OR") {
        const bool is_and = op == "AND";
        auto l = truth(eval(*e.args[0], env));
        if (l && *l != is_and) return Value::boolean(*l);
        auto r = truth(eval(*e.args[1], env));
        if (r && *r != is_and) return Value::boolean(*r);
        if (!l || !r) return {};
        return Value::boolean(is_and);
      }
      Value a = eval(*e.args[0], env);
      Value b = eval(*e.args[1], env);
      if (op == "+") return add(a, b);
      if (op == "-") return subtract(a, b);
      if (op == "*") return multiply(a, b);
      if (op == "/") return divide(a, b);
      if (op == "||") return concat(a, b);
      auto c = compare(a, b);
      if (!c) return {};
      if (op == "=") return Value::boolean(*c == 0);
      if (op == "<>") return Value::boolean(*c != 0);
      if (op == "<") return Value::boolean(*c < 0);
      if (op == "<=") return Value::boolean(*c <= 0);
      if (op == ">") return Value::boolean(*c > 0);
      if (op == ">=") return Value::boolean(*c >= 0);
      throw SqlError("unknown operator " + op);
    }
    case BKind::Case: {
      std::size_t i = 0;
      for (; i + 1 < e.args.size(); i += 2)
        if (truth(eval(*e.args[i], env)).value_or(false)) return eval(*e.args[i + 1], env);
      return e.flag ? eval(*e.args.back(), env) : Value{};
    }
    case BKind::Cast: return cast(eval(*e.args[0], env), e.domain);
    case BKind::IsNull: return Value::boolean(eval(*e.args[0], env).is_null() != e.flag);
    case BKind::Aggregate: throw SqlError("internal: aggregate evaluated outside its node");
    case BKind::Subquery: {
      const std::vector<Tuple>* rows = nullptr;
      std::vector<Tuple> fresh;
      if (e.correlated) {
        fresh = exec(*e.query, env);
        rows = &fresh;
      } else {
        for (const auto& [q, r] : memo_)
          if (q == e.query.get()) rows = &r;
        if (!rows) {
          memo_.emplace_back(e.query.get(), exec(*e.query, nullptr));
          rows = &memo_.back().second;
        }
      }
      if (rows->empty()) return {};
      if (rows->size() > 1)
        throw SqlError("cardinality violation: scalar subquery returned " + std::to_string(rows->size()) + " rows");
      return (*rows)[0][0];
    }
  }
  return {};
}

}  // namespace pyrlite::sql
