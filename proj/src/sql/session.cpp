#include "pyrlite/sql/session.hpp"

#include <algorithm>

#include "pyrlite/sql/json.hpp"

namespace pyrlite::sql {

namespace {

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

std::uint32_t privilege_bit(const std::string& name) {
  if (name == "SELECT") return kSelect;
  if (name == "INSERT") return kInsert;
  if (name == "UPDATE") return kUpdate;
  if (name == "DELETE") return kDelete;
  if (name == "USAGE") return kUsage;
  if (name == "ALL") return kSelect | kInsert | kUpdate | kDelete;
  return 0;
}

void require_owner(const Snapshot& s, Uid user, Uid role, Uid object, const std::string& what) {
  if (!check_privilege(s, user, role, object, kOwner)) throw AuthorizationError("permission denied: you do not own " + what);
}

void require_db_owner(const Snapshot& s, Uid user, const char* verb) {
  if (s.owner != user) throw AuthorizationError(std::string("permission denied: only the database owner may ") + verb);
}

Uid relation(const Snapshot& s, const std::string& name) {
  auto uid = s.lookup(Namespace::Relation, name);
  if (!uid) throw SchemaError("unknown table or view " + name);
  return *uid;
}

Uid column_of(const Snapshot& s, Uid table, const std::string& name) {
  auto c = s.column_named(table, name);
  if (!c) throw SchemaError("unknown column " + name + " in " + s.object(table)->name);
  return *c;
}

/// Next free generated constraint name: T_PK, T_UQ1, T_FK2, ...
std::string constraint_name(const Snapshot& s, Uid table, IndexKind kind) {
  const std::string& t = s.object(table)->name;
  if (kind == IndexKind::Primary) return t + "_PK";
  const char* tag = kind == IndexKind::Unique ? "_UQ" : kind == IndexKind::Foreign ? "_FK" : kind == IndexKind::Check ? "_CK" : "_IX";
  for (int n = 1;; ++n) {
    std::string name = t + tag + std::to_string(n);
    if (!s.index_named(table, name)) return name;
  }
}

std::vector<TableConstraint> column_constraints(const ColumnDef& c) {
  std::vector<TableConstraint> out;
  if (c.primary) out.push_back({"", IndexKind::Primary, {c.name}, std::nullopt, {}});
  if (c.unique) out.push_back({"", IndexKind::Unique, {c.name}, std::nullopt, {}});
  if (c.references) out.push_back({"", IndexKind::Foreign, {c.name}, c.references, {}});
  if (c.check) out.push_back({"", IndexKind::Check, {}, std::nullopt, c.check});
  return out;
}

class Runner {
 public:
  Runner(Transaction& tx, Uid role, RemoteSource* remote) : tx_(tx), role_(role), remote_(remote) {}

  StatementResult operator()(const CreateTable& c) {
    const Snapshot& s = tx_.state();
    if (s.lookup(Namespace::Relation, c.name)) throw SchemaError("a table or view named " + c.name + " already exists");
    const Uid t = tx_.stage(phys::Table{c.name, c.metadata});
    std::vector<TableConstraint> constraints;
    std::int32_t position = 0;
    for (const ColumnDef& col : c.columns) {
      add_column(t, col, position++);
      auto more = column_constraints(col);
      constraints.insert(constraints.end(), more.begin(), more.end());
    }
    constraints.insert(constraints.end(), c.constraints.begin(), c.constraints.end());
    for (const auto& k : constraints) add_constraint(t, k);
    return {};
  }

  StatementResult operator()(const CreateView& v) {
    if (tx_.state().lookup(Namespace::Relation, v.name))
      throw SchemaError("a table or view named " + v.name + " already exists");
    Binder b(tx_, role_);
    if (!v.is_rest()) {
      PlanPtr plan = b.select(*v.query);
      if (!v.columns.empty() && v.columns.size() != plan->columns.size())
        throw SchemaError("view " + v.name + " names " + std::to_string(v.columns.size()) + " columns but its query has " +
                          std::to_string(plan->columns.size()));
      tx_.stage(phys::View{v.name, v.columns, to_sql(*v.query), v.metadata});
      return {};
    }
    phys::RestView r{v.name, {}, Uid{}, v.metadata};
    for (const auto& [name, type] : v.rest_columns) r.columns.emplace_back(name, b.resolve_type(type));
    if (!v.using_table.empty()) {
      const Uid u = relation(tx_.state(), v.using_table);
      const SchemaObject& ut = tx_.state().require(u, ObjectKind::Table);
      if (ut.columns.empty()) throw SchemaError("using table " + ut.name + " has no columns");
      r.using_table = u;
    } else if (!v.metadata.get("URL")) {
      throw SchemaError("RESTView " + v.name + " needs a url or a using table");
    }
    tx_.stage(std::move(r));
    return {};
  }

  StatementResult operator()(const CreateRole& r) {
    require_db_owner(tx_.state(), tx_.user(), "create roles");
    if (tx_.state().lookup(Namespace::Role, r.name)) throw SchemaError("role " + r.name + " already exists");
    tx_.stage(phys::Role{r.name});
    return {};
  }

  StatementResult operator()(const CreateUser& u) {
    require_db_owner(tx_.state(), tx_.user(), "create users");
    if (tx_.state().lookup(Namespace::User, u.name)) throw SchemaError("user " + u.name + " already exists");
    tx_.stage(phys::User{u.name, hash_password(u.name, u.password.value_or(""))});
    return {};
  }

  StatementResult operator()(const CreateDomain& d) {
    if (tx_.state().lookup(Namespace::Domain, d.name)) throw SchemaError("domain " + d.name + " already exists");
    Binder b(tx_, role_);
    Domain base = b.resolve_type(d.type);
    tx_.stage(phys::DomainDef{d.name, base});
    return {};
  }

  StatementResult operator()(const CreateIndex& i) {
    const Snapshot& s = tx_.state();
    const Uid t = relation(s, i.table);
    s.require(t, ObjectKind::Table);
    require_owner(s, tx_.user(), role_, t, "table " + i.table);
    if (s.index_named(t, i.name)) throw SchemaError("index " + i.name + " already exists");
    std::vector<Uid> cols;
    for (const auto& c : i.columns) cols.push_back(column_of(s, t, c));
    phys::Index idx;
    idx.table = t;
    idx.name = i.name;
    idx.kind = i.unique ? IndexKind::Unique : IndexKind::Plain;
    idx.columns = cols;
    tx_.stage(std::move(idx));
    return {};
  }

  StatementResult operator()(const Grant& g) {
    const Snapshot& s = tx_.state();
    if (g.object.empty()) return grant_roles(g);
    Uid object;
    if (auto r = s.lookup(Namespace::Relation, g.object)) {
      object = *r;
    } else if (auto r2 = s.lookup(Namespace::Role, g.object)) {
      object = *r2;
    } else if (auto d = s.lookup(Namespace::Domain, g.object)) {
      object = *d;
    } else {
      throw SchemaError("unknown object " + g.object);
    }
    require_owner(s, tx_.user(), role_, object, g.object);
    std::vector<Uid> grantees;
    for (const auto& name : g.grantees) {
      if (name == "PUBLIC") {
        grantees.push_back(builtin::kPublic);
      } else if (auto r = s.lookup(Namespace::Role, name)) {
        grantees.push_back(*r);
      } else if (s.lookup(Namespace::User, name)) {
        throw SchemaError("object privileges are granted to roles: grant a role to user " + name + " instead");
      } else {
        throw SchemaError("unknown role " + name);
      }
    }
    for (const auto& p : g.privileges) {
      const std::uint32_t bit = privilege_bit(p.name);
      if (!bit) throw SchemaError("unknown privilege " + p.name);
      std::vector<Uid> targets;
      if (p.columns.empty()) {
        targets.push_back(object);
      } else {
        for (const auto& c : p.columns) targets.push_back(column_of(s, object, c));
      }
      for (Uid target : targets)
        for (Uid grantee : grantees) tx_.stage(phys::Grant{bit, target, grantee, g.revoke});
    }
    return {};
  }

  StatementResult operator()(const Insert& ins) {
    const Snapshot& s = tx_.state();
    const Uid t = relation(s, ins.table);
    const SchemaObject& obj = *s.object(t);
    if (obj.kind == ObjectKind::RestView) return rest_insert(obj, ins);
    if (obj.kind != ObjectKind::Table) throw SchemaError("cannot insert into " + ins.table);
    std::vector<Uid> cols;
    if (ins.columns.empty()) {
      cols = obj.columns;
    } else {
      for (const auto& c : ins.columns) cols.push_back(column_of(s, t, c));
    }
    std::vector<Tuple> rows = source_rows(ins, cols.size());
    for (auto& row : rows) {
      Fields f;
      for (std::size_t i = 0; i < cols.size(); ++i) f.emplace_back(cols[i], std::move(row[i]));
      tx_.insert(t, std::move(f));
    }
    StatementResult r;
    r.affected = static_cast<std::int64_t>(rows.size());
    return r;
  }

  StatementResult operator()(const Update& u) {
    Binder b(tx_, role_);
    auto scope = b.table(u.table, u.alias, u.where);
    const Snapshot& s = tx_.state();
    const Uid t = relation(s, u.table);
    const SchemaObject& obj = *s.object(t);
    const std::string q = u.alias.empty() ? obj.name : u.alias;
    std::vector<std::pair<std::size_t, BExprPtr>> sets;  // output position, value
    for (const auto& [name, e] : u.sets) {
      auto at = std::find(scope.plan->names.begin(), scope.plan->names.end(), name);
      if (at == scope.plan->names.end() || name == "$ROWID") throw SchemaError("unknown column " + name + " in " + obj.name);
      sets.emplace_back(at - scope.plan->names.begin(), b.expression(scope.plan, q, *e));
    }
    PlanPtr plan = review(scope.plan);
    Executor ex(tx_, remote_);
    const auto rows = ex.rows(*plan);
    const std::size_t rowid = std::find(plan->columns.begin(), plan->columns.end(), scope.rowid) - plan->columns.begin();

    if (obj.kind == ObjectKind::RestView) return rest_update(obj, *plan, ex, rows, rowid, sets);

    std::vector<std::pair<Uid, Fields>> changes;
    for (const auto& row : rows) {
      Fields f;
      for (const auto& [pos, e] : sets)
        f.emplace_back(obj.columns[pos], ex.evaluate(*e, plan->columns, row));
      changes.emplace_back(Uid{*row[rowid].to_int64()}, std::move(f));
    }
    for (auto& [r, f] : changes) tx_.update(t, r, std::move(f));
    StatementResult r;
    r.affected = static_cast<std::int64_t>(changes.size());
    return r;
  }

  StatementResult operator()(const Delete& d) {
    Binder b(tx_, role_);
    auto scope = b.table(d.table, d.alias, d.where);
    const Snapshot& s = tx_.state();
    const Uid t = relation(s, d.table);
    const SchemaObject& obj = *s.object(t);
    PlanPtr plan = review(scope.plan);
    Executor ex(tx_, remote_);
    const auto rows = ex.rows(*plan);
    const std::size_t rowid = std::find(plan->columns.begin(), plan->columns.end(), scope.rowid) - plan->columns.begin();
    if (obj.kind == ObjectKind::RestView) {
      for (const auto& row : rows) {
        const auto& ref = row_ref(ex, row[rowid]);
        tx_.stage_remote(remote_write(obj, "DELETE", ref.contributor + "/" + ref.key, "", ref.etag));
      }
    } else {
      for (const auto& row : rows)
        if (tx_.state().row(t, Uid{*row[rowid].to_int64()})) tx_.remove(t, Uid{*row[rowid].to_int64()});
    }
    StatementResult r;
    r.affected = static_cast<std::int64_t>(rows.size());
    return r;
  }

  StatementResult operator()(const SelectStatement& sel) {
    Binder b(tx_, role_);
    PlanPtr plan = review(b.select(*sel.query));
    Executor ex(tx_, remote_);
    StatementResult r;
    r.has_rows = true;
    r.rows = ex.run(*plan);
    return r;
  }

  StatementResult operator()(const Drop& d) {
    const Snapshot& s = tx_.state();
    Uid target;
    switch (d.what) {
      case ObjectWord::Table:
      case ObjectWord::View: {
        target = relation(s, d.name);
        const ObjectKind k = s.object(target)->kind;
        const bool ok = d.what == ObjectWord::Table ? k == ObjectKind::Table : k == ObjectKind::View || k == ObjectKind::RestView;
        if (!ok) throw SchemaError(d.name + " is not a " + (d.what == ObjectWord::Table ? "table" : "view"));
        require_owner(s, tx_.user(), role_, target, d.name);
        break;
      }
      case ObjectWord::Role:
      case ObjectWord::User:
      case ObjectWord::Domain: {
        const Namespace ns = d.what == ObjectWord::Role ? Namespace::Role
                             : d.what == ObjectWord::User ? Namespace::User
                                                          : Namespace::Domain;
        auto uid = s.lookup(ns, d.name);
        if (!uid) throw SchemaError(std::string("unknown ") + object_word_name(d.what) + " " + d.name);
        target = *uid;
        if (s.owner != tx_.user()) require_owner(s, tx_.user(), role_, target, d.name);
        break;
      }
      case ObjectWord::Index: {
        target = index_named(d.name);
        require_owner(s, tx_.user(), role_, s.object(target)->table, d.name);
        break;
      }
    }
    tx_.stage(phys::Drop{target});
    return {};
  }

  StatementResult operator()(const Alter& a) {
    const Snapshot& s = tx_.state();
    Uid target;
    switch (a.what) {
      case ObjectWord::Table:
      case ObjectWord::View: target = relation(s, a.name); break;
      case ObjectWord::Role:
      case ObjectWord::User:
      case ObjectWord::Domain: {
        const Namespace ns = a.what == ObjectWord::Role ? Namespace::Role
                             : a.what == ObjectWord::User ? Namespace::User
                                                          : Namespace::Domain;
        auto uid = s.lookup(ns, a.name);
        if (!uid) throw SchemaError(std::string("unknown ") + object_word_name(a.what) + " " + a.name);
        target = *uid;
        break;
      }
      case ObjectWord::Index: target = index_named(a.name); break;
    }
    if (a.action == AlterAction::SetPassword) {
      if (target != tx_.user() && s.owner != tx_.user())
        throw AuthorizationError("permission denied: cannot change the password of " + a.name);
      tx_.stage(phys::Alter{target, AlterOp::SetPassword, hash_password(a.name, a.text), {}});
      return {};
    }
    if (s.owner != tx_.user() || a.what == ObjectWord::Table || a.what == ObjectWord::View)
      require_owner(s, tx_.user(), role_, target, a.name);
    switch (a.action) {
      case AlterAction::AddColumn: {
        const SchemaObject& t = s.require(target, ObjectKind::Table);
        add_column(target, *a.column, static_cast<std::int32_t>(t.columns.size()));
        for (const auto& k : column_constraints(*a.column)) add_constraint(target, k);
        break;
      }
      case AlterAction::AddConstraint: add_constraint(target, *a.constraint); break;
      case AlterAction::DropColumn: tx_.stage(phys::Drop{column_of(s, target, a.text)}); break;
      case AlterAction::DropConstraint: {
        auto idx = s.index_named(target, a.text);
        if (!idx) throw SchemaError("unknown constraint " + a.text + " on " + a.name);
        tx_.stage(phys::Drop{*idx});
        break;
      }
      case AlterAction::Rename: tx_.stage(phys::Alter{target, AlterOp::Rename, a.text, {}}); break;
      case AlterAction::Metadata: tx_.stage(phys::MetadataChange{target, a.metadata}); break;
      case AlterAction::RedefineView: {
        if (s.object(target)->kind != ObjectKind::View) throw SchemaError(a.name + " is not a query view");
        Binder b(tx_, role_);
        PlanPtr plan = b.select(*a.query);
        if (!a.columns.empty() && a.columns.size() != plan->columns.size())
          throw SchemaError("view " + a.name + " names " + std::to_string(a.columns.size()) +
                            " columns but its query has " + std::to_string(plan->columns.size()));
        tx_.stage(phys::Alter{target, AlterOp::RedefineView, to_sql(*a.query), a.columns});
        break;
      }
      case AlterAction::SetPassword: break;
    }
    return {};
  }

  template <class T>
  StatementResult operator()(const T&) {
    throw SqlError("statement not valid here");
  }

 private:
  Uid index_named(const std::string& name) {
    for (const SchemaObject* o : tx_.state().objects_of(ObjectKind::Index))
      if (o->name == name) return o->uid;
    throw SchemaError("unknown index " + name);
  }

  StatementResult grant_roles(const Grant& g) {
    const Snapshot& s = tx_.state();
    for (const auto& p : g.privileges) {
      auto role = s.lookup(Namespace::Role, p.name);
      if (!role) throw SchemaError("unknown role " + p.name);
      if (s.object(*role)->owner != tx_.user() && s.owner != tx_.user())
        throw AuthorizationError("permission denied: you do not own role " + p.name);
      for (const auto& name : g.grantees) {
        Uid grantee;
        if (name == "PUBLIC") {
          grantee = builtin::kPublic;
        } else if (auto u = tx_.state().lookup(Namespace::User, name)) {
          grantee = *u;
        } else if (!g.revoke && s.owner == tx_.user()) {
          // Granting a role introduces the user; a password can be set later.
          grantee = tx_.stage(phys::User{name, hash_password(name, "")});
        } else {
          throw SchemaError("unknown user " + name);
        }
        tx_.stage(phys::Grant{kUsage, *role, grantee, g.revoke});
      }
    }
    return {};
  }

  void add_column(Uid table, const ColumnDef& c, std::int32_t position) {
    if (tx_.state().column_named(table, c.name)) throw SchemaError("duplicate column " + c.name);
    Binder b(tx_, role_);
    phys::Column col;
    col.table = table;
    col.name = c.name;
    col.domain = b.resolve_type(c.type);
    col.position = position;
    col.not_null = c.not_null || c.primary;
    if (c.default_value) {
      Executor ex(tx_, remote_);
      col.default_value = coerce(ex.evaluate(*b.constant(*c.default_value)), col.domain);
    }
    tx_.stage(std::move(col));
  }

  void add_constraint(Uid table, const TableConstraint& k) {
    const Snapshot& s = tx_.state();
    phys::Index idx;
    idx.table = table;
    idx.kind = k.kind;
    idx.name = k.name.empty() ? constraint_name(s, table, k.kind) : k.name;
    if (s.index_named(table, idx.name)) throw SchemaError("constraint " + idx.name + " already exists");
    for (const auto& c : k.columns) idx.columns.push_back(column_of(s, table, c));
    if (k.kind == IndexKind::Primary && s.primary_key(table))
      throw SchemaError("table " + s.object(table)->name + " already has a primary key");
    if (k.kind == IndexKind::Foreign) {
      const ForeignRef& ref = *k.references;
      const Uid parent = relation(s, ref.table);
      s.require(parent, ObjectKind::Table);
      const SchemaObject* target = nullptr;
      if (ref.columns.empty()) {
        target = s.primary_key(parent);
        if (!target) throw SchemaError("table " + ref.table + " has no primary key to reference");
      } else {
        std::vector<Uid> cols;
        for (const auto& c : ref.columns) cols.push_back(column_of(s, parent, c));
        for (Uid i : s.object(parent)->indexes) {
          const SchemaObject* o = s.object(i);
          if (o && (o->index_kind == IndexKind::Primary || o->index_kind == IndexKind::Unique) && o->columns == cols)
            target = o;
        }
        if (!target) throw SchemaError("referenced columns of " + ref.table + " are not a primary or unique key");
      }
      if (target->columns.size() != idx.columns.size())
        throw SchemaError("foreign key " + idx.name + " has " + std::to_string(idx.columns.size()) +
                          " columns but the referenced key has " + std::to_string(target->columns.size()));
      idx.ref_table = parent;
      idx.ref_index = target->uid;
      idx.on_delete = ref.on_delete;
      idx.on_update = ref.on_update;
    }
    if (k.kind == IndexKind::Check) {
      // Bind now so a bad body is refused at definition time.
      Binder b(tx_, role_);
      auto scope = b.table(s.object(table)->name, "", {});
      b.expression(scope.plan, s.object(table)->name, *k.check);
      idx.check_source = to_sql(*k.check);
    }
    tx_.stage(std::move(idx));
  }

  std::vector<Tuple> source_rows(const Insert& ins, std::size_t width) {
    Binder b(tx_, role_);
    Executor ex(tx_, remote_);
    std::vector<Tuple> rows;
    if (ins.query) {
      PlanPtr plan = review(b.select(*ins.query));
      rows = ex.rows(*plan);
    } else {
      for (const auto& exprs : ins.rows) {
        Tuple t;
        for (const auto& e : exprs) t.push_back(ex.evaluate(*b.constant(*e)));
        rows.push_back(std::move(t));
      }
    }
    for (const auto& r : rows)
      if (r.size() != width)
        throw SchemaError("INSERT has " + std::to_string(width) + " target columns but " + std::to_string(r.size()) +
                          " values");
    return rows;
  }

  RemoteWrite remote_write(const SchemaObject& view, std::string method, std::string url, std::string body,
                           std::string if_match) {
    RemoteWrite w;
    w.contributor = contributor_of(url);
    w.method = std::move(method);
    w.url = std::move(url);
    w.body = std::move(body);
    w.if_match = std::move(if_match);
    if (const std::string* u = view.metadata.get("USER")) w.user = *u;
    if (const std::string* p = view.metadata.get("PASSWORD")) w.password = *p;
    return w;
  }

  const Executor::RestRef& row_ref(const Executor& ex, const Value& rowid) {
    const auto& ref = ex.rest_refs().at(static_cast<std::size_t>(*rowid.to_int64()));
    if (ref.key.empty()) throw RemoteError("contributor " + ref.contributor + " did not identify its rows");
    return ref;
  }

  /// Using-table column of a RESTView column, if any.
  static Uid using_column(const Snapshot& s, const SchemaObject& view, const std::string& name) {
    if (view.using_table.is_null()) return {};
    const auto& cols = s.object(view.using_table)->columns;
    for (std::size_t i = 0; i + 1 < cols.size(); ++i)
      if (s.object(cols[i])->name == name) return cols[i];
    return {};
  }

  StatementResult rest_insert(const SchemaObject& view, const Insert& ins) {
    const Snapshot& s = tx_.state();
    std::vector<std::size_t> cols;
    if (ins.columns.empty()) {
      for (std::size_t i = 0; i < view.rest_columns.size(); ++i) cols.push_back(i);
    } else {
      for (const auto& name : ins.columns) {
        auto at = std::find_if(view.rest_columns.begin(), view.rest_columns.end(),
                               [&](const auto& c) { return c.first == name; });
        if (at == view.rest_columns.end()) throw SchemaError("unknown column " + name + " in " + view.name);
        cols.push_back(at - view.rest_columns.begin());
      }
    }
    auto rows = source_rows(ins, cols.size());
    if (!view.using_table.is_null())
      tx_.note_read(view.using_table, s.object(view.using_table)->columns, std::nullopt);
    for (const auto& row : rows) {
      Json body = Json::object();
      std::vector<std::pair<Uid, Value>> keys;
      for (std::size_t i = 0; i < cols.size(); ++i) {
        const auto& [name, domain] = view.rest_columns[cols[i]];
        Value v = coerce(row[i], domain);
        if (Uid u = using_column(s, view, name); !u.is_null())
          keys.emplace_back(u, std::move(v));
        else
          body[name] = to_json(v);
      }
      std::string url;
      if (view.using_table.is_null()) {
        url = *view.metadata.get("URL");
      } else {
        url = contributor_for(view, keys);
      }
      tx_.stage_remote(remote_write(view, "POST", url, body.dump(), ""));
    }
    StatementResult r;
    r.affected = static_cast<std::int64_t>(rows.size());
    return r;
  }

  std::string contributor_for(const SchemaObject& view, const std::vector<std::pair<Uid, Value>>& keys) {
    const Snapshot& s = tx_.state();
    const TableData* data = s.table_data(view.using_table);
    const Uid url_col = s.object(view.using_table)->columns.back();
    std::string found;
    for (const auto& [uid, row] : data->rows) {
      bool match = true;
      for (const auto& [c, v] : keys) {
        auto cmp = compare(row->get(c), v);
        match = match && cmp && *cmp == 0;
      }
      if (!match || row->get(url_col).is_null()) continue;
      if (!found.empty()) throw SchemaError("the inserted values match more than one contributor of " + view.name);
      found = row->get(url_col).to_string();
    }
    if (found.empty()) throw SchemaError("the inserted values match no contributor of " + view.name);
    return found;
  }

  StatementResult rest_update(const SchemaObject& view, const PlanNode& plan, Executor& ex,
                              const std::vector<Tuple>& rows, std::size_t rowid,
                              const std::vector<std::pair<std::size_t, BExprPtr>>& sets) {
    const Snapshot& s = tx_.state();
    for (const auto& [pos, e] : sets)
      if (!using_column(s, view, view.rest_columns[pos].first).is_null())
        throw SchemaError("column " + view.rest_columns[pos].first + " comes from the using table and cannot be updated");
    for (const auto& row : rows) {
      const auto& ref = row_ref(ex, row[rowid]);
      Json body = Json::object();
      for (std::size_t i = 0; i < view.rest_columns.size(); ++i) {
        const auto& [name, domain] = view.rest_columns[i];
        if (!using_column(s, view, name).is_null()) continue;
        Value v = row[i];
        for (const auto& [pos, e] : sets)
          if (pos == i) v = coerce(ex.evaluate(*e, plan.columns, row), domain);
        body[name] = to_json(v);
      }
      tx_.stage_remote(remote_write(view, "PUT", ref.contributor + "/" + ref.key, body.dump(), ref.etag));
    }
    StatementResult r;
    r.affected = static_cast<std::int64_t>(rows.size());
    return r;
  }

  Transaction& tx_;
  Uid role_;
  RemoteSource* remote_;
};

}  // namespace

std::string contributor_of(const std::string& url) {
  auto scheme = url.find("://");
  auto start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find('/', start);
  if (slash == std::string::npos) return url;
  auto next = url.find_first_of("/?", slash + 1);
  return next == std::string::npos ? url : url.substr(0, next);
}

Session::Session(std::shared_ptr<Database> db, Uid user, Uid role) : db_(std::move(db)), user_(user), role_(role) {
  if (!can_use_role(*db_->snapshot(), user_, role_)) throw AuthorizationError("permission denied: role not granted");
  install_check_evaluator(*db_);
}

StatementResult Session::execute(std::string_view sql) { return execute(parse_statement(sql)); }

std::vector<StatementResult> Session::execute_script(std::string_view sql) {
  std::vector<StatementResult> out;
  for (const auto& s : parse_script(sql)) out.push_back(execute(s));
  return out;
}

ResultSet Session::query(std::string_view select) {
  StatementResult r = execute(select);
  if (!r.has_rows) throw SqlError("statement returned no rows");
  return r.rows;
}

std::string Session::explain(std::string_view select) {
  Transaction tx = tx_ ? *tx_ : db_->begin(user_, role_);
  Binder b(tx, role_);
  return sql::explain(*review(b.select(parse_select(select))));
}

CommitResult Session::commit(Transaction& tx) {
  CommitResult r = db_->commit(tx, writer_ ? &writer_ : nullptr);
  if (r.wrote) last_commit_ = r;
  return r;
}

StatementResult Session::execute(const Statement& st) {
  StatementResult out;
  if (std::holds_alternative<Begin>(st)) {
    if (tx_) throw SqlError("a transaction is already open");
    tx_.emplace(db_->begin(user_, role_));
    return out;
  }
  if (std::holds_alternative<Commit>(st)) {
    if (!tx_) {
      out.message = "warning: no transaction is open";
      return out;
    }
    Transaction tx = std::move(*tx_);
    tx_.reset();
    commit(tx);
    return out;
  }
  if (std::holds_alternative<Rollback>(st)) {
    if (!tx_) {
      out.message = "warning: no transaction is open";
      return out;
    }
    tx_.reset();
    out.message = "rolled back";
    return out;
  }
  if (const auto* sr = std::get_if<SetRole>(&st)) {
    if (tx_) throw SqlError("SET ROLE is not allowed inside a transaction");
    auto role = db_->role_named(sr->name);
    if (!role) throw SchemaError("unknown role " + sr->name);
    if (!can_use_role(*db_->snapshot(), user_, *role))
      throw AuthorizationError("permission denied: role " + sr->name + " is not granted to you");
    role_ = *role;
    return out;
  }
  if (tx_) {
    // A failed statement leaves the open transaction as it was.
    Transaction saved = *tx_;
    try {
      return run(st, *tx_);
    } catch (...) {
      *tx_ = std::move(saved);
      throw;
    }
  }
  Transaction tx = db_->begin(user_, role_);
  out = run(st, tx);
  commit(tx);
  return out;
}

StatementResult Session::run(const Statement& s, Transaction& tx) {
  Runner runner(tx, role_, remote_);
  return std::visit(runner, s);
}

void install_check_evaluator(Database& db) {
  db.set_check_evaluator([](const Snapshot& s, const SchemaObject& c, const Row& row) -> std::optional<bool> {
    Transaction tx(std::make_shared<const Snapshot>(s), c.owner, c.definer_role);
    const SchemaObject& t = s.require(c.table, ObjectKind::Table);
    Binder b(tx, c.definer_role);
    auto scope = b.table(t.name, "", {});
    BExprPtr e = b.expression(scope.plan, t.name, *parse_expression(c.check_source));
    Tuple tuple;
    for (Uid col : t.columns) tuple.push_back(row.get(col));
    tuple.push_back(Value::integer(row.uid.value()));
    Executor ex(tx, nullptr);
    Value v = ex.evaluate(*e, scope.plan->columns, tuple);
    if (v.is_null()) return std::nullopt;
    if (v.kind() != DomainKind::Boolean) throw SqlError("CHECK " + c.name + " is not a boolean condition");
    return v.as_bool();
  });
}

}  // namespace pyrlite::sql
