#include "pyrlite/snapshot.hpp"

#include <algorithm>

#include "pyrlite/codec.hpp"
#include "pyrlite/errors.hpp"

namespace pyrlite {

const char* object_kind_name(ObjectKind k) {
  switch (k) {
    case ObjectKind::Table: return "table";
    case ObjectKind::Column: return "column";
    case ObjectKind::Index: return "index";
    case ObjectKind::View: return "view";
    case ObjectKind::RestView: return "restview";
    case ObjectKind::Role: return "role";
    case ObjectKind::User: return "user";
    case ObjectKind::Domain: return "domain";
  }
  return "?";
}

const Value& Row::get(Uid column) const {
  static const Value null;
  auto it = std::lower_bound(fields.begin(), fields.end(), column,
                             [](const auto& f, Uid c) { return f.first < c; });
  return it != fields.end() && it->first == column ? it->second : null;
}

bool IndexKeyLess::operator()(const IndexKey& a, const IndexKey& b) const {
  const auto n = std::min(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = index_order(a.values[i], b.values[i]);
    if (c != 0) return c < 0;
  }
  if (a.values.size() != b.values.size()) return a.values.size() < b.values.size();
  return a.row < b.row;
}

const SchemaObject* Snapshot::object(Uid uid) const {
  const ObjectPtr* p = objects.find(uid);
  return p ? p->get() : nullptr;
}

const SchemaObject& Snapshot::require(Uid uid, ObjectKind kind) const {
  const SchemaObject* o = object(uid);
  if (!o || o->kind != kind)
    throw NotFound(std::string("no ") + object_kind_name(kind) + " with uid " + std::to_string(uid.value()));
  return *o;
}

std::optional<Uid> Snapshot::lookup(Namespace ns, const std::string& n) const {
  return names.get(NameKey{static_cast<std::uint8_t>(ns), n});
}

const TableData* Snapshot::table_data(Uid table) const { return tables.find(table); }

RowPtr Snapshot::row(Uid table, Uid r) const {
  const TableData* t = table_data(table);
  if (!t) return nullptr;
  const RowPtr* p = t->rows.find(r);
  return p ? *p : nullptr;
}

std::uint32_t Snapshot::granted(Uid grantee, Uid obj) const {
  const std::uint32_t* b = grants.find(GrantKey{grantee, obj});
  return b ? *b : 0;
}

std::optional<Uid> Snapshot::column_named(Uid table, const std::string& n) const {
  const SchemaObject* t = object(table);
  if (!t) return std::nullopt;
  for (Uid c : t->columns) {
    const SchemaObject* col = object(c);
    if (col && col->name == n) return c;
  }
  return std::nullopt;
}

std::optional<Uid> Snapshot::index_named(Uid table, const std::string& n) const {
  const SchemaObject* t = object(table);
  if (!t) return std::nullopt;
  for (Uid x : t->indexes) {
    const SchemaObject* ix = object(x);
    if (ix && ix->name == n) return x;
  }
  return std::nullopt;
}

const SchemaObject* Snapshot::primary_key(Uid table) const {
  const SchemaObject* t = object(table);
  if (!t) return nullptr;
  for (Uid x : t->indexes) {
    const SchemaObject* ix = object(x);
    if (ix && ix->index_kind == IndexKind::Primary) return ix;
  }
  return nullptr;
}

std::vector<const SchemaObject*> Snapshot::referencing(Uid table) const {
  std::vector<const SchemaObject*> out;
  for (auto [uid, o] : objects)
    if (o->kind == ObjectKind::Index && o->index_kind == IndexKind::Foreign && o->ref_table == table)
      out.push_back(o.get());
  return out;
}

std::vector<const SchemaObject*> Snapshot::objects_of(ObjectKind kind) const {
  std::vector<const SchemaObject*> out;
  for (auto [uid, o] : objects)
    if (o->kind == kind) out.push_back(o.get());
  return out;
}

IndexKey index_key(const SchemaObject& index, const Row& row) {
  IndexKey k;
  k.row = row.uid;
  k.values.reserve(index.columns.size());
  for (Uid c : index.columns) k.values.push_back(row.get(c));
  return k;
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw SchemaError(what); }

std::string uid_text(Uid u) { return std::to_string(u.value()); }

std::shared_ptr<SchemaObject> copy_of(const Snapshot& s, Uid uid) {
  const SchemaObject* o = s.object(uid);
  if (!o) invalid("unknown object " + uid_text(uid));
  return std::make_shared<SchemaObject>(*o);
}

void put(Snapshot& s, std::shared_ptr<SchemaObject> o) {
  const Uid uid = o->uid;
  s.objects = s.objects.add(uid, std::move(o));
}

Namespace namespace_of(ObjectKind k) {
  switch (k) {
    case ObjectKind::Role: return Namespace::Role;
    case ObjectKind::User: return Namespace::User;
    case ObjectKind::Domain: return Namespace::Domain;
    default: return Namespace::Relation;
  }
}

bool named_globally(ObjectKind k) { return k != ObjectKind::Column && k != ObjectKind::Index; }

void bind_name(Snapshot& s, ObjectKind kind, const std::string& name, Uid uid) {
  if (name.empty()) invalid(std::string("empty ") + object_kind_name(kind) + " name");
  NameKey key{static_cast<std::uint8_t>(namespace_of(kind)), name};
  if (s.names.contains(key)) invalid(std::string(object_kind_name(kind)) + " " + name + " already exists");
  s.names = s.names.add(key, uid);
}

void unbind_name(Snapshot& s, const SchemaObject& o) {
  if (named_globally(o.kind))
    s.names = s.names.remove(NameKey{static_cast<std::uint8_t>(namespace_of(o.kind)), o.name});
}

std::shared_ptr<SchemaObject> fresh(const Physical& p, ObjectKind kind, std::string name, const InstallContext& ctx) {
  auto o = std::make_shared<SchemaObject>();
  o->uid = p.pos;
  o->kind = kind;
  o->name = std::move(name);
  o->owner = ctx.user;
  o->definer_role = ctx.role;
  o->schema_key = p.pos;
  o->last_change = p.pos;
  return o;
}

void check_domain(const Snapshot& s, const Domain& d) {
  if (!d.named.is_null()) s.require(d.named, ObjectKind::Domain);
}

TableData& table_data_for_update(Snapshot& s, Uid table, TableData& scratch) {
  const TableData* t = s.table_data(table);
  if (!t) invalid("no data for table " + uid_text(table));
  scratch = *t;
  return scratch;
}

const SchemaObject& table_object(const Snapshot& s, Uid uid) {
  const SchemaObject* t = s.object(uid);
  if (!t || t->kind != ObjectKind::Table) invalid("unknown table " + uid_text(uid));
  return *t;
}

void check_fields(const Snapshot& s, const SchemaObject& table, const Fields& fields) {
  for (const auto& [c, v] : fields) {
    const SchemaObject* col = s.object(c);
    if (!col || col->kind != ObjectKind::Column || col->table != table.uid)
      invalid("column " + uid_text(c) + " is not in table " + table.name);
  }
}

std::vector<std::pair<Uid, Value>> sorted_fields(const Fields& f) {
  std::vector<std::pair<Uid, Value>> out(f.begin(), f.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Later duplicates win.
  std::vector<std::pair<Uid, Value>> dedup;
  for (auto& e : out) {
    if (!dedup.empty() && dedup.back().first == e.first) {
      dedup.back().second = std::move(e.second);
    } else {
      dedup.push_back(std::move(e));
    }
  }
  return dedup;
}

IndexTree build_index(const SchemaObject& index, const TableData& data) {
  IndexTree tree;
  for (auto [uid, row] : data.rows) tree = tree.add(index_key(index, *row), std::monostate{});
  return tree;
}

void reindex(const Snapshot& s, const SchemaObject& table, TableData& data, const Row* before, const Row* after) {
  for (Uid x : table.indexes) {
    const IndexTree* tree = data.indexes.find(x);
    if (!tree) continue;
    const SchemaObject& ix = *s.object(x);
    IndexTree t = *tree;
    if (before) t = t.remove(index_key(ix, *before));
    if (after) t = t.add(index_key(ix, *after), std::monostate{});
    data.indexes = data.indexes.add(x, std::move(t));
  }
}

void install_table(Snapshot& s, const Physical& p, const phys::Table& t, const InstallContext& ctx) {
  auto o = fresh(p, ObjectKind::Table, t.name, ctx);
  o->metadata = t.metadata;
  bind_name(s, ObjectKind::Table, t.name, p.pos);
  put(s, o);
  s.tables = s.tables.add(p.pos, TableData{});
}

void install_column(Snapshot& s, const Physical& p, const phys::Column& c, const InstallContext& ctx) {
  auto table = copy_of(s, c.table);
  if (table->kind != ObjectKind::Table) invalid("column " + c.name + " added to a non-table");
  if (s.column_named(c.table, c.name)) invalid("column " + c.name + " already exists in " + table->name);
  check_domain(s, c.domain);
  auto o = fresh(p, ObjectKind::Column, c.name, ctx);
  o->table = c.table;
  o->domain = c.domain;
  o->position = c.position;
  o->not_null = c.not_null;
  o->default_value = c.default_value;
  put(s, o);
  table->columns.push_back(p.pos);
  std::stable_sort(table->columns.begin(), table->columns.end(), [&](Uid a, Uid b) {
    auto pa = a == p.pos ? c.position : s.object(a)->position;
    auto pb = b == p.pos ? c.position : s.object(b)->position;
    return pa < pb;
  });
  table->schema_key = p.pos;
  table->last_change = p.pos;
  put(s, table);
}

void install_record(Snapshot& s, const Physical& p, const phys::Record& r) {
  const SchemaObject& table = table_object(s, r.table);
  check_fields(s, table, r.fields);
  auto row = std::make_shared<Row>();
  row->uid = p.pos;
  row->table = r.table;
  row->last_change = p.pos;
  row->fields = sorted_fields(r.fields);
  TableData scratch;
  TableData& data = table_data_for_update(s, r.table, scratch);
  if (data.rows.contains(p.pos)) invalid("duplicate row " + uid_text(p.pos));
  reindex(s, table, data, nullptr, row.get());
  data.rows = data.rows.add(p.pos, row);
  s.tables = s.tables.add(r.table, std::move(data));
}

void install_update(Snapshot& s, const Physical& p, const phys::Update& u) {
  const SchemaObject& table = table_object(s, u.table);
  check_fields(s, table, u.fields);
  RowPtr old = s.row(u.table, u.row);
  if (!old) invalid("update of missing row " + uid_text(u.row) + " in " + table.name);
  auto row = std::make_shared<Row>(*old);
  row->last_change = p.pos;
  Fields merged(old->fields.begin(), old->fields.end());
  merged.insert(merged.end(), u.fields.begin(), u.fields.end());
  row->fields = sorted_fields(merged);
  TableData scratch;
  TableData& data = table_data_for_update(s, u.table, scratch);
  reindex(s, table, data, old.get(), row.get());
  data.rows = data.rows.add(u.row, row);
  s.tables = s.tables.add(u.table, std::move(data));
}

void install_delete(Snapshot& s, const phys::Delete& d) {
  const SchemaObject& table = table_object(s, d.table);
  RowPtr old = s.row(d.table, d.row);
  if (!old) invalid("delete of missing row " + uid_text(d.row) + " in " + table.name);
  TableData scratch;
  TableData& data = table_data_for_update(s, d.table, scratch);
  reindex(s, table, data, old.get(), nullptr);
  data.rows = data.rows.remove(d.row);
  s.tables = s.tables.add(d.table, std::move(data));
}

void install_index(Snapshot& s, const Physical& p, const phys::Index& x, const InstallContext& ctx) {
  auto table = copy_of(s, x.table);
  if (table->kind != ObjectKind::Table) invalid("index " + x.name + " on a non-table");
  if (s.index_named(x.table, x.name)) invalid("index " + x.name + " already exists on " + table->name);
  if (x.kind != IndexKind::Check) {
    if (x.columns.empty()) invalid("index " + x.name + " has no columns");
    for (Uid c : x.columns) {
      const SchemaObject* col = s.object(c);
      if (!col || col->kind != ObjectKind::Column || col->table != x.table)
        invalid("index " + x.name + " names a column outside " + table->name);
    }
  }
  if (x.kind == IndexKind::Primary && s.primary_key(x.table)) invalid(table->name + " already has a primary key");
  if (x.kind == IndexKind::Foreign) {
    table_object(s, x.ref_table);
    const SchemaObject* ref = s.object(x.ref_index);
    if (!ref || ref->kind != ObjectKind::Index || ref->table != x.ref_table ||
        (ref->index_kind != IndexKind::Primary && ref->index_kind != IndexKind::Unique))
      invalid("foreign key " + x.name + " must reference a primary or unique key");
    if (ref->columns.size() != x.columns.size()) invalid("foreign key " + x.name + " column count mismatch");
  }
  auto o = fresh(p, ObjectKind::Index, x.name, ctx);
  o->table = x.table;
  o->columns = x.columns;
  o->index_kind = x.kind;
  o->ref_table = x.ref_table;
  o->ref_index = x.ref_index;
  o->on_delete = x.on_delete;
  o->on_update = x.on_update;
  o->check_source = x.check_source;
  put(s, o);
  table->indexes.push_back(p.pos);
  table->schema_key = p.pos;
  table->last_change = p.pos;
  put(s, table);
  if (x.kind != IndexKind::Check) {
    TableData scratch;
    TableData& data = table_data_for_update(s, x.table, scratch);
    data.indexes = data.indexes.add(p.pos, build_index(*o, data));
    s.tables = s.tables.add(x.table, std::move(data));
  }
}

void remove_grants_on(Snapshot& s, Uid uid) {
  std::vector<GrantKey> doomed;
  for (auto [k, bits] : s.grants)
    if (k.first == uid || k.second == uid) doomed.push_back(k);
  for (const auto& k : doomed) s.grants = s.grants.remove(k);
}

void drop_object(Snapshot& s, Uid uid, Uid pos) {
  const SchemaObject* o = s.object(uid);
  if (!o) invalid("drop of unknown object " + uid_text(uid));
  switch (o->kind) {
    case ObjectKind::Table: {
      for (const SchemaObject* fk : s.referencing(uid))
        if (fk->table != uid) invalid("table " + o->name + " is referenced by " + fk->name);
      auto keep = *o;
      for (Uid c : keep.columns) s.objects = s.objects.remove(c);
      for (Uid x : keep.indexes) s.objects = s.objects.remove(x);
      s.tables = s.tables.remove(uid);
      break;
    }
    case ObjectKind::Column: {
      auto table = copy_of(s, o->table);
      for (Uid x : table->indexes)
        for (Uid c : s.object(x)->columns)
          if (c == uid) invalid("column " + o->name + " is used by index " + s.object(x)->name);
      table->columns.erase(std::remove(table->columns.begin(), table->columns.end(), uid), table->columns.end());
      table->schema_key = pos;
      table->last_change = pos;
      put(s, table);
      break;
    }
    case ObjectKind::Index: {
      if (o->index_kind == IndexKind::Primary || o->index_kind == IndexKind::Unique)
        for (auto [k, other] : s.objects)
          if (other->kind == ObjectKind::Index && other->ref_index == uid)
            invalid("key " + o->name + " is referenced by " + other->name);
      auto table = copy_of(s, o->table);
      table->indexes.erase(std::remove(table->indexes.begin(), table->indexes.end(), uid), table->indexes.end());
      table->schema_key = pos;
      table->last_change = pos;
      put(s, table);
      TableData scratch;
      TableData& data = table_data_for_update(s, o->table, scratch);
      data.indexes = data.indexes.remove(uid);
      s.tables = s.tables.add(o->table, std::move(data));
      break;
    }
    case ObjectKind::RestView:
    case ObjectKind::View:
    case ObjectKind::Role:
    case ObjectKind::User:
    case ObjectKind::Domain: break;
  }
  unbind_name(s, *o);
  remove_grants_on(s, uid);
  s.objects = s.objects.remove(uid);
}

void install_alter(Snapshot& s, const Physical& p, const phys::Alter& a) {
  auto o = copy_of(s, a.target);
  o->last_change = p.pos;
  switch (a.op) {
    case AlterOp::Rename: {
      if (named_globally(o->kind)) {
        unbind_name(s, *o);
        bind_name(s, o->kind, a.text, o->uid);
      } else if (o->kind == ObjectKind::Column) {
        if (s.column_named(o->table, a.text)) invalid("column " + a.text + " already exists");
      }
      o->name = a.text;
      o->schema_key = p.pos;
      if (o->kind == ObjectKind::Column || o->kind == ObjectKind::Index) {
        auto table = copy_of(s, o->table);
        table->schema_key = p.pos;
        table->last_change = p.pos;
        put(s, table);
      }
      break;
    }
    case AlterOp::RedefineView:
      if (o->kind != ObjectKind::View) invalid(o->name + " is not a view");
      o->source = a.text;
      o->view_columns = a.columns;
      o->schema_key = p.pos;
      break;
    case AlterOp::SetPassword:
      if (o->kind != ObjectKind::User) invalid(o->name + " is not a user");
      o->password_hash = a.text;
      break;
  }
  put(s, o);
}

void install_grant(Snapshot& s, const phys::Grant& g) {
  if (!s.object(g.object) && !g.object.is_builtin()) invalid("grant on unknown object " + uid_text(g.object));
  if (g.grantee != builtin::kPublic) {
    const SchemaObject* who = s.object(g.grantee);
    if (!who || (who->kind != ObjectKind::Role && who->kind != ObjectKind::User))
      invalid("grant to unknown grantee " + uid_text(g.grantee));
  }
  GrantKey key{g.grantee, g.object};
  std::uint32_t bits = s.granted(g.grantee, g.object);
  bits = g.revoke ? (bits & ~g.privileges) : (bits | g.privileges);
  s.grants = bits ? s.grants.add(key, bits) : s.grants.remove(key);
}

}  // namespace

void install(Snapshot& s, const Physical& p, const InstallContext& ctx) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, phys::TransactionHeader>) {
          invalid("transaction header cannot be installed");
        } else if constexpr (std::is_same_v<T, phys::Table>) {
          install_table(s, p, x, ctx);
        } else if constexpr (std::is_same_v<T, phys::Column>) {
          install_column(s, p, x, ctx);
        } else if constexpr (std::is_same_v<T, phys::Record>) {
          install_record(s, p, x);
        } else if constexpr (std::is_same_v<T, phys::Update>) {
          install_update(s, p, x);
        } else if constexpr (std::is_same_v<T, phys::Delete>) {
          install_delete(s, x);
        } else if constexpr (std::is_same_v<T, phys::Index>) {
          install_index(s, p, x, ctx);
        } else if constexpr (std::is_same_v<T, phys::View>) {
          auto o = fresh(p, ObjectKind::View, x.name, ctx);
          o->view_columns = x.columns;
          o->source = x.source;
          o->metadata = x.metadata;
          bind_name(s, ObjectKind::View, x.name, p.pos);
          put(s, o);
        } else if constexpr (std::is_same_v<T, phys::RestView>) {
          if (!x.using_table.is_null()) table_object(s, x.using_table);
          for (const auto& [n, d] : x.columns) check_domain(s, d);
          auto o = fresh(p, ObjectKind::RestView, x.name, ctx);
          o->rest_columns = x.columns;
          o->using_table = x.using_table;
          o->metadata = x.metadata;
          bind_name(s, ObjectKind::RestView, x.name, p.pos);
          put(s, o);
        } else if constexpr (std::is_same_v<T, phys::Role>) {
          bind_name(s, ObjectKind::Role, x.name, p.pos);
          put(s, fresh(p, ObjectKind::Role, x.name, ctx));
        } else if constexpr (std::is_same_v<T, phys::User>) {
          bind_name(s, ObjectKind::User, x.name, p.pos);
          auto o = fresh(p, ObjectKind::User, x.name, ctx);
          o->password_hash = x.password_hash;
          put(s, o);
          if (s.owner.is_null()) s.owner = p.pos;
        } else if constexpr (std::is_same_v<T, phys::Grant>) {
          install_grant(s, x);
        } else if constexpr (std::is_same_v<T, phys::MetadataChange>) {
          auto o = copy_of(s, x.target);
          o->metadata = o->metadata.merged(x.metadata);
          o->last_change = p.pos;
          put(s, o);
        } else if constexpr (std::is_same_v<T, phys::DomainDef>) {
          check_domain(s, x.base);
          bind_name(s, ObjectKind::Domain, x.name, p.pos);
          auto o = fresh(p, ObjectKind::Domain, x.name, ctx);
          o->domain = x.base;
          o->domain.named = p.pos;
          put(s, o);
        } else if constexpr (std::is_same_v<T, phys::Drop>) {
          drop_object(s, x.target, p.pos);
        } else if constexpr (std::is_same_v<T, phys::Alter>) {
          install_alter(s, p, x);
        }
      },
      p.payload);
}

Snapshot replay(std::span<const std::uint8_t> file, const std::string& name) {
  Snapshot s;
  s.name = name;
  std::uint64_t last_good = kLogHeaderSize;
  for (const auto& tx : read_transactions(file)) {
    const auto& h = tx.header.as<phys::TransactionHeader>();
    InstallContext ctx{h.user, h.role, h.timestamp_us};
    for (const auto& p : tx.physicals) {
      bool backward = true;
      for_each_uid(p.payload, [&](Uid u) {
        if (u >= p.pos) backward = false;
      });
      if (!backward) throw LogCorruption(static_cast<std::uint64_t>(p.pos.value()), "forward reference", last_good);
      try {
        install(s, p, ctx);
      } catch (const Error& e) {
        throw LogCorruption(static_cast<std::uint64_t>(p.pos.value()), e.what(), last_good);
      }
    }
    s.watermark = tx.end;
    last_good = tx.end;
  }
  return s;
}

namespace {

void hash_object(ByteWriter& w, const SchemaObject& o) {
  w.uid(o.uid);
  w.byte(static_cast<std::uint8_t>(o.kind));
  w.string(o.name);
  w.uid(o.owner);
  w.uid(o.definer_role);
  w.uid(o.schema_key);
  w.uid(o.last_change);
  w.varint(o.metadata.flags.size());
  for (const auto& f : o.metadata.flags) w.string(f);
  w.varint(o.metadata.strings.size());
  for (const auto& [k, v] : o.metadata.strings) {
    w.string(k);
    w.string(v);
  }
  w.varint(o.columns.size());
  for (Uid c : o.columns) w.uid(c);
  w.varint(o.indexes.size());
  for (Uid x : o.indexes) w.uid(x);
  w.uid(o.table);
  w.domain(o.domain);
  w.zigzag(o.position);
  w.byte(o.not_null);
  w.value(o.default_value);
  w.byte(static_cast<std::uint8_t>(o.index_kind));
  w.uid(o.ref_table);
  w.uid(o.ref_index);
  w.byte(static_cast<std::uint8_t>(o.on_delete));
  w.byte(static_cast<std::uint8_t>(o.on_update));
  w.string(o.check_source);
  w.varint(o.view_columns.size());
  for (const auto& c : o.view_columns) w.string(c);
  w.string(o.source);
  w.varint(o.rest_columns.size());
  for (const auto& [n, d] : o.rest_columns) {
    w.string(n);
    w.domain(d);
  }
  w.uid(o.using_table);
  w.string(o.password_hash);
}

}  // namespace

std::uint64_t state_hash(const Snapshot& s) {
  Fnv1a h;
  ByteWriter w;
  auto flush = [&] {
    h.update(w.data());
    w = ByteWriter{};
  };
  w.string(s.name);
  w.varint(s.watermark);
  w.uid(s.owner);
  flush();
  for (auto [uid, o] : s.objects) {
    hash_object(w, *o);
    flush();
  }
  for (auto [k, uid] : s.names) {
    w.byte(k.first);
    w.string(k.second);
    w.uid(uid);
  }
  for (auto [k, bits] : s.grants) {
    w.uid(k.first);
    w.uid(k.second);
    w.varint(bits);
  }
  flush();
  for (auto [table, data] : s.tables) {
    w.uid(table);
    w.varint(data.rows.size());
    for (auto [uid, row] : data.rows) {
      w.uid(row->uid);
      w.uid(row->last_change);
      w.varint(row->fields.size());
      for (const auto& [c, v] : row->fields) {
        w.uid(c);
        w.value(v);
      }
      flush();
    }
    for (auto [x, tree] : data.indexes) {
      w.uid(x);
      for (auto [key, unit] : tree) {
        for (const auto& v : key.values) w.value(v);
        w.uid(key.row);
      }
      flush();
    }
  }
  flush();
  return h.digest();
}

bool can_use_role(const Snapshot& s, Uid user, Uid role) {
  const SchemaObject* r = s.object(role);
  if (!r || r->kind != ObjectKind::Role) return false;
  if (r->owner == user) return true;
  return ((s.granted(user, role) | s.granted(builtin::kPublic, role)) & kUsage) != 0;
}

bool check_privilege(const Snapshot& s, Uid user, Uid role, Uid object, std::uint32_t action) {
  if (object.is_builtin()) return true;
  const SchemaObject* o = s.object(object);
  if (!o) return false;
  if (!user.is_null() && o->owner == user) return true;
  if (!role.is_null() && o->definer_role == role) return true;
  const std::uint32_t bits = s.granted(role, object) | s.granted(builtin::kPublic, object);
  if (bits & (action | kOwner)) return true;
  if (o->kind == ObjectKind::Column || o->kind == ObjectKind::Index) return check_privilege(s, user, role, o->table, action);
  return false;
}

}  // namespace pyrlite
