#include "pyrlite/transaction.hpp"

#include <algorithm>

namespace pyrlite {

const char* reason_name(ConflictReason r) {
  switch (r) {
    case ConflictReason::None: return "ok";
    case ConflictReason::ObjectChanged: return "object-changed";
    case ConflictReason::ColumnReadUpdated: return "column-read-updated";
    case ConflictReason::RowReadUpdated: return "row-read-updated";
  }
  return "?";
}

std::string ConflictReport::describe() const {
  if (ok) return "ok";
  std::string s = std::string(reason_name(reason)) + " on " + std::to_string(object.value());
  if (!detail.empty()) s += " (" + detail + ")";
  return s;
}

Transaction::Transaction(std::shared_ptr<const Snapshot> base, Uid user, Uid role)
    : base_(std::move(base)), state_(*base_), user_(user), role_(role) {}

void Transaction::note_read(Uid table, const std::vector<Uid>& columns, const std::optional<std::vector<Uid>>& rows) {
  auto& t = reads_.tables[table];
  t.columns.insert(columns.begin(), columns.end());
  if (!rows) {
    t.whole_table = true;
  } else {
    for (Uid r : *rows)
      if (r.is_committed()) t.rows.insert(r);
  }
}

void Transaction::note_row_read(Uid table, Uid row, const std::vector<Uid>& columns) {
  auto& t = reads_.tables[table];
  t.columns.insert(columns.begin(), columns.end());
  if (row.is_committed()) t.rows.insert(row);
}

void Transaction::note_index_read(Uid table, Uid index, std::vector<Value> key) {
  reads_.tables[table].keys.push_back(IndexRead{index, std::move(key)});
}

void Transaction::note_object_read(Uid object) {
  if (object.is_committed()) reads_.objects.insert(object);
}

Uid Transaction::stage(Payload payload) {
  Physical p{next_temp(), std::move(payload)};
  Snapshot next = state_;
  install(next, p, InstallContext{user_, role_, 0});
  state_ = std::move(next);
  staged_.push_back(std::move(p));
  return staged_.back().pos;
}

void Transaction::require(Uid object, std::uint32_t action, const char* verb) const {
  if (!check_privilege(state_, user_, role_, object, action)) {
    const SchemaObject* o = state_.object(object);
    throw AuthorizationError(std::string("permission denied: cannot ") + verb + " " +
                             (o ? o->name : std::to_string(object.value())));
  }
}

namespace {

const SchemaObject& column_of(const Snapshot& s, Uid table, Uid column) {
  const SchemaObject* c = s.object(column);
  if (!c || c->kind != ObjectKind::Column || c->table != table)
    throw SchemaError("column " + std::to_string(column.value()) + " is not in table " + s.object(table)->name);
  return *c;
}

bool has_column(const Fields& f, Uid c) {
  return std::any_of(f.begin(), f.end(), [&](const auto& e) { return e.first == c; });
}

}  // namespace

Uid Transaction::insert(Uid table, Fields fields) {
  const SchemaObject& t = state_.require(table, ObjectKind::Table);
  require(table, kInsert, "insert into");
  Fields out;
  for (auto& [c, v] : fields) {
    const SchemaObject& col = column_of(state_, table, c);
    out.emplace_back(c, coerce(v, col.domain));
  }
  for (Uid c : t.columns) {
    const SchemaObject& col = *state_.object(c);
    if (!has_column(out, c) && !col.default_value.is_null()) out.emplace_back(c, coerce(col.default_value, col.domain));
  }
  if (const SchemaObject* pk = state_.primary_key(table); pk && pk->columns.size() == 1) {
    const Uid key = pk->columns.front();
    const SchemaObject& col = *state_.object(key);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == key; });
    if (col.domain.kind == DomainKind::Integer && (it == out.end() || it->second.is_null())) {
      // Autokey: max + 1. Reading the maximum makes any concurrent insert a conflict.
      Integer next = 1;
      if (const IndexTree* tree = state_.table_data(table)->indexes.find(pk->uid)) {
        if (auto last = tree->last(); last && !last->key().values.front().is_null())
          next = last->key().values.front().as_integer() + 1;
      }
      note_read(table, {key}, std::nullopt);
      if (it == out.end()) {
        out.emplace_back(key, Value::integer(next));
      } else {
        it->second = Value::integer(next);
      }
    }
  }
  return stage(phys::Record{table, std::move(out)});
}

void Transaction::update(Uid table, Uid row, Fields changes) {
  state_.require(table, ObjectKind::Table);
  if (!state_.row(table, row)) throw NotFound("row " + std::to_string(row.value()) + " not found");
  Fields out;
  for (auto& [c, v] : changes) {
    const SchemaObject& col = column_of(state_, table, c);
    require(c, kUpdate, "update");
    out.emplace_back(c, coerce(v, col.domain));
  }
  if (out.empty()) return;
  stage(phys::Update{table, row, std::move(out)});
}

void Transaction::remove(Uid table, Uid row) {
  state_.require(table, ObjectKind::Table);
  require(table, kDelete, "delete from");
  if (!state_.row(table, row)) throw NotFound("row " + std::to_string(row.value()) + " not found");
  stage(phys::Delete{table, row});
}

void Transaction::stage_remote(RemoteWrite w) {
  if (!remote_.empty() && remote_.front().contributor != w.contributor)
    throw RemoteError("single transaction master: this transaction already writes to " + remote_.front().contributor +
                      ", refusing a second remote target " + w.contributor);
  remote_.push_back(std::move(w));
}

std::vector<Uid> touched_objects(const Snapshot& s, const Physical& p) {
  std::vector<Uid> out;
  auto with_table = [&](Uid target) {
    out.push_back(target);
    if (const SchemaObject* o = s.object(target);
        o && (o->kind == ObjectKind::Column || o->kind == ObjectKind::Index))
      out.push_back(o->table);
  };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, phys::Column> || std::is_same_v<T, phys::Index>) {
          out.push_back(x.table);
        } else if constexpr (std::is_same_v<T, phys::Grant>) {
          with_table(x.object);
          out.push_back(x.grantee);
        } else if constexpr (std::is_same_v<T, phys::MetadataChange> || std::is_same_v<T, phys::Drop> ||
                             std::is_same_v<T, phys::Alter>) {
          with_table(x.target);
        } else if constexpr (std::is_same_v<T, phys::Record> || std::is_same_v<T, phys::Update> ||
                             std::is_same_v<T, phys::Delete> || std::is_same_v<T, phys::TransactionHeader>) {
        } else {
          out.push_back(p.pos);
        }
      },
      p.payload);
  return out;
}

namespace {

bool is_row_kind(PhysicalKind k) {
  return k == PhysicalKind::Record || k == PhysicalKind::Update || k == PhysicalKind::Delete;
}

bool key_matches(const Snapshot& s, const IndexRead& r, const Row& row) {
  const SchemaObject* ix = s.object(r.index);
  if (!ix) return false;
  const IndexKey k = index_key(*ix, row);
  if (k.values.size() != r.key.size()) return false;
  for (std::size_t i = 0; i < r.key.size(); ++i)
    if (index_order(k.values[i], r.key[i]) != 0) return false;
  return true;
}

}  // namespace

ConflictReport validate(const Transaction& tx, std::span<const CommittedPhysical> committed) {
  const ReadSet& reads = tx.reads();
  std::set<Uid> written_rows;
  std::set<Uid> written_tables;
  std::set<Uid> schema_targets;
  bool schema_change = false;
  for (const auto& p : tx.staged()) {
    if (auto t = row_table(p)) {
      written_tables.insert(*t);
      if (auto u = p.get_if<phys::Update>(); u && u->row.is_committed()) written_rows.insert(u->row);
      if (auto d = p.get_if<phys::Delete>(); d && d->row.is_committed()) written_rows.insert(d->row);
    } else {
      schema_change = true;
      for (Uid o : touched_objects(tx.base(), p)) schema_targets.insert(o);
    }
  }

  for (const auto& c : committed) {
    const Physical& p = c.physical;
    if (!is_row_kind(p.kind())) {
      Uid first = c.touched.empty() ? p.pos : c.touched.front();
      if (schema_change) return ConflictReport::conflict(first, ConflictReason::ObjectChanged, "concurrent schema change");
      for (Uid o : c.touched) {
        if (reads.objects.count(o) || reads.tables.count(o) || written_tables.count(o) || schema_targets.count(o))
          return ConflictReport::conflict(o, ConflictReason::ObjectChanged, std::string(kind_name(p.kind())) + " committed");
      }
      continue;
    }

    const Uid table = *row_table(p);
    if (schema_targets.count(table))
      return ConflictReport::conflict(table, ConflictReason::ObjectChanged, "rows changed under a schema change");
    auto it = reads.tables.find(table);
    const TableReads* tr = it == reads.tables.end() ? nullptr : &it->second;

    if (p.kind() == PhysicalKind::Record) {
      if (tr && tr->whole_table)
        return ConflictReport::conflict(table, ConflictReason::ColumnReadUpdated, "insert into a table read in full");
    } else if (auto u = p.get_if<phys::Update>()) {
      if (written_rows.count(u->row))
        return ConflictReport::conflict(u->row, ConflictReason::RowReadUpdated, "row updated concurrently");
      if (tr && (tr->whole_table || tr->rows.count(u->row))) {
        bool overlap = std::any_of(u->fields.begin(), u->fields.end(),
                                   [&](const auto& f) { return tr->columns.count(f.first) > 0; });
        if (overlap) {
          if (tr->rows.count(u->row))
            return ConflictReport::conflict(u->row, ConflictReason::RowReadUpdated, "a read row was updated");
          return ConflictReport::conflict(table, ConflictReason::ColumnReadUpdated, "a read column was updated");
        }
      }
    } else if (auto d = p.get_if<phys::Delete>()) {
      if (written_rows.count(d->row))
        return ConflictReport::conflict(d->row, ConflictReason::RowReadUpdated, "row deleted concurrently");
      if (tr && tr->rows.count(d->row))
        return ConflictReport::conflict(d->row, ConflictReason::RowReadUpdated, "a read row was deleted");
      if (tr && tr->whole_table)
        return ConflictReport::conflict(table, ConflictReason::ColumnReadUpdated, "delete from a table read in full");
    }
    if (tr && c.after) {
      for (const auto& k : tr->keys)
        if (key_matches(tx.base(), k, *c.after))
          return ConflictReport::conflict(c.after->uid, ConflictReason::RowReadUpdated, "a row entered a key that was read");
    }
  }
  return {};
}

}  // namespace pyrlite
