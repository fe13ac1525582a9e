#include "pyrlite/database.hpp"

#include <sodium.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <set>

namespace pyrlite {

std::string hash_password(const std::string& user, const std::string& password) {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw Error("libsodium failed to initialise");
  std::string input = user;
  input.push_back('\0');
  input += password;
  unsigned char digest[crypto_generichash_BYTES];
  crypto_generichash(digest, sizeof digest, reinterpret_cast<const unsigned char*>(input.data()), input.size(), nullptr,
                     0);
  char hex[2 * crypto_generichash_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, digest, sizeof digest);
  return hex;
}

Database::Database(std::filesystem::path file, DatabaseOptions options)
    : name_(file.stem().string()), options_(std::move(options)), log_(file, options_.sync) {
  auto bytes = log_.read_all();
  current_ = std::make_shared<const Snapshot>(replay(bytes, name_));
}

std::shared_ptr<Database> Database::open(const std::filesystem::path& file, DatabaseOptions options) {
  return std::shared_ptr<Database>(new Database(file, std::move(options)));
}

std::shared_ptr<const Snapshot> Database::snapshot() const {
  std::lock_guard lock(publish_mu_);
  return current_;
}

Transaction Database::begin(Uid user, Uid role) const {
  auto s = snapshot();
  const SchemaObject* u = s->object(user);
  if (!u || u->kind != ObjectKind::User) throw AuthorizationError("unknown user " + std::to_string(user.value()));
  if (!can_use_role(*s, user, role)) {
    const SchemaObject* r = s->object(role);
    throw AuthorizationError("user " + u->name + " has not been granted role " +
                             (r ? r->name : std::to_string(role.value())));
  }
  return Transaction(s, user, role);
}

std::optional<Uid> Database::user_named(const std::string& user) const {
  return snapshot()->lookup(Namespace::User, user);
}

std::optional<Uid> Database::role_named(const std::string& role) const {
  return snapshot()->lookup(Namespace::Role, role);
}

Uid Database::authenticate(const std::string& user, const std::string& password) const {
  auto s = snapshot();
  auto uid = s->lookup(Namespace::User, user);
  if (!uid || s->object(*uid)->password_hash != hash_password(user, password))
    throw AuthenticationError("invalid credentials for " + user);
  return *uid;
}

std::optional<Uid> Database::default_role(Uid user) const {
  auto s = snapshot();
  if (auto r = s->lookup(Namespace::Role, name_); r && can_use_role(*s, user, *r)) return r;
  for (const SchemaObject* r : s->objects_of(ObjectKind::Role))
    if (can_use_role(*s, user, r->uid)) return r->uid;
  return std::nullopt;
}

Uid Database::bootstrap(const std::string& user, const std::string& password) {
  {
    auto s = snapshot();
    if (!s->owner.is_null()) {
      auto uid = s->lookup(Namespace::User, user);
      if (!uid) throw AuthenticationError("unknown user " + user);
      return *uid;
    }
  }
  Transaction tx(snapshot(), builtin::kSystem, builtin::kSystem);
  Uid u = tx.stage(phys::User{user, hash_password(user, password)});
  Uid r = tx.stage(phys::Role{name_});
  tx.stage(phys::Grant{kUsage, r, u, false});
  try {
    auto result = commit(tx);
    return result.relocation.at(u);
  } catch (const ConflictError&) {
    // Another connection bootstrapped first.
    auto uid = snapshot()->lookup(Namespace::User, user);
    if (!uid) throw;
    return *uid;
  }
}

void Database::set_check_evaluator(CheckEvaluator f) {
  std::lock_guard lock(commit_mu_);
  check_ = std::move(f);
}

void Database::set_remote_executor(RemoteExecutor f) {
  std::lock_guard lock(commit_mu_);
  remote_ = std::move(f);
}

std::int64_t Database::now() {
  std::int64_t t = options_.clock ? options_.clock()
                                  : std::chrono::duration_cast<std::chrono::microseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count();
  last_timestamp_ = std::max(last_timestamp_, t);
  return last_timestamp_;
}

namespace {

std::vector<Uid> rows_with_key(const Snapshot& s, const SchemaObject& index, const std::vector<Value>& key) {
  std::vector<Uid> out;
  const TableData* data = s.table_data(index.table);
  const IndexTree* tree = data ? data->indexes.find(index.uid) : nullptr;
  if (!tree) return out;
  IndexKey probe{key, Uid{std::numeric_limits<std::int64_t>::min()}};
  for (auto b = tree->seek(probe); b; b = b->next()) {
    const auto& vals = b->key().values;
    bool same = true;
    for (std::size_t i = 0; i < key.size() && same; ++i) same = index_order(vals[i], key[i]) == 0;
    if (!same) break;
    out.push_back(b->key().row);
  }
  return out;
}

bool any_null(const std::vector<Value>& v) {
  return std::any_of(v.begin(), v.end(), [](const Value& x) { return x.is_null(); });
}

bool same_values(const std::vector<Value>& a, const std::vector<Value>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (index_order(a[i], b[i]) != 0) return false;
  return true;
}

std::string key_text(const std::vector<Value>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].to_sql();
  return s + ")";
}

constexpr int kMaxCascadeDepth = 64;

}  // namespace

void Database::apply_with_actions(Snapshot& work, const Physical& p, const InstallContext& ctx,
                                  std::vector<Physical>& out, Transaction& tx, int depth) {
  if (depth > kMaxCascadeDepth) throw ConstraintError("referential actions nest too deeply");
  RowPtr before;
  auto table = row_table(p);
  if (auto u = p.get_if<phys::Update>()) before = work.row(u->table, u->row);
  if (auto d = p.get_if<phys::Delete>()) before = work.row(d->table, d->row);
  install(work, p, ctx);
  out.push_back(p);
  if (!before || p.kind() == PhysicalKind::Record) return;

  RowPtr after = p.kind() == PhysicalKind::Update ? work.row(*table, before->uid) : nullptr;
  for (const SchemaObject* fk : work.referencing(*table)) {
    const SchemaObject& parent_key = *work.object(fk->ref_index);
    const auto old_key = index_key(parent_key, *before).values;
    if (any_null(old_key)) continue;
    std::vector<Value> new_key;
    if (after) {
      new_key = index_key(parent_key, *after).values;
      if (same_values(old_key, new_key)) continue;
    }
    const FkAction action = after ? fk->on_update : fk->on_delete;
    const SchemaObject& child_table = *work.object(fk->table);
    // Copy: fk points into work, which the nested applications replace.
    const SchemaObject fk_copy = *fk;
    for (Uid child : rows_with_key(work, fk_copy, old_key)) {
      if (!work.row(fk_copy.table, child)) continue;
      switch (action) {
        case FkAction::Restrict:
          throw ConstraintError("foreign key " + fk_copy.name + " restricts " + (after ? "update" : "delete") + " of " +
                                key_text(old_key) + ": still referenced from " + child_table.name);
        case FkAction::Cascade:
          if (after) {
            Fields f;
            for (std::size_t i = 0; i < fk_copy.columns.size(); ++i) f.emplace_back(fk_copy.columns[i], new_key[i]);
            apply_with_actions(work, Physical{tx.next_temp(), phys::Update{fk_copy.table, child, std::move(f)}}, ctx,
                               out, tx, depth + 1);
          } else {
            apply_with_actions(work, Physical{tx.next_temp(), phys::Delete{fk_copy.table, child}}, ctx, out, tx,
                               depth + 1);
          }
          break;
        case FkAction::SetNull: {
          Fields f;
          for (Uid c : fk_copy.columns) f.emplace_back(c, Value{});
          apply_with_actions(work, Physical{tx.next_temp(), phys::Update{fk_copy.table, child, std::move(f)}}, ctx, out,
                             tx, depth + 1);
          break;
        }
      }
    }
  }
}

void Database::check_constraints(const Snapshot& work, const std::vector<Physical>& staged) const {
  auto check_row = [&](const SchemaObject& table, const SchemaObject& ix, const Row& row) {
    const auto key = index_key(ix, row).values;
    switch (ix.index_kind) {
      case IndexKind::Primary:
      case IndexKind::Unique: {
        if (any_null(key)) {
          if (ix.index_kind == IndexKind::Primary)
            throw ConstraintError("primary key " + ix.name + " of " + table.name + " may not be NULL");
          return;
        }
        if (rows_with_key(work, ix, key).size() > 1)
          throw ConstraintError((ix.index_kind == IndexKind::Primary ? "primary key " : "unique constraint ") + ix.name +
                                " violated: duplicate key " + key_text(key) + " in " + table.name);
        return;
      }
      case IndexKind::Foreign: {
        if (any_null(key)) return;
        if (rows_with_key(work, *work.object(ix.ref_index), key).empty())
          throw ConstraintError("foreign key " + ix.name + " violated: " + table.name + " row " + key_text(key) +
                                " has no matching " + work.object(ix.ref_table)->name + " row");
        return;
      }
      case IndexKind::Check: {
        if (!check_) throw ConstraintError("no evaluator for check constraint " + ix.name);
        if (check_(work, ix, row) == std::optional<bool>(false))
          throw ConstraintError("check constraint " + ix.name + " violated by " + table.name + " row " +
                                std::to_string(row.uid.value()));
        return;
      }
      case IndexKind::Plain: return;
    }
  };

  std::set<std::pair<Uid, Uid>> touched;
  for (const auto& p : staged) {
    if (auto r = p.get_if<phys::Record>()) touched.emplace(r->table, p.pos);
    if (auto u = p.get_if<phys::Update>()) touched.emplace(u->table, u->row);
    if (auto x = p.get_if<phys::Index>()) {
      const SchemaObject* ix = work.object(p.pos);
      const TableData* data = work.table_data(x->table);
      if (!ix || !data) continue;
      const SchemaObject& table = *work.object(x->table);
      for (auto [uid, row] : data->rows) check_row(table, *ix, *row);
    }
    if (auto c = p.get_if<phys::Column>(); c && c->not_null) {
      if (const TableData* data = work.table_data(c->table))
        for (auto [uid, row] : data->rows)
          if (row->get(p.pos).is_null())
            throw ConstraintError("column " + c->name + " may not be NULL");
    }
  }
  for (const auto& [t, r] : touched) {
    RowPtr row = work.row(t, r);
    if (!row) continue;
    const SchemaObject& table = *work.object(t);
    for (Uid c : table.columns) {
      const SchemaObject& col = *work.object(c);
      if (col.not_null && row->get(c).is_null())
        throw ConstraintError("column " + col.name + " of " + table.name + " may not be NULL");
    }
    for (Uid x : table.indexes) check_row(table, *work.object(x), *row);
  }
}

CommitResult Database::commit(Transaction& tx, const RemoteExecutor* remote) {
  if (!tx.has_writes()) return CommitResult{snapshot(), 0, false, {}, {}};

  std::lock_guard lock(commit_mu_);
  auto cur = snapshot();

  const std::uint64_t since = tx.base().watermark;
  if (popped_max_ >= 0 && static_cast<std::uint64_t>(popped_max_) >= since)
    throw ConflictError(ConflictReport::conflict(Uid{}, ConflictReason::ObjectChanged,
                                                 "snapshot older than the retained commit history"));
  auto first = std::lower_bound(ring_.begin(), ring_.end(), since, [](const CommittedPhysical& c, std::uint64_t w) {
    return static_cast<std::uint64_t>(c.physical.pos.value()) < w;
  });
  std::vector<CommittedPhysical> between(first, ring_.end());
  ConflictReport report = validate(tx, between);
  if (!report.ok) throw ConflictError(report);

  // Rebase onto the current state, adding referential actions as we go.
  Snapshot work = *cur;
  const InstallContext staging_ctx{tx.user(), tx.role(), 0};
  std::vector<Physical> final_staged;
  for (const auto& p : tx.staged()) apply_with_actions(work, p, staging_ctx, final_staged, tx, 0);
  check_constraints(work, final_staged);

  // Step (c): the single remote update, under the local lock.
  if (!tx.remote_writes().empty()) {
    const RemoteExecutor* exec = remote ? remote : (remote_ ? &remote_ : nullptr);
    if (!exec) throw RemoteError("no transport for remote writes");
    (*exec)(tx.remote_writes());
  }
  if (final_staged.empty()) return CommitResult{cur, 0, false, {}, {}};

  const std::int64_t ts = now();
  PreparedCommit prepared = prepare_commit(log_.size(), final_staged, tx.user(), tx.role(), ts);
  log_.append_bytes(prepared.bytes, prepared.base);

  Snapshot next = *cur;
  const InstallContext ctx{tx.user(), tx.role(), ts};
  for (const auto& p : prepared.physicals) {
    CommittedPhysical cp{p, nullptr, nullptr, {}};
    auto table = row_table(p);
    if (!table) cp.touched = touched_objects(next, p);
    if (auto u = p.get_if<phys::Update>()) cp.before = next.row(u->table, u->row);
    if (auto d = p.get_if<phys::Delete>()) cp.before = next.row(d->table, d->row);
    install(next, p, ctx);
    if (p.kind() == PhysicalKind::Record) cp.after = next.row(*table, p.pos);
    if (auto u = p.get_if<phys::Update>()) cp.after = next.row(u->table, u->row);
    ring_.push_back(std::move(cp));
  }
  next.watermark = prepared.base + prepared.bytes.size();
  auto published = std::make_shared<const Snapshot>(std::move(next));
  {
    std::lock_guard plock(publish_mu_);
    current_ = published;
  }
  while (ring_.size() > options_.ring_capacity) {
    popped_max_ = ring_.front().physical.pos.value();
    ring_.pop_front();
  }
  return CommitResult{published, prepared.base, true, std::move(prepared.physicals), std::move(prepared.map)};
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> column_names(const Snapshot& s, const std::vector<Uid>& cols) {
  std::vector<std::string> out;
  for (Uid c : cols) out.push_back(s.object(c)->name);
  return out;
}

}  // namespace

ClassModel generate_class_model(const Snapshot& s, Uid user, Uid role, const std::string& table) {
  auto uid = s.lookup(Namespace::Relation, table);
  if (!uid || s.object(*uid)->kind != ObjectKind::Table) throw NotFound("no table " + table);
  if (!check_privilege(s, user, role, *uid, kSelect)) throw AuthorizationError("permission denied: select on " + table);
  const SchemaObject& t = *s.object(*uid);
  ClassModel m;
  m.name = t.name;
  m.defining_pos = t.uid.value();
  m.schema_key = t.schema_key.value();
  const SchemaObject* pk = s.primary_key(t.uid);
  for (Uid c : t.columns) {
    const SchemaObject& col = *s.object(c);
    ClassModel::Column mc{col.name, col.domain.sql(), col.domain.kind, false, false};
    if (pk && std::find(pk->columns.begin(), pk->columns.end(), c) != pk->columns.end()) {
      mc.key = true;
      mc.autokey = pk->columns.size() == 1 && col.domain.kind == DomainKind::Integer;
    }
    m.columns.push_back(std::move(mc));
  }
  if (pk) m.key = column_names(s, pk->columns);
  for (Uid x : t.indexes) {
    const SchemaObject& ix = *s.object(x);
    if (ix.index_kind == IndexKind::Unique) m.unique.push_back(column_names(s, ix.columns));
    if (ix.index_kind == IndexKind::Foreign) {
      const SchemaObject& parent = *s.object(ix.ref_table);
      m.navigation.push_back({lower(parent.name), parent.name, false,
                              column_names(s, s.object(ix.ref_index)->columns), column_names(s, ix.columns)});
    }
  }
  for (const SchemaObject* fk : s.referencing(t.uid)) {
    const SchemaObject& child = *s.object(fk->table);
    m.navigation.push_back({lower(child.name) + "s", child.name, true, column_names(s, fk->columns),
                            column_names(s, s.object(fk->ref_index)->columns)});
  }
  return m;
}

}  // namespace pyrlite
