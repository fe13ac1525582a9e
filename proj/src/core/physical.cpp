#include "pyrlite/physical.hpp"

#include "pyrlite/codec.hpp"
#include "pyrlite/errors.hpp"

namespace pyrlite {

const char* kind_name(PhysicalKind k) {
  switch (k) {
    case PhysicalKind::TransactionHeader: return "Transaction";
    case PhysicalKind::Table: return "Table";
    case PhysicalKind::Column: return "Column";
    case PhysicalKind::Record: return "Record";
    case PhysicalKind::Update: return "Update";
    case PhysicalKind::Delete: return "Delete";
    case PhysicalKind::Index: return "Index";
    case PhysicalKind::View: return "View";
    case PhysicalKind::RestView: return "RestView";
    case PhysicalKind::Role: return "Role";
    case PhysicalKind::User: return "User";
    case PhysicalKind::Grant: return "Grant";
    case PhysicalKind::Metadata: return "Metadata";
    case PhysicalKind::Domain: return "Domain";
    case PhysicalKind::Drop: return "Drop";
    case PhysicalKind::Alter: return "Alter";
  }
  return "?";
}

bool Metadata::has(std::string_view flag) const {
  for (const auto& f : flags)
    if (f == flag) return true;
  return false;
}

const std::string* Metadata::get(std::string_view key) const {
  for (auto it = strings.rbegin(); it != strings.rend(); ++it)
    if (it->first == key) return &it->second;
  return nullptr;
}

Metadata Metadata::merged(const Metadata& more) const {
  Metadata out = *this;
  for (const auto& f : more.flags)
    if (!out.has(f)) out.flags.push_back(f);
  for (const auto& [k, v] : more.strings) {
    bool replaced = false;
    for (auto& [ek, ev] : out.strings)
      if (ek == k) {
        ev = v;
        replaced = true;
      }
    if (!replaced) out.strings.emplace_back(k, v);
  }
  return out;
}

namespace {

// Applies f to every uid reference inside the payload; P is Payload or const Payload.
template <class P, class F>
void visit_uids(P& payload, F&& f) {
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, phys::TransactionHeader>) {
          f(p.user);
          f(p.role);
        } else if constexpr (std::is_same_v<T, phys::Column>) {
          f(p.table);
          f(p.domain.named);
        } else if constexpr (std::is_same_v<T, phys::Record>) {
          f(p.table);
          for (auto& field : p.fields) f(field.first);
        } else if constexpr (std::is_same_v<T, phys::Update>) {
          f(p.table);
          f(p.row);
          for (auto& field : p.fields) f(field.first);
        } else if constexpr (std::is_same_v<T, phys::Delete>) {
          f(p.table);
          f(p.row);
        } else if constexpr (std::is_same_v<T, phys::Index>) {
          f(p.table);
          for (auto& c : p.columns) f(c);
          f(p.ref_table);
          f(p.ref_index);
        } else if constexpr (std::is_same_v<T, phys::RestView>) {
          for (auto& c : p.columns) f(c.second.named);
          f(p.using_table);
        } else if constexpr (std::is_same_v<T, phys::Grant>) {
          f(p.object);
          f(p.grantee);
        } else if constexpr (std::is_same_v<T, phys::MetadataChange>) {
          f(p.target);
        } else if constexpr (std::is_same_v<T, phys::DomainDef>) {
          f(p.base.named);
        } else if constexpr (std::is_same_v<T, phys::Drop>) {
          f(p.target);
        } else if constexpr (std::is_same_v<T, phys::Alter>) {
          f(p.target);
        }
      },
      payload);
}

void write_metadata(ByteWriter& w, const Metadata& m) {
  w.varint(m.flags.size());
  for (const auto& f : m.flags) w.string(f);
  w.varint(m.strings.size());
  for (const auto& [k, v] : m.strings) {
    w.string(k);
    w.string(v);
  }
}

Metadata read_metadata(ByteReader& r) {
  Metadata m;
  auto n = r.varint();
  if (n > r.remaining()) r.fail("metadata count overruns record");
  for (std::uint64_t i = 0; i < n; ++i) m.flags.push_back(r.string());
  n = r.varint();
  if (n > r.remaining()) r.fail("metadata count overruns record");
  for (std::uint64_t i = 0; i < n; ++i) {
    auto k = r.string();
    m.strings.emplace_back(std::move(k), r.string());
  }
  return m;
}

void write_fields(ByteWriter& w, const Fields& fields) {
  w.varint(fields.size());
  for (const auto& [c, v] : fields) {
    w.uid(c);
    w.value(v);
  }
}

Fields read_fields(ByteReader& r) {
  Fields out;
  auto n = r.varint();
  if (n > r.remaining()) r.fail("field count overruns record");
  for (std::uint64_t i = 0; i < n; ++i) {
    Uid c = r.uid();
    out.emplace_back(c, r.value());
  }
  return out;
}

void write_body(ByteWriter& w, const Payload& payload) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, phys::TransactionHeader>) {
          w.uid(p.user);
          w.uid(p.role);
          w.varint(static_cast<std::uint64_t>(p.timestamp_us));
          w.varint(p.count);
        } else if constexpr (std::is_same_v<T, phys::Table>) {
          w.string(p.name);
          write_metadata(w, p.metadata);
        } else if constexpr (std::is_same_v<T, phys::Column>) {
          w.uid(p.table);
          w.string(p.name);
          w.domain(p.domain);
          w.zigzag(p.position);
          w.byte(p.not_null ? 1 : 0);
          w.value(p.default_value);
        } else if constexpr (std::is_same_v<T, phys::Record>) {
          w.uid(p.table);
          write_fields(w, p.fields);
        } else if constexpr (std::is_same_v<T, phys::Update>) {
          w.uid(p.table);
          w.uid(p.row);
          write_fields(w, p.fields);
        } else if constexpr (std::is_same_v<T, phys::Delete>) {
          w.uid(p.table);
          w.uid(p.row);
        } else if constexpr (std::is_same_v<T, phys::Index>) {
          w.uid(p.table);
          w.string(p.name);
          w.byte(static_cast<std::uint8_t>(p.kind));
          w.varint(p.columns.size());
          for (auto c : p.columns) w.uid(c);
          w.uid(p.ref_table);
          w.uid(p.ref_index);
          w.byte(static_cast<std::uint8_t>(p.on_delete));
          w.byte(static_cast<std::uint8_t>(p.on_update));
          w.string(p.check_source);
        } else if constexpr (std::is_same_v<T, phys::View>) {
          w.string(p.name);
          w.varint(p.columns.size());
          for (const auto& c : p.columns) w.string(c);
          w.string(p.source);
          write_metadata(w, p.metadata);
        } else if constexpr (std::is_same_v<T, phys::RestView>) {
          w.string(p.name);
          w.varint(p.columns.size());
          for (const auto& [n, d] : p.columns) {
            w.string(n);
            w.domain(d);
          }
          w.uid(p.using_table);
          write_metadata(w, p.metadata);
        } else if constexpr (std::is_same_v<T, phys::Role>) {
          w.string(p.name);
        } else if constexpr (std::is_same_v<T, phys::User>) {
          w.string(p.name);
          w.string(p.password_hash);
        } else if constexpr (std::is_same_v<T, phys::Grant>) {
          w.varint(p.privileges);
          w.uid(p.object);
          w.uid(p.grantee);
          w.byte(p.revoke ? 1 : 0);
        } else if constexpr (std::is_same_v<T, phys::MetadataChange>) {
          w.uid(p.target);
          write_metadata(w, p.metadata);
        } else if constexpr (std::is_same_v<T, phys::DomainDef>) {
          w.string(p.name);
          w.domain(p.base);
        } else if constexpr (std::is_same_v<T, phys::Drop>) {
          w.uid(p.target);
        } else if constexpr (std::is_same_v<T, phys::Alter>) {
          w.uid(p.target);
          w.byte(static_cast<std::uint8_t>(p.op));
          w.string(p.text);
          w.varint(p.columns.size());
          for (const auto& c : p.columns) w.string(c);
        }
      },
      payload);
}

template <class E>
E read_enum(ByteReader& r, std::uint8_t max, const char* what) {
  auto b = r.byte();
  if (b > max) r.fail(std::string("bad ") + what);
  return static_cast<E>(b);
}

bool read_flag(ByteReader& r) {
  auto b = r.byte();
  if (b > 1) r.fail("bad flag byte");
  return b == 1;
}

std::vector<std::string> read_strings(ByteReader& r) {
  std::vector<std::string> out;
  auto n = r.varint();
  if (n > r.remaining()) r.fail("count overruns record");
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(r.string());
  return out;
}

Payload read_body(ByteReader& r, PhysicalKind kind) {
  switch (kind) {
    case PhysicalKind::TransactionHeader: {
      phys::TransactionHeader h;
      h.user = r.uid();
      h.role = r.uid();
      h.timestamp_us = static_cast<std::int64_t>(r.varint());
      h.count = r.varint();
      return h;
    }
    case PhysicalKind::Table: {
      phys::Table t;
      t.name = r.string();
      t.metadata = read_metadata(r);
      return t;
    }
    case PhysicalKind::Column: {
      phys::Column c;
      c.table = r.uid();
      c.name = r.string();
      c.domain = r.domain();
      c.position = static_cast<std::int32_t>(r.zigzag());
      c.not_null = read_flag(r);
      c.default_value = r.value();
      return c;
    }
    case PhysicalKind::Record: {
      phys::Record rec;
      rec.table = r.uid();
      rec.fields = read_fields(r);
      return rec;
    }
    case PhysicalKind::Update: {
      phys::Update u;
      u.table = r.uid();
      u.row = r.uid();
      u.fields = read_fields(r);
      return u;
    }
    case PhysicalKind::Delete: {
      phys::Delete d;
      d.table = r.uid();
      d.row = r.uid();
      return d;
    }
    case PhysicalKind::Index: {
      phys::Index x;
      x.table = r.uid();
      x.name = r.string();
      x.kind = read_enum<IndexKind>(r, 4, "index kind");
      auto n = r.varint();
      if (n > r.remaining()) r.fail("column count overruns record");
      for (std::uint64_t i = 0; i < n; ++i) x.columns.push_back(r.uid());
      x.ref_table = r.uid();
      x.ref_index = r.uid();
      x.on_delete = read_enum<FkAction>(r, 2, "referential action");
      x.on_update = read_enum<FkAction>(r, 2, "referential action");
      x.check_source = r.string();
      return x;
    }
    case PhysicalKind::View: {
      phys::View v;
      v.name = r.string();
      v.columns = read_strings(r);
      v.source = r.string();
      v.metadata = read_metadata(r);
      return v;
    }
    case PhysicalKind::RestView: {
      phys::RestView v;
      v.name = r.string();
      auto n = r.varint();
      if (n > r.remaining()) r.fail("column count overruns record");
      for (std::uint64_t i = 0; i < n; ++i) {
        auto name = r.string();
        v.columns.emplace_back(std::move(name), r.domain());
      }
      v.using_table = r.uid();
      v.metadata = read_metadata(r);
      return v;
    }
    case PhysicalKind::Role: return phys::Role{r.string()};
    case PhysicalKind::User: {
      phys::User u;
      u.name = r.string();
      u.password_hash = r.string();
      return u;
    }
    case PhysicalKind::Grant: {
      phys::Grant g;
      g.privileges = static_cast<std::uint32_t>(r.varint());
      g.object = r.uid();
      g.grantee = r.uid();
      g.revoke = read_flag(r);
      return g;
    }
    case PhysicalKind::Metadata: {
      phys::MetadataChange m;
      m.target = r.uid();
      m.metadata = read_metadata(r);
      return m;
    }
    case PhysicalKind::Domain: {
      phys::DomainDef d;
      d.name = r.string();
      d.base = r.domain();
      return d;
    }
    case PhysicalKind::Drop: return phys::Drop{r.uid()};
    case PhysicalKind::Alter: {
      phys::Alter a;
      a.target = r.uid();
      a.op = read_enum<AlterOp>(r, 2, "alter operation");
      a.text = r.string();
      a.columns = read_strings(r);
      return a;
    }
  }
  r.fail("unknown physical kind");
}

}  // namespace

void for_each_uid(const Payload& p, const std::function<void(Uid)>& f) {
  visit_uids(p, [&](const Uid& u) { f(u); });
}

void for_each_uid(Payload& p, const std::function<void(Uid&)>& f) {
  visit_uids(p, [&](Uid& u) { f(u); });
}

std::optional<Uid> row_table(const Physical& p) {
  if (auto r = p.get_if<phys::Record>()) return r->table;
  if (auto u = p.get_if<phys::Update>()) return u->table;
  if (auto d = p.get_if<phys::Delete>()) return d->table;
  return std::nullopt;
}

void encode_physical(const Physical& p, std::vector<std::uint8_t>& out) {
  ByteWriter body;
  write_body(body, p.payload);
  ByteWriter head;
  head.byte(static_cast<std::uint8_t>(p.kind()));
  head.varint(body.size());
  out.insert(out.end(), head.data().begin(), head.data().end());
  out.insert(out.end(), body.data().begin(), body.data().end());
}

std::vector<std::uint8_t> encode_physical(const Physical& p) {
  std::vector<std::uint8_t> out;
  encode_physical(p, out);
  return out;
}

std::pair<Physical, std::uint64_t> decode_physical(std::span<const std::uint8_t> file, std::uint64_t pos) {
  if (pos >= file.size()) throw LogCorruption(pos, "offset beyond end of log");
  ByteReader head(file.subspan(static_cast<std::size_t>(pos)), pos);
  auto tag = head.byte();
  if (tag < 1 || tag > static_cast<std::uint8_t>(PhysicalKind::Alter))
    throw LogCorruption(pos, "unknown physical kind tag " + std::to_string(tag));
  auto length = head.varint();
  if (length > head.remaining()) throw LogCorruption(pos, "record length overruns log");
  const auto body_start = pos + head.position();
  ByteReader body(file.subspan(static_cast<std::size_t>(body_start), static_cast<std::size_t>(length)), body_start);
  Physical p{Uid{static_cast<std::int64_t>(pos)}, read_body(body, static_cast<PhysicalKind>(tag))};
  if (!body.at_end()) throw LogCorruption(body.offset(), "trailing bytes inside record");
  return {std::move(p), body_start + length};
}

Physical relocate(const Physical& p, const std::unordered_map<Uid, Uid>& map) {
  Physical out = p;
  for_each_uid(out.payload, [&](Uid& u) {
    if (!u.is_temporary()) return;
    auto it = map.find(u);
    if (it == map.end()) throw RelocationError("unmapped transaction uid " + std::to_string(u.value()));
    u = it->second;
  });
  return out;
}

}  // namespace pyrlite
