#include "pyrlite/rest/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <strings.h>

#include "pyrlite/errors.hpp"
#include "pyrlite/rest/remote.hpp"
#include "pyrlite/sql/parser.hpp"
#include "pyrlite/sql/session.hpp"

namespace pyrlite::rest {

using sql::Json;

namespace {

/// An HTTP outcome that is not an engine error.
struct Status : Error {
  Status(int code, const std::string& msg, Json extra = Json::object()) : Error(msg), code(code), extra(std::move(extra)) {}
  int code;
  Json extra;
};

Response json_response(int status, const Json& body) {
  Response r;
  r.status = status;
  r.headers["Content-Type"] = "application/json";
  r.body = body.dump();
  return r;
}

Response error_response(int status, const std::string& message, Json extra = Json::object()) {
  extra["error"] = message;
  return json_response(status, extra);
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::optional<Uid> lookup(const Snapshot& s, Namespace ns, const std::string& name) {
  if (auto u = s.lookup(ns, name)) return u;
  return s.lookup(ns, upper(name));
}

const char* kind_text(DomainKind k) {
  switch (k) {
    case DomainKind::Null: return "null";
    case DomainKind::Integer: return "integer";
    case DomainKind::Real: return "numeric";
    case DomainKind::Char: return "char";
    case DomainKind::Boolean: return "boolean";
    case DomainKind::Date: return "date";
  }
  return "null";
}

DomainKind kind_from(const std::string& s) {
  for (auto k : {DomainKind::Integer, DomainKind::Real, DomainKind::Char, DomainKind::Boolean, DomainKind::Date})
    if (s == kind_text(k)) return k;
  return DomainKind::Null;
}

bool is_visualization(const std::string& query) {
  static const char* words[] = {"PIE", "HISTOGRAM", "LINE", "POINTS", "X", "Y", "CAPTION", "LEGEND"};
  std::size_t n = 0;
  while (n < query.size() && std::isalpha(static_cast<unsigned char>(query[n]))) ++n;
  if (n == 0 || (n < query.size() && query[n] != '(')) return false;
  const std::string word = upper(query.substr(0, n));
  return std::any_of(std::begin(words), std::end(words), [&](const char* w) { return word == w; });
}

/// The remote select parameters, or a plain WHERE conjunct.
struct Query {
  std::vector<std::string> select;  // column names; empty means all
  std::string where;
  std::vector<sql::RemoteAggregate> aggregates;
  bool keys = false;
};

Query parse_request_query(const std::string& raw) {
  Query q;
  if (raw.empty()) return q;
  auto params = parse_query(raw);
  const bool wire = !params.empty() && std::all_of(params.begin(), params.end(), [](const auto& p) {
    return p.first == "select" || p.first == "where" || p.first == "agg" || p.first == "keys";
  });
  if (!wire) {
    q.where = decode_component(raw);
    return q;
  }
  for (const auto& [k, v] : params) {
    if (k == "where") {
      q.where = v;
    } else if (k == "keys") {
      q.keys = v != "0";
    } else if (k == "select" && !v.empty()) {
      for (const auto& item : sql::parse_select("select " + v).items) {
        if (item.star || item.expr->kind != sql::ExprKind::Column || item.expr->name.size() != 1)
          throw SyntaxError("select= takes column names only", 1, 1);
        q.select.push_back(item.expr->name.back());
      }
    } else if (k == "agg" && !v.empty()) {
      for (const auto& item : sql::parse_select("select " + v).items) {
        if (item.star || item.expr->kind != sql::ExprKind::Aggregate)
          throw SyntaxError("agg= takes aggregate calls only", 1, 1);
        sql::RemoteAggregate a;
        a.kind = item.expr->agg;
        if (!item.expr->flag) {
          const auto& arg = *item.expr->args.at(0);
          if (arg.kind != sql::ExprKind::Column || arg.name.size() != 1)
            throw SyntaxError("aggregates take a single column", 1, 1);
          a.column = arg.name.back();
        }
        q.aggregates.push_back(a);
      }
    }
  }
  return q;
}

std::string key_text(const Snapshot& s, const SchemaObject& table, const Row& row) {
  const SchemaObject* pk = s.primary_key(table.uid);
  if (!pk) return std::to_string(row.uid.value());
  std::string out;
  for (Uid c : pk->columns) out += (out.empty() ? "" : "/") + encode_component(row.get(c).to_string());
  return out;
}

std::optional<std::size_t> find_name(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (::strcasecmp(names[i].c_str(), name.c_str()) == 0) return i;
  return std::nullopt;
}

/// A column of `table` by name, folding case like SQL does.
const SchemaObject* column_named(const Snapshot& s, const SchemaObject& table, const std::string& name) {
  for (Uid c : table.columns) {
    const SchemaObject* col = s.object(c);
    if (col && (col->name == name || col->name == upper(name))) return col;
  }
  return nullptr;
}

}  // namespace

Json class_model_json(const ClassModel& m) {
  Json j;
  j["name"] = m.name;
  j["defining_pos"] = m.defining_pos;
  j["schema_key"] = m.schema_key;
  j["columns"] = Json::array();
  for (const auto& c : m.columns)
    j["columns"].push_back(
        {{"name", c.name}, {"domain", c.domain}, {"kind", kind_text(c.kind)}, {"key", c.key}, {"autokey", c.autokey}});
  j["key"] = m.key;
  j["unique"] = m.unique;
  j["navigation"] = Json::array();
  for (const auto& n : m.navigation)
    j["navigation"].push_back({{"name", n.name},
                               {"target", n.target},
                               {"many", n.many},
                               {"target_fields", n.target_fields},
                               {"local_fields", n.local_fields}});
  return j;
}

ClassModel class_model_from_json(const Json& j) {
  ClassModel m;
  m.name = j.at("name").get<std::string>();
  m.defining_pos = j.at("defining_pos").get<std::int64_t>();
  m.schema_key = j.at("schema_key").get<std::int64_t>();
  for (const auto& c : j.at("columns"))
    m.columns.push_back({c.at("name").get<std::string>(), c.at("domain").get<std::string>(),
                         kind_from(c.at("kind").get<std::string>()), c.at("key").get<bool>(),
                         c.at("autokey").get<bool>()});
  m.key = j.at("key").get<std::vector<std::string>>();
  m.unique = j.at("unique").get<std::vector<std::vector<std::string>>>();
  for (const auto& n : j.at("navigation"))
    m.navigation.push_back({n.at("name").get<std::string>(), n.at("target").get<std::string>(),
                            n.at("many").get<bool>(), n.at("target_fields").get<std::vector<std::string>>(),
                            n.at("local_fields").get<std::vector<std::string>>()});
  return m;
}

std::string row_etag(const Row& row) {
  return "\"" + std::to_string(row.uid.value()) + "-" + std::to_string(row.last_change.value()) + "\"";
}

std::string rowset_etag(const Snapshot& s) { return "\"" + std::to_string(s.watermark) + "\""; }

struct Service::Call {
  const Request& req;
  std::vector<std::string> segments;
  std::string query;
  std::shared_ptr<Database> db;
  Uid user;
  Uid role;
  std::unique_ptr<HttpRemoteSource> remote;

  const std::string* header(const std::string& name) const {
    auto it = req.headers.find(name);
    return it == req.headers.end() ? nullptr : &it->second;
  }
};

Service::Service(ServiceOptions options) : options_(std::move(options)) {}
Service::~Service() = default;

void Service::attach(std::shared_ptr<Database> db) {
  sql::install_check_evaluator(*db);
  std::lock_guard lock(mu_);
  open_[db->name()] = std::move(db);
}

std::shared_ptr<Database> Service::database(const std::string& name) {
  std::lock_guard lock(mu_);
  if (auto it = open_.find(name); it != open_.end()) return it->second;
  if (name.empty() || name.find_first_of("/\\") != std::string::npos || name[0] == '.') return nullptr;
  const auto file = options_.data_dir / (name + ".pyl");
  if (!std::filesystem::exists(file)) return nullptr;
  auto db = Database::open(file, options_.database);
  sql::install_check_evaluator(*db);
  open_[name] = db;
  return db;
}

Response Service::handle(const Request& r) {
  Call c{r, {}, {}, nullptr, {}, {}, nullptr};
  auto q = r.target.find('?');
  const std::string path = r.target.substr(0, q);
  if (q != std::string::npos) c.query = r.target.substr(q + 1);
  std::size_t at = 0;
  while (at < path.size()) {
    auto next = path.find('/', at);
    if (next == std::string::npos) next = path.size();
    if (next > at) c.segments.push_back(decode_component(path.substr(at, next - at)));
    at = next + 1;
  }
  try {
    return dispatch(c);
  } catch (const Status& e) {
    return error_response(e.code, e.what(), e.extra);
  } catch (const AuthenticationError& e) {
    Response res = error_response(401, e.what());
    res.headers["WWW-Authenticate"] = "Basic realm=\"pyrlite\"";
    return res;
  } catch (const AuthorizationError& e) {
    return error_response(403, e.what());
  } catch (const NotFound& e) {
    return error_response(404, e.what());
  } catch (const ConflictError& e) {
    Response res = error_response(409, e.what(), {{"reason", reason_name(e.report().reason)}});
    res.headers["X-Error-Kind"] = "conflict";
    return res;
  } catch (const ConstraintError& e) {
    Response res = error_response(409, e.what());
    res.headers["X-Error-Kind"] = "constraint";
    return res;
  } catch (const RemoteError& e) {
    const int status = e.status() >= 400 && e.status() < 600 ? e.status() : 502;
    return error_response(status, e.what());
  } catch (const SyntaxError& e) {
    return error_response(400, e.what());
  } catch (const SchemaError& e) {
    return error_response(400, e.what());
  } catch (const SqlError& e) {
    return error_response(400, e.what());
  } catch (const Json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

Response Service::dispatch(Call& c) {
  if (c.segments.size() < 2) throw Status(404, "paths have the form /{database}/{role}/{table}");
  c.db = database(c.segments[0]);
  if (!c.db) throw NotFound("unknown database " + c.segments[0]);

  const std::string* auth = c.header("Authorization");
  auto creds = auth ? parse_basic(*auth) : std::nullopt;
  if (!creds) throw AuthenticationError("credentials required");
  c.user = c.db->authenticate(creds->first, creds->second);

  auto snap = c.db->snapshot();
  auto role = lookup(*snap, Namespace::Role, c.segments[1]);
  if (!role) throw NotFound("unknown role " + c.segments[1]);
  if (!can_use_role(*snap, c.user, *role))
    throw AuthorizationError("user " + creds->first + " has not been granted role " + c.segments[1]);
  c.role = *role;
  if (transport_) c.remote = std::make_unique<HttpRemoteSource>(*transport_);

  if (c.segments.size() == 2) {
    if (c.req.method == "GET")
      return json_response(200, {{"database", c.db->name()}, {"role", snap->object(c.role)->name}, {"user", creds->first}});
    if (c.req.method != "POST") throw Status(405, "only GET, or POST of SQL text, is allowed here");
    return run_sql(c);
  }
  if (c.segments[2] == "$class") {
    if (c.req.method != "GET") throw Status(405, "class models are read-only");
    return class_model(c);
  }
  if (is_visualization(decode_component(c.query)))
    throw Status(501, "visualization output is not implemented", {{"selector", decode_component(c.query)}});

  const auto rel = lookup(*snap, Namespace::Relation, c.segments[2]);
  if (!rel) throw NotFound("unknown table or view " + c.segments[2]);
  const SchemaObject& obj = *snap->object(*rel);
  if (c.req.method == "GET") return get(c);
  if (obj.kind == ObjectKind::RestView) return rest_write(c);
  if (obj.kind != ObjectKind::Table) throw Status(405, obj.name + " is a view and cannot be changed over HTTP");
  if (c.req.method == "POST") {
    if (c.segments.size() > 3) throw Status(405, "POST goes to the table, not to a row");
    return post(c);
  }
  if (c.req.method == "PUT" || c.req.method == "DELETE") return put_or_delete(c);
  throw Status(405, "method " + c.req.method + " is not allowed");
}

namespace {

/// Rows of a relation for one request, with row identities for tables.
struct Fetched {
  std::vector<std::string> names;
  std::vector<Domain> domains;
  std::vector<sql::Tuple> rows;
  std::vector<RowPtr> base;  // tables only, aligned with rows
};

sql::ExprPtr key_condition(const Snapshot& s, const SchemaObject& table, const std::vector<std::string>& key) {
  const SchemaObject* pk = s.primary_key(table.uid);
  std::string cond;
  if (!pk) {
    if (key.size() != 1) throw NotFound("no row " + table.name);
    if (key[0].empty() || !std::all_of(key[0].begin(), key[0].end(), ::isdigit) || key[0].size() > 18)
      throw NotFound("no row " + key[0] + " in " + table.name);
    return {};
  }
  if (key.size() != pk->columns.size())
    throw NotFound("the key of " + table.name + " has " + std::to_string(pk->columns.size()) + " parts");
  for (std::size_t i = 0; i < key.size(); ++i) {
    const SchemaObject& col = *s.object(pk->columns[i]);
    Value v;
    try {
      v = sql::from_json(Json(key[i]), col.domain);
    } catch (const Error&) {
      throw NotFound("no row " + key[i] + " in " + table.name);
    }
    cond += (cond.empty() ? "" : " AND ") + sql::quote_identifier(col.name) + " = " + v.to_sql();
  }
  return sql::parse_expression(cond);
}

sql::ExprPtr conjoin(sql::ExprPtr a, sql::ExprPtr b) {
  if (!a) return b;
  if (!b) return a;
  sql::Expr e;
  e.kind = sql::ExprKind::Binary;
  e.op = "AND";
  e.args = {std::move(a), std::move(b)};
  return e;
}

Fetched fetch(Transaction& tx, Uid role, sql::RemoteSource* remote, const SchemaObject& rel, const Query& q,
              const std::vector<std::string>& key) {
  const Snapshot& s = tx.state();
  Fetched out;
  sql::ExprPtr where = q.where.empty() ? sql::ExprPtr{} : sql::parse_expression(q.where);
  sql::Binder binder(tx, role);

  // Bind an ordinary SELECT first: it applies every privilege check.
  sql::Select sel;
  sel.from.push_back({rel.name, ""});
  if (q.select.empty()) {
    sql::SelectItem star;
    star.star = true;
    sel.items.push_back(star);
  } else {
    for (const auto& name : q.select) {
      sql::Expr col;
      col.kind = sql::ExprKind::Column;
      col.name = {name};
      sel.items.push_back({col, "", false, ""});
    }
  }
  sel.where = where;

  if (rel.kind != ObjectKind::Table) {
    if (!key.empty()) throw NotFound("views have no row addresses");
    sql::PlanPtr plan = sql::review(binder.select(sel));
    sql::Executor ex(tx, remote);
    out.names = plan->names;
    out.domains = plan->domains;
    out.rows = ex.rows(*plan);
    return out;
  }

  sql::Binder check(tx, role);
  check.select(sel);
  Uid by_uid;
  if (!key.empty()) {
    if (s.primary_key(rel.uid)) {
      where = conjoin(where, key_condition(s, rel, key));
    } else {
      key_condition(s, rel, key);
      by_uid = Uid{std::stoll(key[0])};
    }
  }
  auto scope = binder.table(rel.name, "", where);
  sql::PlanPtr plan = sql::review(scope.plan);
  sql::Executor ex(tx, remote);
  auto rows = ex.rows(*plan);

  std::vector<std::size_t> positions;
  if (q.select.empty()) {
    for (std::size_t i = 0; i + 1 < plan->names.size(); ++i) positions.push_back(i);
  } else {
    for (const auto& name : q.select) {
      auto at = find_name(plan->names, name);
      if (!at || *at + 1 == plan->names.size()) throw SchemaError("unknown column " + name);
      positions.push_back(*at);
    }
  }
  for (auto p : positions) {
    out.names.push_back(plan->names[p]);
    out.domains.push_back(plan->domains[p]);
  }
  for (const auto& t : rows) {
    const Uid uid{*t.back().to_int64()};
    if (!by_uid.is_null() && uid != by_uid) continue;
    sql::Tuple picked;
    for (auto p : positions) picked.push_back(t[p]);
    out.rows.push_back(std::move(picked));
    out.base.push_back(s.row(rel.uid, uid));
  }
  return out;
}

}  // namespace

Response Service::get(Call& c) {
  Transaction tx = c.db->begin(c.user, c.role);
  const Snapshot& s = tx.state();
  const SchemaObject& rel = *s.object(*lookup(s, Namespace::Relation, c.segments[2]));
  const Query q = parse_request_query(c.query);
  const std::vector<std::string> key(c.segments.begin() + 3, c.segments.end());

  if (!q.aggregates.empty()) {
    if (!key.empty()) throw Status(400, "aggregates apply to rowsets");
    Query all = q;
    all.select.clear();
    for (const auto& a : q.aggregates)
      if (!a.column.empty()) all.select.push_back(a.column);
    Fetched f = fetch(tx, c.role, c.remote.get(), rel, all, {});
    Json regs = Json::object();
    std::size_t next = 0;
    for (const auto& a : q.aggregates) {
      sql::AggRegister r = sql::empty_register(a.kind);
      const std::size_t col = a.column.empty() ? 0 : next++;
      for (const auto& row : f.rows) sql::accumulate(r, a.column.empty() ? Value{} : row[col], a.column.empty());
      regs[a.label()] = sql::register_json(r);
    }
    Response res = json_response(200, {{"$registers", regs}});
    res.headers["ETag"] = rowset_etag(*c.db->snapshot());
    return res;
  }

  Fetched f = fetch(tx, c.role, c.remote.get(), rel, q, key);
  if (!key.empty()) {
    if (f.rows.empty()) throw NotFound("no row " + c.segments[3] + " in " + rel.name);
    const std::string etag = row_etag(*f.base[0]);
    if (const std::string* inm = c.header("If-None-Match"); inm && (*inm == etag || *inm == "*")) {
      Response res;
      res.status = 304;
      res.headers["ETag"] = etag;
      return res;
    }
    Response res = json_response(200, sql::row_json(f.names, f.rows[0]));
    res.headers["ETag"] = etag;
    return res;
  }

  const std::string etag = rowset_etag(s);
  if (const std::string* inm = c.header("If-None-Match"); inm && *inm == etag) {
    Response res;
    res.status = 304;
    res.headers["ETag"] = etag;
    return res;
  }
  Json rows = Json::array();
  for (std::size_t i = 0; i < f.rows.size(); ++i) {
    Json row = sql::row_json(f.names, f.rows[i]);
    if (q.keys && !f.base.empty()) {
      row["$key"] = key_text(s, rel, *f.base[i]);
      row["$etag"] = row_etag(*f.base[i]);
    }
    rows.push_back(std::move(row));
  }
  Response res = json_response(200, rows);
  res.headers["ETag"] = etag;
  return res;
}

namespace {

Fields fields_from(const Snapshot& s, const SchemaObject& table, const Json& body) {
  if (!body.is_object()) throw Status(400, "expected a JSON object of column values");
  Fields out;
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (!it.key().empty() && it.key()[0] == '$') continue;
    const SchemaObject* col = column_named(s, table, it.key());
    if (!col) throw SchemaError("unknown column " + it.key() + " in " + table.name);
    out.emplace_back(col->uid, sql::from_json(*it, col->domain));
  }
  return out;
}

Json stored_row(const Snapshot& s, const SchemaObject& table, const Row& row) {
  Json j = Json::object();
  for (Uid c : table.columns) j[s.object(c)->name] = sql::to_json(row.get(c));
  j["$key"] = key_text(s, table, row);
  j["$etag"] = row_etag(row);
  return j;
}

}  // namespace

Response Service::post(Call& c) {
  Transaction tx = c.db->begin(c.user, c.role);
  const Snapshot& s = tx.state();
  const SchemaObject& table = *s.object(*lookup(s, Namespace::Relation, c.segments[2]));
  const Json body = Json::parse(c.req.body.empty() ? std::string("{}") : c.req.body);
  std::vector<Uid> temps;
  if (body.is_array()) {
    for (const auto& item : body) temps.push_back(tx.insert(table.uid, fields_from(s, table, item)));
  } else {
    temps.push_back(tx.insert(table.uid, fields_from(s, table, body)));
  }
  CommitResult done = c.db->commit(tx);
  const Snapshot& after = *done.snapshot;
  Json rows = Json::array();
  RowPtr last;
  for (Uid t : temps) {
    auto it = done.relocation.find(t);
    last = after.row(table.uid, it == done.relocation.end() ? t : it->second);
    if (last) rows.push_back(stored_row(after, table, *last));
  }
  Response res = json_response(201, body.is_array() ? rows : rows.at(0));
  if (!body.is_array() && last) {
    res.headers["ETag"] = row_etag(*last);
    res.headers["Location"] = "/" + encode_component(c.segments[0]) + "/" + encode_component(c.segments[1]) + "/" +
                              encode_component(table.name) + "/" + key_text(after, table, *last);
  }
  return res;
}

Response Service::put_or_delete(Call& c) {
  if (c.segments.size() < 4) throw Status(405, c.req.method + " addresses a single row");
  const std::string* if_match = c.header("If-Match");
  if (!if_match) throw Status(412, c.req.method + " requires If-Match");

  Transaction tx = c.db->begin(c.user, c.role);
  const Snapshot& s = tx.state();
  const SchemaObject& table = *s.object(*lookup(s, Namespace::Relation, c.segments[2]));
  Query all;
  Fetched f = fetch(tx, c.role, nullptr, table, all, {c.segments.begin() + 3, c.segments.end()});
  if (f.rows.empty()) throw NotFound("no row " + c.segments[3] + " in " + table.name);
  const Row& row = *f.base[0];
  const std::string etag = row_etag(row);
  if (*if_match != "*" && *if_match != etag)
    throw Status(412, "precondition failed: the row has changed", {{"etag", etag}});

  if (c.req.method == "PUT")
    tx.update(table.uid, row.uid, fields_from(s, table, Json::parse(c.req.body)));
  else
    tx.remove(table.uid, row.uid);

  CommitResult done;
  try {
    done = c.db->commit(tx);
  } catch (const ConflictError& e) {
    // Someone changed the addressed row after we compared its ETag.
    if (e.report().object == row.uid) throw Status(412, "precondition failed: the row has changed");
    throw;
  }
  if (c.req.method == "DELETE") {
    Response res;
    res.status = 204;
    return res;
  }
  RowPtr now = done.snapshot->row(table.uid, row.uid);
  if (!now) throw NotFound("row " + c.segments[3] + " was removed by a cascade");
  Response res = json_response(200, stored_row(*done.snapshot, table, *now));
  res.headers["ETag"] = row_etag(*now);
  return res;
}

Response Service::rest_write(Call& c) {
  if (!transport_) throw RemoteError("this server has no transport for RESTViews", 502);
  Transaction tx = c.db->begin(c.user, c.role);
  const Snapshot& s = tx.state();
  const SchemaObject& view = *s.object(*lookup(s, Namespace::Relation, c.segments[2]));
  if (!view.using_table.is_null())
    throw Status(405, "RESTView " + view.name + " has several contributors and is read-only over HTTP");
  const std::string& m = c.req.method;
  if (m != "POST" && m != "PUT" && m != "DELETE") throw Status(405, "method " + m + " is not allowed");
  const std::uint32_t action = m == "POST" ? kInsert : m == "PUT" ? kUpdate : kDelete;
  if (!check_privilege(s, c.user, c.role, view.uid, action))
    throw AuthorizationError("permission denied: " + m + " on view " + view.name);
  tx.note_object_read(view.uid);

  const std::string* url = view.metadata.get("URL");
  if (!url) throw Status(405, "RESTView " + view.name + " has no url");
  Headers auth;
  if (const std::string* u = view.metadata.get("USER")) {
    const std::string* pw = view.metadata.get("PASSWORD");
    auth["Authorization"] = basic_credentials(*u, pw ? *pw : std::string());
  }

  // Rows are addressable only when the contributor's key is among the view's columns.
  Url where = split_url(*url);
  std::vector<std::string> parts;
  for (std::size_t at = 1; at <= where.target.size();) {
    auto next = where.target.find_first_of("/?", at);
    if (next == std::string::npos) next = where.target.size();
    if (next > at) parts.push_back(where.target.substr(at, next - at));
    if (next < where.target.size() && where.target[next] == '?') break;
    at = next + 1;
  }
  if (parts.size() != 3) throw Status(405, "RESTView " + view.name + " does not address a single remote table");
  Response mr = transport_->send_url("GET", where.origin + "/" + parts[0] + "/" + parts[1] + "/$class/" + parts[2], auth);
  if (mr.status != 200) throw_for(mr, *url);
  const ClassModel model = class_model_from_json(Json::parse(mr.body));
  if (model.key.empty()) throw Status(405, "the contributor table of " + view.name + " has no primary key");
  for (const auto& k : model.key) {
    bool exposed = std::any_of(view.rest_columns.begin(), view.rest_columns.end(),
                               [&](const auto& rc) { return ::strcasecmp(rc.first.c_str(), k.c_str()) == 0; });
    if (!exposed) throw Status(405, "RESTView " + view.name + " does not expose the key column " + k);
  }

  RemoteWrite w;
  w.contributor = sql::contributor_of(*url);
  w.method = m;
  w.url = where.origin + "/" + parts[0] + "/" + parts[1] + "/" + parts[2];
  if (m == "POST") {
    if (c.segments.size() > 3) throw Status(405, "POST goes to the view, not to a row");
  } else {
    if (c.segments.size() < 4) throw Status(405, m + " addresses a single row");
    const std::string* if_match = c.header("If-Match");
    if (!if_match) throw Status(412, m + " requires If-Match");
    w.if_match = *if_match;
    for (std::size_t i = 3; i < c.segments.size(); ++i) w.url += "/" + encode_component(c.segments[i]);
  }
  w.body = c.req.body;
  tx.stage_remote(w);

  Response relayed;
  RemoteExecutor forward = [&](const std::vector<RemoteWrite>& writes) {
    for (const auto& x : writes) {
      Headers h = auth;
      if (!x.if_match.empty()) h["If-Match"] = x.if_match;
      h["Content-Type"] = "application/json";
      relayed = transport_->send_url(x.method, x.url, h, x.body);
      if (relayed.status == 412) throw Status(412, "precondition failed at " + x.url);
      if (relayed.status < 200 || relayed.status >= 300) throw_for(relayed, x.method + " " + x.url);
    }
  };
  c.db->commit(tx, &forward);
  relayed.headers.erase("Location");
  return relayed;
}

Response Service::run_sql(Call& c) {
  sql::Session session(c.db, c.user, c.role);
  if (c.remote) session.set_remote(c.remote.get());
  if (transport_) session.set_remote_writer(remote_writer(*transport_));
  const auto statements = sql::parse_script(c.req.body);
  if (statements.empty()) throw Status(400, "no statement");
  for (const auto& st : statements) {
    if (std::holds_alternative<sql::Begin>(st) || std::holds_alternative<sql::Commit>(st) ||
        std::holds_alternative<sql::Rollback>(st) || std::holds_alternative<sql::SetRole>(st))
      throw Status(400, "each request is its own transaction under the role in its path");
  }
  Json out = Json::object();
  for (const auto& st : statements) {
    sql::StatementResult r = session.execute(st);
    out = Json::object();
    if (r.has_rows) {
      out["columns"] = r.rows.columns;
      Json rows = Json::array();
      for (const auto& t : r.rows.to_vector()) {
        Json row = Json::array();
        for (const auto& v : t) row.push_back(sql::to_json(v));
        rows.push_back(std::move(row));
      }
      out["rows"] = std::move(rows);
    }
    if (r.affected >= 0) out["affected"] = r.affected;
    if (!r.message.empty()) out["message"] = r.message;
  }
  return json_response(200, out);
}

Response Service::class_model(Call& c) {
  if (c.segments.size() != 4) throw NotFound("class models are at /{database}/{role}/$class/{table}");
  auto snap = c.db->snapshot();
  auto table = lookup(*snap, Namespace::Relation, c.segments[3]);
  if (!table) throw NotFound("unknown table " + c.segments[3]);
  return json_response(200, class_model_json(generate_class_model(*snap, c.user, c.role, snap->object(*table)->name)));
}

HttpServer::HttpServer(Service& s) : service_(s), server_(std::make_unique<httplib::Server>()) {
  // Method routes rather than a pre-routing hook, which runs before the body is read.
  auto serve = [this](const httplib::Request& in, httplib::Response& out) {
    Request r;
    r.method = in.method;
    r.target = in.target;
    r.body = in.body;
    for (const auto& [k, v] : in.headers) r.headers[k] = v;
    Response res = service_.handle(r);
    out.status = res.status;
    for (const auto& [k, v] : res.headers)
      if (::strcasecmp(k.c_str(), "Content-Type") != 0) out.set_header(k, v);
    auto type = res.headers.find("Content-Type");
    out.set_content(res.body, type == res.headers.end() ? "application/json" : type->second.c_str());
  };
  server_->Get(".*", serve);
  server_->Post(".*", serve);
  server_->Put(".*", serve);
  server_->Delete(".*", serve);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace pyrlite::rest
