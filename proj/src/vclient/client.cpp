#include "pyrlite/vclient/client.hpp"

#include <algorithm>
#include <strings.h>

#include "pyrlite/rest/remote.hpp"
#include "pyrlite/rest/service.hpp"
#include "pyrlite/sql/ast.hpp"
#include "pyrlite/sql/json.hpp"

namespace pyrlite::vclient {

using sql::Json;

namespace {

const Value kNull;

const ClassModel::Column* column(const ClassModel& m, const std::string& name) {
  for (const auto& c : m.columns)
    if (::strcasecmp(c.name.c_str(), name.c_str()) == 0) return &c;
  return nullptr;
}

std::string key_path(const std::vector<Value>& key) {
  std::string out;
  for (const auto& v : key) out += (out.empty() ? "" : "/") + rest::encode_component(v.to_string());
  return out;
}

}  // namespace

const Value& Record::get(const std::string& name) const {
  auto it = fields.find(name);
  if (it != fields.end()) return it->second;
  for (const auto& [k, v] : fields)
    if (::strcasecmp(k.c_str(), name.c_str()) == 0) return v;
  return kNull;
}

Connection Connection::connect(rest::Transport& t, Profile p, const std::vector<Expected>& expected) {
  Connection c(t, std::move(p));
  rest::Response r = c.send("GET", "");
  if (r.status != 200) rest::throw_for(r, "connect to " + c.base());
  for (const auto& e : expected) {
    ClassModel m = c.fetch_model(e.table);
    if (m.defining_pos != e.defining_pos || m.schema_key != e.schema_key)
      throw SchemaDrift("schema drift: table " + e.table + " is (" + std::to_string(m.defining_pos) + "," +
                        std::to_string(m.schema_key) + ") on the server, the model expects (" +
                        std::to_string(e.defining_pos) + "," + std::to_string(e.schema_key) + ")");
    c.models_[e.table] = std::move(m);
  }
  return c;
}

std::string Connection::base() const {
  return profile_.server + "/" + rest::encode_component(profile_.database) + "/" +
         rest::encode_component(profile_.role);
}

rest::Response Connection::send(const std::string& method, const std::string& path, const std::string& body,
                                const std::string& if_match) {
  rest::Headers h;
  h["Authorization"] = rest::basic_credentials(profile_.user, profile_.password);
  h["Accept"] = "application/json";
  if (!body.empty()) h["Content-Type"] = "application/json";
  if (!if_match.empty()) h["If-Match"] = if_match;
  return transport_->send_url(method, base() + path, h, body);
}

ClassModel Connection::fetch_model(const std::string& table) {
  rest::Response r = send("GET", "/$class/" + rest::encode_component(table));
  if (r.status != 200) rest::throw_for(r, "model of " + table);
  return rest::class_model_from_json(Json::parse(r.body));
}

const ClassModel& Connection::model(const std::string& table) {
  auto it = models_.find(table);
  if (it != models_.end()) return it->second;
  ClassModel m = fetch_model(table);
  models_[table] = m;
  return models_[m.name] = std::move(m);
}

Record Connection::create(const std::string& table) {
  const ClassModel& m = model(table);
  Record r;
  r.table = m.name;
  r.defining_pos = m.defining_pos;
  r.schema_key = m.schema_key;
  return r;
}

Record Connection::from_json(const ClassModel& m, const std::string& body, const std::string* etag) {
  const Json j = Json::parse(body);
  Record r;
  r.table = m.name;
  r.defining_pos = m.defining_pos;
  r.schema_key = m.schema_key;
  for (const auto& c : m.columns) {
    auto it = j.find(c.name);
    r.fields[c.name] = it == j.end() ? Value{} : sql::from_json(*it, Domain{c.kind});
  }
  if (auto k = j.find("$key"); k != j.end()) r.key = k->get<std::string>();
  if (auto e = j.find("$etag"); e != j.end()) r.etag = e->get<std::string>();
  if (etag) r.etag = *etag;
  if (r.key.empty() && !m.key.empty()) {
    std::vector<Value> key;
    for (const auto& k : m.key) key.push_back(r.get(k));
    r.key = key_path(key);
  }
  return r;
}

std::vector<Record> Connection::query(const ClassModel& m,
                                      const std::vector<std::pair<std::string, Value>>& where) {
  std::string cond;
  for (const auto& [field, value] : where) {
    if (!column(m, field)) throw SchemaError("table " + m.name + " has no field " + field);
    cond += (cond.empty() ? "" : " AND ") + sql::quote_identifier(column(m, field)->name) +
            (value.is_null() ? " IS NULL" : " = " + value.to_sql());
  }
  std::string path = "/" + rest::encode_component(m.name) + "?keys=1";
  if (!cond.empty()) path += "&where=" + rest::encode_component(cond);
  rest::Response r = send("GET", path);
  if (r.status != 200) rest::throw_for(r, "find in " + m.name);
  std::vector<Record> out;
  for (const auto& row : Json::parse(r.body)) out.push_back(from_json(m, row.dump(), nullptr));
  return out;
}

std::vector<Record> Connection::find_all(const std::string& table) { return query(model(table), {}); }

std::optional<Record> Connection::find_key(const std::string& table, const std::vector<Value>& key) {
  const ClassModel& m = model(table);
  rest::Response r = send("GET", "/" + rest::encode_component(m.name) + "/" + key_path(key));
  if (r.status == 404) return std::nullopt;
  if (r.status != 200) rest::throw_for(r, "find in " + m.name);
  Record rec = from_json(m, r.body, r.header("ETag"));
  rec.key = key_path(key);
  return rec;
}

std::vector<Record> Connection::find_with(const std::string& table, const std::string& field, const Value& value) {
  return query(model(table), {{field, value}});
}

std::optional<Record> Connection::find_one(const std::string& table, const std::string& field, const Value& value) {
  const ClassModel& m = model(table);
  auto found = query(m, {{field, value}});
  if (found.empty()) return std::nullopt;
  auto before = [&](const Record& a, const Record& b) {
    for (const auto& k : m.key) {
      auto c = index_order(a.get(k), b.get(k));
      if (c != 0) return c < 0;
    }
    return false;
  };
  return *std::min_element(found.begin(), found.end(), before);
}

std::vector<Record> Connection::navigate(const Record& from, const std::string& link) {
  const ClassModel& m = model(from.table);
  auto nav = std::find_if(m.navigation.begin(), m.navigation.end(),
                          [&](const auto& n) { return ::strcasecmp(n.name.c_str(), link.c_str()) == 0; });
  if (nav == m.navigation.end()) throw SchemaError("table " + m.name + " has no link " + link);
  std::vector<std::pair<std::string, Value>> where;
  for (std::size_t i = 0; i < nav->target_fields.size(); ++i) {
    const Value& v = from.get(nav->local_fields[i]);
    if (v.is_null()) return {};
    where.emplace_back(nav->target_fields[i], v);
  }
  return query(model(nav->target), where);
}

const ClassModel& Connection::check_drift(const Record& r) {
  ClassModel now = fetch_model(r.table);
  if (now.defining_pos != r.defining_pos || now.schema_key != r.schema_key)
    throw SchemaDrift("schema drift: table " + r.table + " has changed since this record's model was generated");
  return model(r.table);
}

Record Connection::post(const Record& r) {
  const ClassModel& m = check_drift(r);
  Json body = Json::object();
  for (const auto& [name, v] : r.fields) {
    const auto* c = column(m, name);
    if (!c) throw SchemaError("table " + m.name + " has no field " + name);
    if (c->autokey && v.is_null()) continue;
    body[c->name] = sql::to_json(v);
  }
  rest::Response res = send("POST", "/" + rest::encode_component(m.name), body.dump());
  if (res.status != 201) rest::throw_for(res, "post to " + m.name);
  return from_json(m, res.body, res.header("ETag"));
}

Record Connection::put(const Record& r) {
  if (r.key.empty() || r.etag.empty()) throw NotFound("record of " + r.table + " has not been read from the server");
  const ClassModel& m = check_drift(r);
  Json body = Json::object();
  for (const auto& [name, v] : r.fields) {
    const auto* c = column(m, name);
    if (!c) throw SchemaError("table " + m.name + " has no field " + name);
    body[c->name] = sql::to_json(v);
  }
  rest::Response res = send("PUT", "/" + rest::encode_component(m.name) + "/" + r.key, body.dump(), r.etag);
  if (res.status == 412) throw VersionConflict("version conflict: " + m.name + " " + r.key + " has changed");
  if (res.status != 200) rest::throw_for(res, "put to " + m.name);
  return from_json(m, res.body, res.header("ETag"));
}

void Connection::remove(const Record& r) {
  if (r.key.empty() || r.etag.empty()) throw NotFound("record of " + r.table + " has not been read from the server");
  const ClassModel& m = check_drift(r);
  rest::Response res = send("DELETE", "/" + rest::encode_component(m.name) + "/" + r.key, {}, r.etag);
  if (res.status == 412) throw VersionConflict("version conflict: " + m.name + " " + r.key + " has changed");
  if (res.status != 204) rest::throw_for(res, "delete from " + m.name);
}

}  // namespace pyrlite::vclient
