#include "pyrlite/rest/remote.hpp"

#include <strings.h>

#include "pyrlite/errors.hpp"
#include "pyrlite/sql/json.hpp"

namespace pyrlite::rest {

using sql::Json;

std::string remote_target(const sql::RemoteQuery& q) {
  std::string select, agg;
  for (const auto& c : q.columns) select += (select.empty() ? "" : ",") + sql::quote_identifier(c.name);
  for (const auto& a : q.aggregates) agg += (agg.empty() ? "" : ",") + a.label();
  std::string url = q.url;
  char sep = url.find('?') == std::string::npos ? '?' : '&';
  auto add = [&](const char* name, const std::string& value) {
    url += sep;
    url += name;
    url += '=';
    url += encode_component(value);
    sep = '&';
  };
  if (q.aggregates.empty()) add("select", select);
  if (!q.where.empty()) add("where", q.where);
  if (!agg.empty()) add("agg", agg);
  if (q.want_keys) add("keys", "1");
  return url;
}

std::string error_text(const Response& r) {
  try {
    Json j = Json::parse(r.body);
    if (j.is_object() && j.contains("error")) return j["error"].get<std::string>();
  } catch (const Json::exception&) {
  }
  return r.body.empty() ? "HTTP " + std::to_string(r.status) : r.body;
}

void throw_for(const Response& r, const std::string& what) {
  const std::string text = what + ": " + error_text(r);
  switch (r.status) {
    case 401: throw AuthenticationError(text);
    case 403: throw AuthorizationError(text);
    case 404: throw NotFound(text);
    case 409: {
      const std::string* kind = r.header("X-Error-Kind");
      if (kind && *kind == "constraint") throw ConstraintError(text);
      throw ConflictError(ConflictReport::conflict(Uid{}, ConflictReason::RowReadUpdated, text));
    }
    case 412:
      throw ConflictError(ConflictReport::conflict(Uid{}, ConflictReason::RowReadUpdated,
                                                   what + ": precondition failed (412), the resource has changed"));
    default: throw RemoteError(text, r.status);
  }
}

namespace {

const Json* member(const Json& row, const std::string& name) {
  if (auto it = row.find(name); it != row.end()) return &*it;
  for (auto it = row.begin(); it != row.end(); ++it)
    if (::strcasecmp(it.key().c_str(), name.c_str()) == 0) return &*it;
  return nullptr;
}

}  // namespace

sql::RemoteResult HttpRemoteSource::fetch(const sql::RemoteQuery& q) {
  Headers h;
  if (!q.user.empty()) h["Authorization"] = basic_credentials(q.user, q.password);
  h["Accept"] = "application/json";
  Response r = transport_.send_url("GET", remote_target(q), h);
  if (r.status != 200) {
    try {
      throw_for(r, q.url);
    } catch (const ConflictError& e) {
      throw RemoteError(e.what(), r.status);
    } catch (const RemoteError&) {
      throw;
    } catch (const Error& e) {
      throw RemoteError(e.what(), r.status);
    }
  }

  sql::RemoteResult out;
  Json body;
  try {
    body = Json::parse(r.body);
  } catch (const Json::exception& e) {
    throw RemoteError(q.url + " returned malformed JSON: " + e.what(), 502);
  }

  if (!q.aggregates.empty()) {
    const Json* regs = body.is_object() ? member(body, "$registers") : nullptr;
    if (!regs || !regs->is_object()) throw RemoteError(q.url + " returned no registers", 502);
    for (const auto& a : q.aggregates) {
      const Json* j = member(*regs, a.label());
      if (!j) throw RemoteError(q.url + " returned no register for " + a.label(), 502);
      out.registers.push_back(sql::register_from_json(a.kind, *j, a.domain));
    }
    return out;
  }

  if (body.is_object()) body = Json::array({body});
  if (!body.is_array()) throw RemoteError(q.url + " returned neither rows nor registers", 502);
  for (const auto& row : body) {
    std::vector<Value> values;
    for (const auto& c : q.columns) {
      const Json* j = member(row, c.name);
      values.push_back(j ? sql::from_json(*j, c.domain) : Value{});
    }
    out.rows.push_back(std::move(values));
    if (q.want_keys) {
      const Json* key = member(row, "$key");
      const Json* etag = member(row, "$etag");
      out.keys.push_back(key && key->is_string() ? key->get<std::string>() : std::string());
      out.etags.push_back(etag && etag->is_string() ? etag->get<std::string>() : std::string());
    }
  }
  return out;
}

RemoteExecutor remote_writer(Transport& t) {
  return [&t](const std::vector<RemoteWrite>& writes) {
    for (const auto& w : writes) {
      Headers h;
      if (!w.user.empty()) h["Authorization"] = basic_credentials(w.user, w.password);
      if (!w.if_match.empty()) h["If-Match"] = w.if_match;
      h["Content-Type"] = "application/json";
      Response r = t.send_url(w.method, w.url, h, w.body);
      if (r.status >= 200 && r.status < 300) continue;
      throw_for(r, w.method + " " + w.url);
    }
  };
}

}  // namespace pyrlite::rest
