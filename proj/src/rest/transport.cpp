#include "pyrlite/rest/transport.hpp"

#include <httplib.h>
#include <sodium.h>

#include <algorithm>
#include <cctype>
#include <strings.h>

#include "pyrlite/errors.hpp"

namespace pyrlite::rest {

bool CaseLess::operator()(const std::string& a, const std::string& b) const {
  return ::strcasecmp(a.c_str(), b.c_str()) < 0;
}

const std::string* Response::header(const std::string& name) const {
  auto it = headers.find(name);
  return it == headers.end() ? nullptr : &it->second;
}

Url split_url(const std::string& url) {
  auto scheme = url.find("://");
  auto start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find_first_of("/?", start);
  if (slash == std::string::npos) return {url, "/"};
  Url u{url.substr(0, slash), url.substr(slash)};
  if (u.target.front() == '?') u.target.insert(0, "/");
  return u;
}

std::string basic_credentials(const std::string& user, const std::string& password) {
  return "Basic " + httplib::detail::base64_encode(user + ":" + password);
}

std::optional<std::pair<std::string, std::string>> parse_basic(const std::string& header) {
  if (header.size() < 6 || ::strncasecmp(header.c_str(), "Basic ", 6) != 0) return std::nullopt;
  std::string b64 = header.substr(6);
  std::string raw(b64.size(), '\0');
  std::size_t len = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(raw.data()), raw.size(), b64.c_str(), b64.size(), " ", &len,
                        nullptr, sodium_base64_VARIANT_ORIGINAL) != 0)
    return std::nullopt;
  raw.resize(len);
  auto colon = raw.find(':');
  if (colon == std::string::npos) return std::nullopt;
  return std::make_pair(raw.substr(0, colon), raw.substr(colon + 1));
}

std::string encode_component(const std::string& s) { return httplib::detail::encode_query_param(s); }

std::string decode_component(const std::string& s) { return httplib::detail::decode_url(s, true); }

std::vector<std::pair<std::string, std::string>> parse_query(const std::string& query) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t at = 0;
  while (at <= query.size()) {
    auto amp = query.find('&', at);
    std::string part = query.substr(at, amp == std::string::npos ? std::string::npos : amp - at);
    if (!part.empty()) {
      auto eq = part.find('=');
      if (eq == std::string::npos)
        out.emplace_back(decode_component(part), "");
      else
        out.emplace_back(decode_component(part.substr(0, eq)), decode_component(part.substr(eq + 1)));
    }
    if (amp == std::string::npos) break;
    at = amp + 1;
  }
  return out;
}

Response Transport::send_url(const std::string& method, const std::string& url, Headers headers, std::string body) {
  Url u = split_url(url);
  Request r;
  r.method = method;
  r.target = u.target;
  r.headers = std::move(headers);
  r.body = std::move(body);
  return send(u.origin, r);
}

Response HttpTransport::send(const std::string& origin, const Request& r) {
  httplib::Client client(origin);
  client.set_connection_timeout(timeout_, 0);
  client.set_read_timeout(timeout_, 0);
  client.set_write_timeout(timeout_, 0);
  httplib::Headers h;
  for (const auto& [k, v] : r.headers) h.emplace(k, v);
  auto type = r.headers.count("Content-Type") ? r.headers.at("Content-Type") : std::string("application/json");

  httplib::Result res{nullptr, httplib::Error::Unknown};
  if (r.method == "GET")
    res = client.Get(r.target, h);
  else if (r.method == "POST")
    res = client.Post(r.target, h, r.body, type);
  else if (r.method == "PUT")
    res = client.Put(r.target, h, r.body, type);
  else if (r.method == "DELETE")
    res = client.Delete(r.target, h, r.body, type);
  else
    throw RemoteError("unsupported method " + r.method);
  if (!res) throw RemoteError("cannot reach " + origin + ": " + httplib::to_string(res.error()));

  Response out;
  out.status = res->status;
  out.body = res->body;
  for (const auto& [k, v] : res->headers) out.headers[k] = v;
  return out;
}

void LoopbackTransport::mount(const std::string& origin, Handler h) {
  std::lock_guard lock(mu_);
  servers_[origin] = std::move(h);
}

void LoopbackTransport::set_offline(const std::string& origin, bool offline) {
  std::lock_guard lock(mu_);
  if (offline)
    offline_.insert(origin);
  else
    offline_.erase(origin);
}

Response LoopbackTransport::send(const std::string& origin, const Request& r) {
  Handler h;
  {
    std::lock_guard lock(mu_);
    auto it = servers_.find(origin);
    if (it == servers_.end() || offline_.count(origin)) {
      log_.push_back({origin, r, 0});
      throw RemoteError("cannot reach " + origin + ": connection refused");
    }
    h = it->second;
  }
  // The handler runs unlocked: it may itself send requests.
  Response res = h(r);
  std::lock_guard lock(mu_);
  log_.push_back({origin, r, res.status});
  return res;
}

std::vector<LoopbackTransport::Entry> LoopbackTransport::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t LoopbackTransport::count(const std::string& prefix) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(), [&](const Entry& e) {
    return (e.origin + e.request.target).compare(0, prefix.size(), prefix) == 0;
  }));
}

void LoopbackTransport::clear_log() {
  std::lock_guard lock(mu_);
  log_.clear();
}

}  // namespace pyrlite::rest
