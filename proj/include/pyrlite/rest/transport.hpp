#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pyrlite::rest {

struct CaseLess {
  bool operator()(const std::string& a, const std::string& b) const;
};
using Headers = std::map<std::string, std::string, CaseLess>;

struct Request {
  std::string method = "GET";
  std::string target;  // path plus optional ?query, percent-encoded
  Headers headers;
  std::string body;
};

struct Response {
  int status = 200;
  Headers headers;
  std::string body;

  const std::string* header(const std::string& name) const;
};

/// scheme://host:port and the rest of an absolute url.
struct Url {
  std::string origin;
  std::string target;
};
Url split_url(const std::string& url);

std::string basic_credentials(const std::string& user, const std::string& password);
/// user and password from an Authorization header; nullopt unless Basic.
std::optional<std::pair<std::string, std::string>> parse_basic(const std::string& header);

std::string encode_component(const std::string& s);
std::string decode_component(const std::string& s);
/// Query parameters in order of appearance, decoded.
std::vector<std::pair<std::string, std::string>> parse_query(const std::string& query);

/// Sends one request to a server. Throws RemoteError when the server cannot
/// be reached; any HTTP status is returned, not thrown.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response send(const std::string& origin, const Request& r) = 0;
  Response send_url(const std::string& method, const std::string& url, Headers headers = {}, std::string body = {});
};

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(int timeout_seconds = 10) : timeout_(timeout_seconds) {}
  Response send(const std::string& origin, const Request& r) override;

 private:
  int timeout_;
};

/// In-process servers addressed by origin, with a request log and the
/// ability to take a server offline.
class LoopbackTransport : public Transport {
 public:
  using Handler = std::function<Response(const Request&)>;
  struct Entry {
    std::string origin;
    Request request;
    int status = 0;  // 0 when the server was offline
  };

  void mount(const std::string& origin, Handler h);
  void set_offline(const std::string& origin, bool offline);
  Response send(const std::string& origin, const Request& r) override;

  std::vector<Entry> log() const;
  /// Requests whose origin + target starts with `prefix`.
  std::size_t count(const std::string& prefix = {}) const;
  void clear_log();

 private:
  mutable std::mutex mu_;
  std::map<std::string, Handler> servers_;
  std::set<std::string> offline_;
  std::vector<Entry> log_;
};

}  // namespace pyrlite::rest
