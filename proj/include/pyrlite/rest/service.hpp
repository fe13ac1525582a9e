#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "pyrlite/database.hpp"
#include "pyrlite/rest/transport.hpp"
#include "pyrlite/sql/json.hpp"

namespace httplib {
class Server;
}

namespace pyrlite::rest {

struct ServiceOptions {
  std::filesystem::path data_dir = ".";
  DatabaseOptions database;
};

sql::Json class_model_json(const ClassModel& m);
ClassModel class_model_from_json(const sql::Json& j);

/// `"defining-lastchange"` for a row.
std::string row_etag(const Row& row);
/// `"watermark"` for a rowset.
std::string rowset_etag(const Snapshot& s);

/// The HTTP resource service over the databases in one directory:
///   GET|POST        /{db}/{role}/{table-or-view}[?where]
///   GET|PUT|DELETE  /{db}/{role}/{table}/{key}
///   GET             /{db}/{role}/$class/{table}
///   POST            /{db}/{role}          (SQL text, autocommitted)
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  /// Serves an already open database under its name.
  void attach(std::shared_ptr<Database> db);
  /// The database named `name`, opening `<data_dir>/<name>.pyl` on first
  /// use; null when there is no such file.
  std::shared_ptr<Database> database(const std::string& name);

  /// Outgoing traffic for RESTViews. Without it RESTViews are unavailable.
  void set_transport(Transport* t) noexcept { transport_ = t; }

  Response handle(const Request& r);

 private:
  struct Call;
  Response dispatch(Call& c);
  Response get(Call& c);
  Response post(Call& c);
  Response put_or_delete(Call& c);
  Response rest_write(Call& c);
  Response run_sql(Call& c);
  Response class_model(Call& c);

  ServiceOptions options_;
  Transport* transport_ = nullptr;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Database>> open_;
};

/// Runs a Service on a real socket.
class HttpServer {
 public:
  explicit HttpServer(Service& s);
  ~HttpServer();

  /// Binds to `port`, or to any free port when it is 0. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void run();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace pyrlite::rest
