#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pyrlite/database.hpp"
#include "pyrlite/errors.hpp"
#include "pyrlite/rest/transport.hpp"

namespace pyrlite::vclient {

/// The server's definition of a table no longer matches the model in use.
class SchemaDrift : public Error {
 public:
  using Error::Error;
};

/// A conditional write found the record changed since it was read.
class VersionConflict : public Error {
 public:
  using Error::Error;
};

struct Profile {
  std::string server;  // scheme://host:port
  std::string database;
  std::string role;
  std::string user;
  std::string password;
};

/// A table identity as recorded when a model was generated.
struct Expected {
  std::string table;
  std::int64_t defining_pos = 0;
  std::int64_t schema_key = 0;
};

struct Record {
  std::string table;
  std::int64_t defining_pos = 0;
  std::int64_t schema_key = 0;
  std::string key;   // url key, empty until posted
  std::string etag;  // as last read or written
  std::map<std::string, Value> fields;

  /// NULL when the field is absent.
  const Value& get(const std::string& name) const;
  void set(const std::string& name, Value v) { fields[name] = std::move(v); }
};

class Connection {
 public:
  /// Authenticates and checks every expected table against the server.
  /// Throws SchemaDrift naming the first table that differs.
  static Connection connect(rest::Transport& t, Profile p, const std::vector<Expected>& expected = {});

  /// The server's current model of `table`, cached after the first fetch.
  const ClassModel& model(const std::string& table);
  /// An empty record of `table`, ready to post.
  Record create(const std::string& table);

  std::vector<Record> find_all(const std::string& table);
  std::optional<Record> find_key(const std::string& table, const std::vector<Value>& key);
  std::vector<Record> find_with(const std::string& table, const std::string& field, const Value& value);
  /// The first match in primary-key order.
  std::optional<Record> find_one(const std::string& table, const std::string& field, const Value& value);
  /// Records reached through a navigation link of the record's model.
  std::vector<Record> navigate(const Record& from, const std::string& link);

  Record post(const Record& r);
  /// Conditional on the record's ETag. Throws VersionConflict on 412.
  Record put(const Record& r);
  void remove(const Record& r);

  const Profile& profile() const noexcept { return profile_; }

 private:
  Connection(rest::Transport& t, Profile p) : transport_(&t), profile_(std::move(p)) {}

  rest::Response send(const std::string& method, const std::string& path, const std::string& body = {},
                      const std::string& if_match = {});
  ClassModel fetch_model(const std::string& table);
  /// Compares the record's schema key with the server's before a write.
  const ClassModel& check_drift(const Record& r);
  std::vector<Record> query(const ClassModel& m, const std::vector<std::pair<std::string, Value>>& where);
  Record from_json(const ClassModel& m, const std::string& body, const std::string* etag);
  std::string base() const;

  rest::Transport* transport_;
  Profile profile_;
  std::map<std::string, ClassModel> models_;
};

}  // namespace pyrlite::vclient
