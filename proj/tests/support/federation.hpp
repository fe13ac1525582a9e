#pragma once

#include <memory>
#include <string>

#include "pyrlite/rest/remote.hpp"
#include "pyrlite/rest/service.hpp"
#include "pyrlite/sql/session.hpp"
#include "temp_dir.hpp"

namespace pyrlite::testing {

inline const std::string kOrigin = "http://localhost:8188";
inline const std::string kUrlT = kOrigin + "/DB/DB/t";
inline const std::string kUrlU = kOrigin + "/DC/DC/u";

/// A server at localhost:8188 holding databases DB and DC, each owned by
/// admin/pw, plus a local database L whose views reach them over loopback.
struct Federation {
  TempDir dir;
  rest::LoopbackTransport net;
  rest::Service server{rest::ServiceOptions{dir.path(), {.sync = false}}};
  std::shared_ptr<Database> db_b, db_c, local;
  std::unique_ptr<sql::Session> sb, sc, sl;
  rest::HttpRemoteSource remote{net};

  Federation() {
    server.set_transport(&net);
    db_b = open("DB");
    db_c = open("DC");
    local = open("L");
    net.mount(kOrigin, [this](const rest::Request& r) { return server.handle(r); });
    sb = session(db_b);
    sc = session(db_c);
    sl = session(local);
    sl->set_remote(&remote);
    sl->set_remote_writer(rest::remote_writer(net));
  }

  std::shared_ptr<Database> open(const std::string& name) {
    auto db = Database::open(dir.file(name + ".pyl"), {.sync = false});
    db->bootstrap("admin", "pw");
    server.attach(db);
    return db;
  }

  static std::unique_ptr<sql::Session> session(const std::shared_ptr<Database>& db) {
    Uid u = db->authenticate("admin", "pw");
    return std::make_unique<sql::Session>(db, u, *db->default_role(u));
  }

  /// VU lists t and u as contributors; WW unions them.
  void two_contributors() {
    sb->execute_script("create table t (E int primary key, F char);"
                       "insert into t values (1, 'One'), (2, 'Two'), (3, 'Three')");
    sc->execute_script("create table u (E int primary key, F char);"
                       "insert into u values (4, 'Four'), (5, 'Five')");
    sl->execute_script("create table VU (D char, K int, U char);"
                       "insert into VU values ('B', 4, '" + kUrlT + "'), ('C', 1, '" + kUrlU + "');"
                       "create view WW of (E int, D char, K int, F char) as get using VU user 'admin' password 'pw'");
  }

  static rest::Headers auth(const std::string& user = "admin", const std::string& pw = "pw") {
    return {{"Authorization", rest::basic_credentials(user, pw)}};
  }
};

}  // namespace pyrlite::testing
