#include <gtest/gtest.h>

#include "pyrlite/rest/remote.hpp"
#include "pyrlite/rest/service.hpp"
#include "pyrlite/sql/json.hpp"
#include "../support/federation.hpp"

namespace pyrlite::rest {
namespace {

using sql::Json;
using testing::Federation;
using testing::kOrigin;
using testing::kUrlT;
using testing::kUrlU;

class RestTest : public ::testing::Test {
 protected:
  Response call(const std::string& method, const std::string& target, const std::string& body = {},
                Headers h = Federation::auth()) {
    return f.net.send(kOrigin, Request{method, target, std::move(h), body});
  }
  Response call_if(const std::string& method, const std::string& target, const std::string& etag,
                   const std::string& body = {}) {
    Headers h = Federation::auth();
    h["If-Match"] = etag;
    return call(method, target, body, h);
  }
  static std::string etag(const Response& r) {
    const std::string* e = r.header("ETag");
    return e ? *e : std::string();
  }
  std::vector<std::string> rows(const std::string& select) {
    std::vector<std::string> out;
    for (const auto& row : f.sl->query(select).to_vector()) {
      std::string line;
      for (const auto& v : row) line += (line.empty() ? "" : ",") + v.to_string();
      out.push_back(line);
    }
    return out;
  }

  Federation f;
};

TEST_F(RestTest, GetRowsetAndRow) {
  f.two_contributors();
  Response all = call("GET", "/DB/DB/t");
  ASSERT_EQ(all.status, 200) << all.body;
  Json j = Json::parse(all.body);
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[1]["F"], "Two");
  EXPECT_EQ(etag(all), rowset_etag(*f.db_b->snapshot()));

  Headers h = Federation::auth();
  h["If-None-Match"] = etag(all);
  EXPECT_EQ(call("GET", "/DB/DB/t", {}, h).status, 304);

  Response one = call("GET", "/DB/DB/t/2");
  ASSERT_EQ(one.status, 200);
  EXPECT_EQ(Json::parse(one.body), (Json{{"E", 2}, {"F", "Two"}}));
  EXPECT_FALSE(etag(one).empty());
  h["If-None-Match"] = etag(one);
  EXPECT_EQ(call("GET", "/DB/DB/t/2", {}, h).status, 304);
  EXPECT_EQ(call("GET", "/DB/DB/t/9").status, 404);
}

TEST_F(RestTest, RowsetQueryParameters) {
  f.two_contributors();
  Response r = call("GET", "/DB/DB/t?select=F&where=" + encode_component("E > 1"));
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(Json::parse(r.body), Json::parse(R"([{"F":"Two"},{"F":"Three"}])"));

  r = call("GET", "/DB/DB/t?keys=1&where=" + encode_component("E = 3"));
  ASSERT_EQ(r.status, 200);
  Json row = Json::parse(r.body).at(0);
  EXPECT_EQ(row["$key"], "3");
  EXPECT_EQ(etag(call("GET", "/DB/DB/t/" + row["$key"].get<std::string>())), row["$etag"].get<std::string>());

  r = call("GET", "/DB/DB/t?agg=" + encode_component("COUNT(*),SUM(E)"));
  ASSERT_EQ(r.status, 200) << r.body;
  Json regs = Json::parse(r.body)["$registers"];
  EXPECT_EQ(regs.size(), 2u);

  EXPECT_EQ(call("GET", "/DB/DB/t?where=" + encode_component("nosuch = 1")).status, 400);
}

TEST_F(RestTest, AuthenticationAndRoles) {
  f.two_contributors();
  f.sb->execute_script("create user \"bob\" password 'b'; create role reader; grant reader to \"bob\"");
  Response r = call("GET", "/DB/DB/t", {}, {});
  EXPECT_EQ(r.status, 401);
  EXPECT_NE(r.header("WWW-Authenticate"), nullptr);
  EXPECT_EQ(call("GET", "/DB/DB/t", {}, Federation::auth("admin", "wrong")).status, 401);
  EXPECT_EQ(call("GET", "/DB/nosuch/t").status, 404);
  EXPECT_EQ(call("GET", "/DB/DB/t", {}, Federation::auth("bob", "b")).status, 403);
  EXPECT_EQ(call("GET", "/DB/reader/t", {}, Federation::auth("bob", "b")).status, 403);
  EXPECT_EQ(call("GET", "/DB/DB/nosuch").status, 404);
  EXPECT_EQ(call("GET", "/nosuch/DB/t").status, 404);

  f.sb->execute("grant select (F) on t to reader");
  r = call("GET", "/DB/reader/t?select=F", {}, Federation::auth("bob", "b"));
  EXPECT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(call("GET", "/DB/reader/t?select=E", {}, Federation::auth("bob", "b")).status, 403);
  EXPECT_EQ(call("POST", "/DB/reader/t", R"({"E":9,"F":"x"})", Federation::auth("bob", "b")).status, 403);
}

TEST_F(RestTest, PostAssignsAutokey) {
  f.sb->execute("create table c (ID int primary key, NAME char unique)");
  Response r = call("POST", "/DB/DB/c", R"({"NAME":"Greta"})");
  ASSERT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(Json::parse(r.body)["ID"], 1);
  ASSERT_NE(r.header("Location"), nullptr);
  EXPECT_EQ(*r.header("Location"), "/DB/DB/C/1");
  EXPECT_EQ(etag(r), etag(call("GET", "/DB/DB/c/1")));

  r = call("POST", "/DB/DB/c", R"([{"NAME":"Mary"}])");
  ASSERT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(Json::parse(r.body).at(0)["ID"], 2);

  r = call("POST", "/DB/DB/c", R"({"NAME":"Greta"})");
  EXPECT_EQ(r.status, 409);
  ASSERT_NE(r.header("X-Error-Kind"), nullptr);
  EXPECT_EQ(*r.header("X-Error-Kind"), "constraint");
  EXPECT_EQ(call("POST", "/DB/DB/c", "{not json").status, 400);
}

TEST_F(RestTest, PutNeedsTheCurrentEtag) {
  f.two_contributors();
  const std::string old = etag(call("GET", "/DB/DB/t/2"));
  Response r = call_if("PUT", "/DB/DB/t/2", old, R"({"E":2,"F":"Deux"})");
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_NE(etag(r), old);
  EXPECT_EQ(etag(r), etag(call("GET", "/DB/DB/t/2")));
  EXPECT_EQ(Json::parse(call("GET", "/DB/DB/t/2").body)["F"], "Deux");

  const auto hash = state_hash(*f.db_b->snapshot());
  const auto size = f.db_b->log().size();
  r = call_if("PUT", "/DB/DB/t/2", old, R"({"E":2,"F":"Zwei"})");
  EXPECT_EQ(r.status, 412);
  EXPECT_EQ(call("PUT", "/DB/DB/t/2", R"({"E":2,"F":"Zwei"})").status, 412);
  EXPECT_EQ(state_hash(*f.db_b->snapshot()), hash);
  EXPECT_EQ(f.db_b->log().size(), size);
  EXPECT_EQ(call_if("PUT", "/DB/DB/t/8", old, R"({"F":"x"})").status, 404);
}

TEST_F(RestTest, DeleteCascades) {
  f.sb->execute_script(
      "create table c (ID int primary key, NAME char);"
      "create table o (ID int primary key, CUST int references c on delete cascade);"
      "insert into c values (1, 'Mary'), (2, 'John'); insert into o values (10, 1), (11, 1), (12, 2)");
  const std::string e = etag(call("GET", "/DB/DB/c/1"));
  f.sb->execute("update c set NAME = 'Maria' where ID = 1");
  EXPECT_EQ(call_if("DELETE", "/DB/DB/c/1", e).status, 412);
  EXPECT_EQ(call("GET", "/DB/DB/c/1").status, 200);

  Response r = call_if("DELETE", "/DB/DB/c/1", etag(call("GET", "/DB/DB/c/1")));
  EXPECT_EQ(r.status, 204) << r.body;
  EXPECT_EQ(call("GET", "/DB/DB/c/1").status, 404);
  EXPECT_EQ(Json::parse(call("GET", "/DB/DB/o").body), Json::parse(R"([{"ID":12,"CUST":2}])"));
}

TEST_F(RestTest, ViewsAndSelectors) {
  f.two_contributors();
  f.sb->execute("create view tv as select F from t where E < 3");
  Response r = call("GET", "/DB/DB/tv");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(Json::parse(r.body).size(), 2u);
  EXPECT_EQ(call("POST", "/DB/DB/tv", R"({"F":"x"})").status, 405);

  r = call("GET", "/DB/DB/t?PIE(E,F)");
  EXPECT_EQ(r.status, 501);
  EXPECT_EQ(Json::parse(r.body)["selector"], "PIE(E,F)");
}

TEST_F(RestTest, ClassModelMatchesTheEngine) {
  f.sb->execute_script(
      "create table c (ID int primary key, NAME char unique);"
      "create table o (ID int primary key, CUST int references c, QTY int)");
  auto snap = f.db_b->snapshot();
  Uid admin = f.db_b->authenticate("admin", "pw");
  for (const char* t : {"C", "O"}) {
    Response r = call("GET", std::string("/DB/DB/$class/") + t);
    ASSERT_EQ(r.status, 200) << r.body;
    const ClassModel want = generate_class_model(*snap, admin, *f.db_b->default_role(admin), t);
    EXPECT_EQ(Json::parse(r.body), class_model_json(want));
    const ClassModel back = class_model_from_json(Json::parse(r.body));
    EXPECT_EQ(class_model_json(back), class_model_json(want));
  }
  EXPECT_EQ(call("GET", "/DB/DB/$class/nosuch").status, 404);
}

TEST_F(RestTest, SqlEndpointAutocommits) {
  Response r = call("POST", "/DB/DB", "create table k (a int); insert into k values (1), (2)");
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(Json::parse(r.body)["affected"], 2);
  r = call("POST", "/DB/DB", "select sum(a) from k");
  EXPECT_EQ(Json::parse(r.body)["rows"], Json::parse("[[3]]"));
  EXPECT_EQ(call("POST", "/DB/DB", "begin").status, 400);
  EXPECT_EQ(call("POST", "/DB/DB", "selct 1").status, 400);
  EXPECT_EQ(call("GET", "/DB/DB").status, 200);
}

TEST_F(RestTest, RestViewFetchesEachContributorOnce) {
  f.two_contributors();
  f.net.clear_log();
  EXPECT_EQ(rows("select * from ww where e=5"), std::vector<std::string>{"5,C,1,Five"});
  EXPECT_EQ(f.net.count(kUrlT), 1u);
  EXPECT_EQ(f.net.count(kUrlU), 1u);
  for (const auto& e : f.net.log()) EXPECT_NE(e.request.target.find("where="), std::string::npos);

  f.net.clear_log();
  EXPECT_EQ(rows("select e, f from ww where d='B' order by e"),
            (std::vector<std::string>{"1,One", "2,Two", "3,Three"}));
  EXPECT_EQ(f.net.count(kUrlT), 1u);
  EXPECT_EQ(f.net.count(kUrlU), 0u);
}

TEST_F(RestTest, RemoteAggregatesTravelAsRegisters) {
  f.two_contributors();
  f.net.clear_log();
  EXPECT_EQ(rows("select count(*), sum(e), min(f), max(e) from ww"), std::vector<std::string>{"5,15,Five,5"});
  EXPECT_EQ(f.net.count(), 2u);
  for (const auto& e : f.net.log()) {
    EXPECT_NE(e.request.target.find("agg="), std::string::npos);
    EXPECT_EQ(e.request.target.find("select="), std::string::npos);
  }
}

TEST_F(RestTest, OfflineContributorIsNamed) {
  f.two_contributors();
  const std::string gone = "http://localhost:9999/DX/DX/x";
  f.sl->execute("insert into VU values ('X', 0, '" + gone + "')");
  f.net.set_offline("http://localhost:9999", true);
  try {
    f.sl->query("select * from ww");
    FAIL() << "expected the query to fail";
  } catch (const RemoteError& e) {
    EXPECT_NE(std::string(e.what()).find(gone), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("2 of 3"), std::string::npos) << e.what();
  }
}

TEST_F(RestTest, RemoteUpdateThroughView) {
  f.two_contributors();
  f.sl->execute("update ww set f = 'Cinq' where e = 5");
  EXPECT_EQ(Json::parse(call("GET", "/DC/DC/u/5").body)["F"], "Cinq");
  f.sl->execute("insert into ww values (6, 'C', 1, 'Six')");
  EXPECT_EQ(Json::parse(call("GET", "/DC/DC/u/6").body)["F"], "Six");
  f.sl->execute("delete from ww where e = 6");
  EXPECT_EQ(call("GET", "/DC/DC/u/6").status, 404);
}

TEST_F(RestTest, RemoteConflictLeavesTheLocalLogAlone) {
  f.two_contributors();
  f.sl->execute("create table audit (n int)");
  const auto size = f.local->log().size();
  const auto hash = state_hash(*f.local->snapshot());
  f.sl->execute("begin");
  f.sl->execute("insert into audit values (1)");
  f.sl->execute("update ww set f = 'Cinq' where e = 5");
  f.sc->execute("update u set f = 'V' where e = 5");
  EXPECT_THROW(f.sl->execute("commit"), ConflictError);
  EXPECT_FALSE(f.sl->in_transaction());
  EXPECT_EQ(f.local->log().size(), size);
  EXPECT_EQ(state_hash(*f.local->snapshot()), hash);
  EXPECT_EQ(Json::parse(call("GET", "/DC/DC/u/5").body)["F"], "V");
}

TEST_F(RestTest, TwoContributorsFailBeforeAnyRequest) {
  f.two_contributors();
  f.net.clear_log();
  f.sl->execute("begin");
  EXPECT_THROW(f.sl->execute("insert into ww values (7, 'B', 4, 'Seven'), (8, 'C', 1, 'Eight')"), RemoteError);
  EXPECT_EQ(f.net.count(), 0u);
  f.sl->execute("rollback");
  EXPECT_EQ(f.net.count(), 0u);
}

TEST_F(RestTest, SingleUrlViewWritesOverHttp) {
  f.two_contributors();
  f.sl->execute_script(
      "create view VV of (E int, F char) as get '" + kUrlT + "' user 'admin' password 'pw';"
      "create view VF of (F char) as get '" + kUrlT + "' user 'admin' password 'pw'");
  Response r = f.net.send(kOrigin, Request{"POST", "/L/L/VV", Federation::auth(), R"({"E":4,"F":"Vier"})"});
  EXPECT_EQ(r.status, 201) << r.body;
  EXPECT_EQ(Json::parse(call("GET", "/DB/DB/t/4").body)["F"], "Vier");

  const std::string stale = etag(call("GET", "/DB/DB/t/4"));
  f.sb->execute("update t set f = 'Quatre' where e = 4");
  Headers h = Federation::auth();
  h["If-Match"] = stale;
  r = f.net.send(kOrigin, Request{"PUT", "/L/L/VV/4", h, R"({"E":4,"F":"x"})"});
  EXPECT_EQ(r.status, 412);

  r = f.net.send(kOrigin, Request{"PUT", "/L/L/VF/4", h, R"({"F":"x"})"});
  EXPECT_EQ(r.status, 405);
  r = f.net.send(kOrigin, Request{"PUT", "/L/L/WW/4", h, R"({"F":"x"})"});
  EXPECT_EQ(r.status, 405);
}

TEST(HttpServer, ServesOverASocket) {
  testing::TempDir dir;
  Service svc(ServiceOptions{dir.path(), {.sync = false}});
  {
    auto db = Database::open(dir.file("S.pyl"), {.sync = false});
    db->bootstrap("admin", "pw");
  }
  HttpServer http(svc);
  const int port = http.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  http.start();
  HttpTransport net(5);
  const std::string base = "http://127.0.0.1:" + std::to_string(port) + "/S/S";
  Headers h = Federation::auth();
  EXPECT_EQ(net.send_url("POST", base, h, "create table t (a int primary key); insert into t values (7)").status, 200);
  Response r = net.send_url("GET", base + "/t/7", h);
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(Json::parse(r.body), (Json{{"A", 7}}));
  EXPECT_NE(r.header("ETag"), nullptr);
  http.stop();
  EXPECT_THROW(net.send_url("GET", base + "/t", h), RemoteError);
}

}  // namespace
}  // namespace pyrlite::rest
