#include <gtest/gtest.h>

#include "pyrlite/vclient/client.hpp"
#include "../support/federation.hpp"

namespace pyrlite::vclient {
namespace {

using testing::Federation;
using testing::kOrigin;

class ClientTest : public ::testing::Test {
 protected:
  void SetUp() override {
    f.sb->execute_script(
        "create table customer (ID int primary key, NAME char unique);"
        "create table sale (ID int primary key, CUST int references customer on delete cascade, QTY int)");
  }

  Connection connect(const std::vector<Expected>& expected = {}) {
    return Connection::connect(f.net, Profile{kOrigin, "DB", "DB", "admin", "pw"}, expected);
  }

  std::size_t writes() const {
    std::size_t n = 0;
    for (const auto& e : f.net.log()) n += e.request.method != "GET";
    return n;
  }

  Expected expected(const std::string& table) {
    Uid admin = f.db_b->authenticate("admin", "pw");
    auto m = generate_class_model(*f.db_b->snapshot(), admin, *f.db_b->default_role(admin), table);
    return {table, m.defining_pos, m.schema_key};
  }

  Federation f;
};

TEST_F(ClientTest, ConnectChecksSchemaKeys) {
  const Expected c = expected("CUSTOMER");
  EXPECT_NO_THROW(connect({c, expected("SALE")}));
  Expected wrong = c;
  wrong.schema_key += 1;
  try {
    connect({wrong});
    FAIL() << "expected schema drift";
  } catch (const SchemaDrift& e) {
    EXPECT_NE(std::string(e.what()).find("CUSTOMER"), std::string::npos);
  }
  f.sb->execute("alter table customer add column CITY char");
  EXPECT_THROW(connect({c}), SchemaDrift);
  EXPECT_THROW(Connection::connect(f.net, Profile{kOrigin, "DB", "DB", "admin", "nope"}), AuthenticationError);
}

TEST_F(ClientTest, FindOnEmptyTableIsAbsent) {
  Connection conn = connect();
  EXPECT_FALSE(conn.find_key("customer", {Value::integer(1)}).has_value());
  EXPECT_TRUE(conn.find_all("customer").empty());
  EXPECT_FALSE(conn.find_one("customer", "NAME", Value::text("Mary")).has_value());
  EXPECT_THROW(conn.find_with("customer", "NOSUCH", Value::integer(1)), SchemaError);
}

TEST_F(ClientTest, PostAssignsKeysAndFindsThem) {
  Connection conn = connect();
  Record greta = conn.create("customer");
  greta.set("NAME", Value::text("Greta"));
  Record a = conn.post(greta);
  EXPECT_EQ(a.get("ID"), Value::integer(1));
  EXPECT_EQ(a.key, "1");
  EXPECT_FALSE(a.etag.empty());

  Record mary = conn.create("customer");
  mary.set("NAME", Value::text("Mary"));
  EXPECT_EQ(conn.post(mary).get("ID"), Value::integer(2));

  auto found = conn.find_with("customer", "NAME", Value::text("Greta"));
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0].etag, a.etag);
  EXPECT_EQ(conn.find_key("customer", {Value::integer(2)})->get("NAME"), Value::text("Mary"));
  EXPECT_THROW(conn.post(greta), ConstraintError);
}

TEST_F(ClientTest, FindOneTakesPrimaryKeyOrder) {
  f.sb->execute("insert into sale values (30, null, 5), (10, null, 5), (20, null, 7)");
  Connection conn = connect();
  EXPECT_EQ(conn.find_one("sale", "QTY", Value::integer(5))->get("ID"), Value::integer(10));
}

TEST_F(ClientTest, NavigationEqualsFilteringOnTheForeignKey) {
  f.sb->execute_script(
      "insert into customer values (1, 'Mary'), (2, 'John');"
      "insert into sale values (10, 1, 3), (11, 2, 4), (12, 1, 5)");
  Connection conn = connect();
  Record mary = *conn.find_one("customer", "NAME", Value::text("Mary"));
  auto via_link = conn.navigate(mary, "sales");
  auto via_filter = conn.find_with("sale", "CUST", mary.get("ID"));
  ASSERT_EQ(via_link.size(), 2u);
  ASSERT_EQ(via_link.size(), via_filter.size());
  for (std::size_t i = 0; i < via_link.size(); ++i) EXPECT_EQ(via_link[i].fields, via_filter[i].fields);
  auto back = conn.navigate(via_link[0], "customer");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].get("NAME"), Value::text("Mary"));
}

TEST_F(ClientTest, PutRefreshesTheEtag) {
  f.sb->execute("insert into customer values (1, 'John')");
  Connection conn = connect();
  Record j = *conn.find_key("customer", {Value::integer(1)});
  j.set("NAME", Value::text("Johnny"));
  Record k = conn.put(j);
  EXPECT_NE(k.etag, j.etag);
  EXPECT_EQ(conn.find_key("customer", {Value::integer(1)})->etag, k.etag);
  EXPECT_EQ(k.get("NAME"), Value::text("Johnny"));
}

TEST_F(ClientTest, SecondWriterGetsVersionConflict) {
  f.sb->execute("insert into customer values (1, 'John')");
  Connection one = connect();
  Connection two = connect();
  Record a = *one.find_key("customer", {Value::integer(1)});
  Record b = *two.find_key("customer", {Value::integer(1)});
  a.set("NAME", Value::text("A"));
  b.set("NAME", Value::text("B"));
  one.put(a);
  const Record before = b;
  EXPECT_THROW(two.put(b), VersionConflict);
  EXPECT_EQ(b.fields, before.fields);
  EXPECT_EQ(b.etag, before.etag);
  EXPECT_EQ(one.find_key("customer", {Value::integer(1)})->get("NAME"), Value::text("A"));
}

TEST_F(ClientTest, DriftIsCaughtBeforeTheWrite) {
  f.sb->execute("insert into customer values (1, 'John')");
  Connection conn = connect();
  Record j = *conn.find_key("customer", {Value::integer(1)});
  f.sb->execute("alter table customer add column CITY char");
  f.net.clear_log();
  j.set("NAME", Value::text("Johnny"));
  EXPECT_THROW(conn.put(j), SchemaDrift);
  EXPECT_THROW(conn.remove(j), SchemaDrift);
  EXPECT_EQ(writes(), 0u);
}

TEST_F(ClientTest, DeleteIsConditionalAndCascades) {
  f.sb->execute_script("insert into customer values (1, 'Mary'), (2, 'John'); insert into sale values (10, 1, 3)");
  Connection conn = connect();
  Record mary = *conn.find_key("customer", {Value::integer(1)});
  Record john = *conn.find_key("customer", {Value::integer(2)});
  f.sb->execute("update customer set NAME = 'Jon' where ID = 2");
  EXPECT_THROW(conn.remove(john), VersionConflict);
  EXPECT_TRUE(conn.find_key("customer", {Value::integer(2)}).has_value());

  conn.remove(mary);
  EXPECT_FALSE(conn.find_key("customer", {Value::integer(1)}).has_value());
  EXPECT_TRUE(conn.find_with("sale", "CUST", Value::integer(1)).empty());
  EXPECT_THROW(conn.remove(mary), NotFound);
}

}  // namespace
}  // namespace pyrlite::vclient
