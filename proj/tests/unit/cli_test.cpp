#include <gtest/gtest.h>

#include <sstream>

#include "pyrlite/cli/shell.hpp"
#include "../support/federation.hpp"

namespace pyrlite::cli {
namespace {

using testing::Federation;
using testing::kOrigin;

TEST(Render, EmptyRowsetIsHeaderAndRules) {
  EXPECT_EQ(render_table({"A", "BB"}, {}), "------\n|A|BB|\n------\n");
}

TEST(Render, ColumnsFitTheirWidestCell) {
  EXPECT_EQ(render_table({"E", "D", "K", "F"}, {{"5", "C", "1", "Five"}}),
            "------------\n|E|D|K|F   |\n------------\n|5|C|1|Five|\n------------\n");
}

TEST(Render, MutationsReportRecordsAffected) {
  sql::StatementResult r;
  r.affected = 2;
  EXPECT_EQ(render(r), "2 records affected\n");
  r.affected = 1;
  EXPECT_EQ(render(r), "1 record affected\n");
}

class ShellTest : public ::testing::Test {
 protected:
  Federation f;
};

TEST_F(ShellTest, TwoContributorTranscript) {
  f.two_contributors();
  LocalShell sh(f.local, "admin", "pw", "", f.net);
  EXPECT_EQ(sh.eval("select * from ww where e=5"), "------------\n|E|D|K|F   |\n------------\n|5|C|1|Five|\n------------\n");
  const std::string vu = sh.eval("table vu");
  EXPECT_NE(vu.find("|B|4|http://localhost:8188/DB/DB/t|"), std::string::npos) << vu;
  EXPECT_NE(vu.find("|C|1|http://localhost:8188/DC/DC/u|"), std::string::npos) << vu;
  EXPECT_EQ(sh.eval("create table n (a int)"), "");
  EXPECT_EQ(sh.eval("insert into n values (1), (2)"), "2 records affected\n");
}

TEST_F(ShellTest, RollbackWithoutTransactionWarns) {
  LocalShell sh(f.local, "admin", "pw", "", f.net);
  sh.eval("create table n (a int)");
  const auto size = f.local->log().size();
  EXPECT_NE(sh.eval("rollback").find("warning"), std::string::npos);
  EXPECT_EQ(f.local->log().size(), size);
  EXPECT_FALSE(sh.session().in_transaction());
}

TEST_F(ShellTest, ErrorsDoNotEndTheSession) {
  LocalShell sh(f.local, "admin", "pw", "", f.net);
  EXPECT_NE(sh.eval("selct 1").find("line 1"), std::string::npos);
  EXPECT_NE(sh.eval("select * from nosuch").find("NOSUCH"), std::string::npos);
  EXPECT_EQ(sh.eval("create table n (a int primary key)"), "");
  EXPECT_EQ(sh.eval("insert into n values (1)"), "1 record affected\n");
}

TEST_F(ShellTest, ConflictOnCommitNamesTheReason) {
  LocalShell a(f.local, "admin", "pw", "", f.net);
  LocalShell b(f.local, "admin", "pw", "", f.net);
  a.eval("create table t (k int primary key, v int); create table log (n int); insert into t values (1, 10)");
  a.eval("begin");
  a.eval("insert into log select v from t where k = 1");
  EXPECT_EQ(b.eval("update t set v = 11 where k = 1"), "1 record affected\n");
  const std::string out = a.eval("commit");
  EXPECT_NE(out.find("transaction conflict: row-read-updated"), std::string::npos) << out;
  EXPECT_NE(out.find("rolled back"), std::string::npos) << out;
  EXPECT_FALSE(a.session().in_transaction());
}

TEST_F(ShellTest, SetRoleSwitchesTheDeclaredRole) {
  LocalShell admin(f.local, "admin", "pw", "", f.net);
  admin.eval("create table t (a int); create user \"bob\" password 'b'; create role reader; create role idle;"
             "grant select on t to reader; grant reader to \"bob\"; grant idle to \"bob\"");
  LocalShell sh(f.local, "bob", "b", "idle", f.net);
  EXPECT_NE(sh.eval("select * from t").find("denied"), std::string::npos);
  EXPECT_EQ(sh.eval("set role reader"), "");
  EXPECT_EQ(sh.eval("select * from t"), "---\n|A|\n---\n");
  EXPECT_NE(sh.eval("set role nosuch").find("unknown role"), std::string::npos);
  EXPECT_NE(sh.eval("set role L").find("not granted"), std::string::npos);
}

TEST_F(ShellTest, BadIdentityFailsAtStartup) {
  LocalShell first(f.local, "admin", "pw", "", f.net);
  EXPECT_THROW(LocalShell(f.local, "admin", "wrong", "", f.net), AuthenticationError);
  EXPECT_THROW(LocalShell(f.local, "admin", "pw", "nosuch", f.net), AuthorizationError);
  EXPECT_THROW(RemoteShell(f.net, kOrigin + "/DB", "admin", "wrong", ""), AuthenticationError);
}

TEST_F(ShellTest, RemoteShellMatchesLocal) {
  f.two_contributors();
  RemoteShell remote(f.net, kOrigin + "/DB", "admin", "pw", "");
  LocalShell local(f.db_b, "admin", "pw", "", f.net);
  EXPECT_EQ(remote.eval("select * from t order by e"), local.eval("select * from t order by e"));
  EXPECT_EQ(remote.eval("insert into t values (8, 'Eight'), (9, 'Nine');"), "2 records affected\n");
  EXPECT_NE(remote.eval("begin").find("warning"), std::string::npos);
  EXPECT_NE(remote.eval("select nosuch from t").find("NOSUCH"), std::string::npos);
}

TEST_F(ShellTest, ReplPromptsUntilQuit) {
  LocalShell sh(f.local, "admin", "pw", "", f.net);
  std::istringstream in("create table n (a int)\ninsert into n values (3)\nquit\ntable n\n");
  std::ostringstream out;
  repl(sh, in, out);
  EXPECT_EQ(out.str(), "SQL> SQL> 1 record affected\nSQL> \n");
}

}  // namespace
}  // namespace pyrlite::cli
