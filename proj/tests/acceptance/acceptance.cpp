// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "pyrlite/codec.hpp"
#include "pyrlite/pbtree.hpp"
#include "pyrlite/sql/json.hpp"
#include "pyrlite/vclient/client.hpp"
#include "../support/federation.hpp"

using namespace pyrlite;
using testing::Federation;
using testing::kOrigin;
using testing::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Value scalar(sql::Session& s, const std::string& select) {
  auto rows = s.query(select).to_vector();
  return rows.empty() ? Value{} : rows[0][0];
}

std::unique_ptr<sql::Session> owner_session(const std::shared_ptr<Database>& db) {
  Uid u = db->authenticate("admin", "pw");
  return std::make_unique<sql::Session>(db, u, *db->default_role(u));
}

std::shared_ptr<Database> fresh(const TempDir& dir, const std::string& name) {
  auto db = Database::open(dir.file(name + ".pyl"), {.sync = false});
  db->bootstrap("admin", "pw");
  sql::install_check_evaluator(*db);
  return db;
}

// Runs `body` as one explicit transaction. False when it aborted.
bool transact(sql::Session& s, const std::function<void()>& body) {
  try {
    s.execute("begin");
    body();
    s.execute("commit");
    return true;
  } catch (const Error&) {
    if (s.in_transaction()) s.execute("rollback");
    return false;
  }
}

Outcome serializability() {
  TempDir dir;
  auto db = fresh(dir, "serial");
  auto setup = owner_session(db);
  setup->execute_script(
      "create table cust (id int primary key, name char);"
      "create table ord (id int primary key, cust int references cust on delete cascade, qty int);"
      "create table acct (id int primary key, bal int)");
  for (int i = 1; i <= 20; ++i) setup->execute(fmt("insert into acct values (%d, 1000)", i));
  const int kWorkers = 8, kTx = 1000;
  std::atomic<int> committed{0};
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::thread> threads;
  for (int w = 0; w < kWorkers; ++w) {
    threads.emplace_back([&, w] {
      std::mt19937 rng(1000 + w);
      auto pick = [&](int n) { return static_cast<int>(rng() % n) + 1; };
      auto s = owner_session(db);
      for (int t = 0; t < kTx; ++t) {
        bool ok = false;
        switch (rng() % 6) {
          case 0:
            ok = transact(*s, [&] { s->execute(fmt("insert into cust values (%d, 'c%d')", pick(60), w)); });
            break;
          case 1:
            ok = transact(*s, [&] { s->execute(fmt("insert into ord values (%d, %d, 1)", pick(400), pick(60))); });
            break;
          case 2:
            ok = transact(*s, [&] { s->execute(fmt("update ord set qty = qty + 1 where id = %d", pick(400))); });
            break;
          case 3:
            ok = transact(*s, [&] { s->execute(fmt("delete from cust where id = %d", pick(60))); });
            break;
          case 4: {
            const int a = pick(20), b = pick(20);
            if (a == b) continue;
            ok = transact(*s, [&] {
              const auto va = *scalar(*s, fmt("select bal from acct where id = %d", a)).to_int64();
              const auto vb = *scalar(*s, fmt("select bal from acct where id = %d", b)).to_int64();
              s->execute(fmt("update acct set bal = %lld where id = %d", static_cast<long long>(va - 5), a));
              s->execute(fmt("update acct set bal = %lld where id = %d", static_cast<long long>(vb + 5), b));
            });
            break;
          }
          default: {
            const int c = pick(60);
            ok = transact(*s, [&] {
              const Value n = scalar(*s, fmt("select count(*) from ord where cust = %d and qty > 1", c));
              s->execute(fmt("insert into ord values (%d, %d, %lld)", pick(400), c,
                             static_cast<long long>(*n.to_int64() + 1)));
            });
          }
        }
        committed += ok;
      }
    });
  }
  for (auto& t : threads) t.join();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto live = state_hash(*db->snapshot());
  const Snapshot replayed = replay(db->log().read_all(), db->name());
  const auto total = *scalar(*setup, "select sum(bal) from acct").to_int64();
  const bool pass = state_hash(replayed) == live && total == 20000 && secs < 60;
  return {pass, fmt("%d workers x %d tx, %d committed in %.1fs; replay hash %s live hash; transfer total %lld of 20000",
                    kWorkers, kTx, committed.load(), secs, state_hash(replayed) == live ? "==" : "!=",
                    static_cast<long long>(total))};
}

Outcome conflict_granularity() {
  TempDir dir;
  auto db = fresh(dir, "gran");
  auto a = owner_session(db), b = owner_session(db);
  a->execute_script("create table g (k int primary key, v int); create table side (n int);"
                    "create view gv as select k, v from g where k <= 10");
  for (int i = 1; i <= 20; ++i) a->execute(fmt("insert into g values (%d, 0)", i));
  std::mt19937 rng(7);
  auto pick = [&](int n) { return static_cast<int>(rng() % n) + 1; };
  auto commit = [](sql::Session& s) {
    try {
      s.execute("commit");
      return true;
    } catch (const ConflictError&) {
      return false;
    }
  };
  int bad[4] = {0, 0, 0, 0};
  int next_key = 1000;
  for (int rep = 0; rep < 200; ++rep) {
    // (a) writers of different rows both commit, in either order.
    {
      const int i = pick(20);
      int j = pick(20);
      while (j == i) j = pick(20);
      a->execute("begin");
      a->execute(fmt("update g set v = v + 1 where k = %d", i));
      b->execute("begin");
      b->execute(fmt("update g set v = v + 1 where k = %d", j));
      const bool flip = rng() % 2;
      const bool x = commit(flip ? *b : *a), y = commit(flip ? *a : *b);
      bad[0] += !(x && y);
    }
    // (b) a row read races an update of that row: only one commits.
    {
      const int i = pick(20);
      if (rng() % 2) {
        a->execute("begin");
        a->execute(fmt("insert into side select v from g where k = %d", i));
        b->execute("begin");
        b->execute(fmt("update g set v = v + 1 where k = %d", i));
        const bool x = commit(*b), y = commit(*a);
        bad[1] += !(x && !y);
      } else {
        a->execute("begin");
        a->execute(fmt("update g set v = v + 1 where k = %d", i));
        b->execute("begin");
        b->execute(fmt("update g set v = v + 2 where k = %d", i));
        const bool flip = rng() % 2;
        const bool x = commit(flip ? *b : *a), y = commit(flip ? *a : *b);
        bad[1] += !(x && !y);
      }
    }
    // (c) a whole-table aggregate conflicts with any insert.
    {
      a->execute("begin");
      a->execute(rng() % 2 ? "insert into side select count(*) from g" : "insert into side select sum(v) from g");
      b->execute(fmt("insert into g values (%d, %d)", next_key + pick(100000), pick(9)));
      next_key += 100000;
      bad[2] += commit(*a);
    }
    // (d) redefining a view conflicts with any reader of it.
    {
      a->execute("begin");
      a->execute(fmt("insert into side select count(*) from gv where k = %d", pick(20)));
      b->execute(fmt("alter view gv as select k, v from g where k <= %d", pick(15)));
      bad[3] += commit(*a);
    }
  }
  return {bad[0] + bad[1] + bad[2] + bad[3] == 0,
          fmt("200 reps each; mismatches: disjoint rows %d, row read/update %d, aggregate/insert %d, view/reader %d",
              bad[0], bad[1], bad[2], bad[3])};
}

Outcome structural_sharing() {
  PTree<int, int> t;
  for (int i = 1; i <= 10000; ++i) t = t.add(i, i);
  auto walk = [](const PTree<int, int>& tree) {
    std::vector<std::pair<int, int>> out;
    for (auto b = tree.first(); b; b = b->next()) out.emplace_back(b->key(), b->value());
    return out;
  };
  const auto before = walk(t);
  const auto start = ptree_node_constructions();
  const auto next = t.add(10001, 10001);
  const auto built = ptree_node_constructions() - start;
  const bool unchanged = walk(t) == before && t.size() == 10000;
  const bool pass = built <= 7 && unchanged && next.size() == 10001 && next.get(10001) == 10001;
  return {pass, fmt("n=%zu, depth %zu: insert of key 10001 built %llu nodes (bound 7); old walk %s", kDefaultBranching,
                    t.depth(), static_cast<unsigned long long>(built), unchanged ? "unchanged" : "CHANGED")};
}

Outcome append_only() {
  TempDir dir;
  auto db = fresh(dir, "append");
  auto s = owner_session(db);
  s->execute("create table a (k int primary key, v char)");
  auto prefix_hash = [](const std::vector<std::uint8_t>& bytes, std::size_t n) {
    Fnv1a h;
    h.update(std::span(bytes.data(), n));
    return h.digest();
  };
  int changed = 0;
  for (int i = 0; i < 100; ++i) {
    const auto before = db->log().read_all();
    const auto h = prefix_hash(before, before.size());
    s->execute(i % 3 == 2 ? fmt("update a set v = 'u%d' where k = %d", i, i - 1)
                          : fmt("insert into a values (%d, 'v%d')", i, i));
    const auto after = db->log().read_all();
    changed += after.size() <= before.size() || prefix_hash(after, before.size()) != h;
  }
  const auto live = state_hash(*db->snapshot());
  s.reset();
  db.reset();
  auto cold = Database::open(dir.file("append.pyl"), {.sync = false});
  const bool same = state_hash(*cold->snapshot()) == live;
  return {changed == 0 && same, fmt("100 commits, %d prefixes changed; cold-start hash %s live hash", changed,
                                    same ? "==" : "!=")};
}

Outcome restview_example() {
  Federation f;
  f.two_contributors();
  f.net.clear_log();
  const auto rows = f.sl->query("select * from ww where e=5").to_vector();
  std::string got;
  for (const auto& r : rows) {
    got += "(";
    for (std::size_t i = 0; i < r.size(); ++i) got += (i ? "," : "") + r[i].to_sql();
    got += ")";
  }
  const auto nt = f.net.count(testing::kUrlT), nu = f.net.count(testing::kUrlU);
  const bool pass = got == "(5,'C',1,'Five')" && nt <= 1 && nu <= 1 && f.net.count() == nt + nu;
  return {pass, fmt("select * from ww where e=5 -> %s; requests: url-t %zu, url-u %zu", got.c_str(), nt, nu)};
}

Outcome sales_abc() {
  TempDir dir;
  auto db = fresh(dir, "sales");
  auto s = owner_session(db);
  s->execute_script(R"(
create table sales (cust char(12) primary key, custSales numeric(8,2));
insert into sales values ('Bosch' , 17000.00),('Boss', 13000.00), ('Daimler',20000.00);
insert into sales values ('Siemens',9000.00),('Porsche', 5000.00), ('VW', 8000.00), ('Migros' , 4000.00);
create view sales_V(cust, custSales, runningSalesShare)
as select cust, custSales,
(select sum(custSales) from sales where custSales >= u.custSales) /
(select sum(custSales) from sales)
from sales as u)");
  const auto rows = s->query(R"(select case when runningSalesShare <= 0.5 then 'A'
when runningSalesShare > 0.5 and
runningSalesShare <= 0.85 then 'B'
when runningSalesShare > 0.85 then 'C'
else null
end as Category,
cust, custSales,
cast(cast(custSales / (select sum(custSales) from
sales_V) * 100
as decimal(6, 2))
as char(6)) || '%' as share
from sales_V
order by custSales desc)").to_vector();
  std::vector<std::string> cats, shares;
  for (const auto& r : rows) {
    cats.push_back(r[0].to_string());
    shares.push_back(r[3].to_string());
  }
  const std::vector<std::string> want_cats{"A", "A", "B", "B", "C", "C", "C"};
  const std::vector<std::string> want_shares{"26.32%", "22.37%", "17.11%", "11.84%", "10.53%", "6.58%", "5.26%"};
  std::string got;
  for (std::size_t i = 0; i < cats.size(); ++i) got += (i ? " " : "") + cats[i] + ":" + shares[i];
  return {cats == want_cats && shares == want_shares, got};
}

Outcome conditional_mutation() {
  Federation f;
  f.two_contributors();
  auto auth = Federation::auth();
  const rest::Response first = f.net.send(kOrigin, {"GET", "/DB/DB/t/2", auth, {}});
  const std::string stale = *first.header("ETag");
  auth["If-Match"] = stale;
  const rest::Response ok = f.net.send(kOrigin, {"PUT", "/DB/DB/t/2", auth, R"({"E":2,"F":"Deux"})"});
  const auto hash = state_hash(*f.db_b->snapshot());
  const rest::Response again = f.net.send(kOrigin, {"PUT", "/DB/DB/t/2", auth, R"({"E":2,"F":"Zwei"})"});
  const bool put_ok = ok.status == 200 && again.status == 412 && state_hash(*f.db_b->snapshot()) == hash;

  f.sl->execute("create table audit (n int)");
  const auto size = f.local->log().size();
  f.sl->execute("begin");
  f.sl->execute("insert into audit values (1)");
  f.sl->execute("update ww set f = 'Cinq' where e = 5");
  f.sc->execute("update u set f = 'V' where e = 5");
  bool conflicted = false;
  try {
    f.sl->execute("commit");
  } catch (const ConflictError&) {
    conflicted = true;
  }
  const bool log_same = f.local->log().size() == size;
  return {put_ok && conflicted && log_same,
          fmt("stale PUT -> %d, state hash %s; remote 412 at commit %s, local log length %s", again.status,
              state_hash(*f.db_b->snapshot()) == hash ? "unchanged" : "CHANGED",
              conflicted ? "raised a conflict" : "did NOT raise", log_same ? "unchanged" : "CHANGED")};
}

Outcome single_master() {
  Federation f;
  f.two_contributors();
  f.net.clear_log();
  bool refused = false;
  f.sl->execute("begin");
  try {
    f.sl->execute("insert into ww values (7, 'B', 4, 'Seven'), (8, 'C', 1, 'Eight')");
  } catch (const RemoteError&) {
    refused = true;
  }
  if (f.sl->in_transaction()) f.sl->execute("rollback");
  return {refused && f.net.count() == 0,
          fmt("staging writes to two contributors %s; requests sent %zu", refused ? "refused" : "ACCEPTED", f.net.count())};
}

Outcome versioned_race() {
  Federation f;
  f.sb->execute_script("create table customer (ID int primary key, NAME char); insert into customer values (1, 'John')");
  const vclient::Profile p{kOrigin, "DB", "DB", "admin", "pw"};
  int bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto one = vclient::Connection::connect(f.net, p), two = vclient::Connection::connect(f.net, p);
    vclient::Record a = *one.find_key("customer", {Value::integer(1)});
    vclient::Record b = *two.find_key("customer", {Value::integer(1)});
    a.set("NAME", Value::text("A" + std::to_string(rep)));
    b.set("NAME", Value::text("B" + std::to_string(rep)));
    std::atomic<int> wins{0}, conflicts{0};
    std::string winner;
    std::mutex mu;
    auto race = [&](vclient::Connection& c, vclient::Record r) {
      try {
        c.put(r);
        ++wins;
        std::lock_guard lock(mu);
        winner = r.get("NAME").to_string();
      } catch (const vclient::VersionConflict&) {
        ++conflicts;
      }
    };
    std::thread x(race, std::ref(one), a), y(race, std::ref(two), b);
    x.join();
    y.join();
    const std::string stored = one.find_key("customer", {Value::integer(1)})->get("NAME").to_string();
    bad += !(wins == 1 && conflicts == 1 && stored == winner);
  }
  return {bad == 0, fmt("100 races of two read-modify-put clients; %d without exactly one winner", bad)};
}

Outcome aggregation_registers() {
  TempDir dir;
  rest::LoopbackTransport net;
  rest::Service server(rest::ServiceOptions{dir.path(), {.sync = false}});
  server.set_transport(&net);
  std::vector<std::unique_ptr<sql::Session>> parts;
  const std::string origins[3] = {"http://h0:8001", "http://h1:8002", "http://h2:8003"};
  for (int i = 0; i < 3; ++i) {
    auto db = fresh(dir, "P" + std::to_string(i));
    server.attach(db);
    net.mount(origins[i], [&server](const rest::Request& r) { return server.handle(r); });
    parts.push_back(owner_session(db));
    parts.back()->execute("create table m (id int primary key, v int)");
  }
  auto local = fresh(dir, "agg");
  auto sl = owner_session(local);
  rest::HttpRemoteSource remote(net);
  sl->set_remote(&remote);
  sl->execute("create table src (u char)");
  for (int i = 0; i < 3; ++i) sl->execute("insert into src values ('" + origins[i] + "/P" + std::to_string(i) + "/P" + std::to_string(i) + "/m')");
  sl->execute("create view mv of (id int, v int) as get using src user 'admin' password 'pw'");

  std::mt19937 rng(10);
  int bad = 0, next_id = 1;
  for (int fixture = 0; fixture < 50; ++fixture) {
    std::vector<std::int64_t> all;
    for (auto& p : parts) {
      p->execute("delete from m");
      const int n = static_cast<int>(rng() % 8);  // sometimes empty
      for (int k = 0; k < n; ++k) {
        const std::int64_t v = static_cast<std::int64_t>(rng() % 2001) - 1000;
        p->execute(fmt("insert into m values (%d, %lld)", next_id++, static_cast<long long>(v)));
        all.push_back(v);
      }
    }
    const auto r = sl->query("select sum(v), count(v), count(*), avg(v), min(v), max(v) from mv").to_vector().at(0);
    bool ok;
    if (all.empty()) {
      ok = r[0].is_null() && *r[1].to_int64() == 0 && *r[2].to_int64() == 0 && r[3].is_null() && r[4].is_null() &&
           r[5].is_null();
    } else {
      std::int64_t sum = 0;
      for (auto v : all) sum += v;
      const auto n = static_cast<std::int64_t>(all.size());
      const Value avg = divide(Value::real(Integer(sum), 0), Value::integer(n));
      const auto cmp = compare(r[3], avg);
      ok = r[0] == Value::integer(sum) && *r[1].to_int64() == n && *r[2].to_int64() == n && cmp &&
           *cmp == std::strong_ordering::equal && r[4] == Value::integer(*std::min_element(all.begin(), all.end())) &&
           r[5] == Value::integer(*std::max_element(all.begin(), all.end()));
    }
    bad += !ok;
  }
  return {bad == 0, fmt("50 random 3-contributor fixtures; %d disagree with brute force", bad)};
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"serializability harness", serializability},
      {"conflict granularity", conflict_granularity},
      {"structural sharing", structural_sharing},
      {"append-only log and replay", append_only},
      {"RESTView example", restview_example},
      {"sales ABC analysis", sales_abc},
      {"conditional mutation", conditional_mutation},
      {"single transaction master", single_master},
      {"versioned client race", versioned_race},
      {"aggregation registers", aggregation_registers},
  };
  int failed = 0, n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail
              << std::endl;
  }
  std::cout << (n - failed) << " of " << n << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
