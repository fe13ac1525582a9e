#include <gtest/gtest.h>

#include <fstream>

#include "../support/temp_dir.hpp"
#include "pyrlite/database.hpp"

using namespace pyrlite;
using pyrlite::testing::TempDir;

namespace {

struct Shop {
  Uid customer, cust_id, cust_name, cust_pk;
  Uid orders, ord_id, ord_cust, ord_qty, ord_pk, ord_fk;
};

class EngineTest : public ::testing::Test {
 protected:
  void SetUp() override { open(); }

  void open(DatabaseOptions o = {.sync = false}) {
    db = Database::open(dir.file("shop.pyl"), o);
    owner = db->bootstrap("alice", "pw");
    role = *db->role_named("shop");
  }

  Shop make_shop(FkAction on_delete = FkAction::Cascade) {
    Transaction tx = db->begin(owner, role);
    Shop s;
    s.customer = tx.stage(phys::Table{"CUSTOMER", {}});
    s.cust_id = tx.stage(phys::Column{s.customer, "ID", Domain::integer(), 0, false, {}});
    s.cust_name = tx.stage(phys::Column{s.customer, "NAME", Domain::text(20), 1, false, {}});
    s.cust_pk = tx.stage(phys::Index{s.customer, "CUSTOMER_PK", IndexKind::Primary, {s.cust_id}});
    s.orders = tx.stage(phys::Table{"ORDERS", {}});
    s.ord_id = tx.stage(phys::Column{s.orders, "ID", Domain::integer(), 0, false, {}});
    s.ord_cust = tx.stage(phys::Column{s.orders, "CUST", Domain::integer(), 1, false, {}});
    s.ord_qty = tx.stage(phys::Column{s.orders, "QTY", Domain::integer(), 2, true, {}});
    s.ord_pk = tx.stage(phys::Index{s.orders, "ORDERS_PK", IndexKind::Primary, {s.ord_id}});
    s.ord_fk = tx.stage(phys::Index{s.orders, "ORDERS_FK", IndexKind::Foreign, {s.ord_cust}, s.customer, s.cust_pk,
                                    on_delete, FkAction::Cascade});
    auto r = db->commit(tx);
    for (Uid* u : {&s.customer, &s.cust_id, &s.cust_name, &s.cust_pk, &s.orders, &s.ord_id, &s.ord_cust, &s.ord_qty,
                   &s.ord_pk, &s.ord_fk})
      *u = r.relocation.at(*u);
    return s;
  }

  Uid add_customer(const Shop& s, std::int64_t id, const std::string& name) {
    Transaction tx = db->begin(owner, role);
    Uid t = tx.insert(s.customer, {{s.cust_id, Value::integer(id)}, {s.cust_name, Value::text(name)}});
    return db->commit(tx).relocation.at(t);
  }

  Uid add_order(const Shop& s, std::int64_t id, std::int64_t cust, std::int64_t qty) {
    Transaction tx = db->begin(owner, role);
    Uid t = tx.insert(s.orders, {{s.ord_id, Value::integer(id)}, {s.ord_cust, Value::integer(cust)},
                                 {s.ord_qty, Value::integer(qty)}});
    return db->commit(tx).relocation.at(t);
  }

  std::size_t row_count(Uid table) { return db->snapshot()->table_data(table)->rows.size(); }

  TempDir dir;
  std::shared_ptr<Database> db;
  Uid owner, role;
};

}  // namespace

TEST_F(EngineTest, NewLogHasMagicAndBootstrapTransaction) {
  auto bytes = db->log().read_all();
  ASSERT_GE(bytes.size(), kLogHeaderSize);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "PYRLITE1");
  EXPECT_EQ(bytes[8], kLogVersion);
  auto txs = read_transactions(bytes);
  ASSERT_EQ(txs.size(), 1u);
  EXPECT_EQ(txs[0].header.pos.value(), static_cast<std::int64_t>(kLogHeaderSize));
  EXPECT_EQ(txs[0].physicals.size(), 3u);
  EXPECT_EQ(db->snapshot()->owner, owner);
  EXPECT_EQ(db->authenticate("alice", "pw"), owner);
  EXPECT_THROW(db->authenticate("alice", "wrong"), AuthenticationError);
}

TEST_F(EngineTest, CommittedPositionsAreFileOffsets) {
  Shop s = make_shop();
  Uid row = add_customer(s, 1, "Ann");
  auto bytes = db->log().read_all();
  auto [p, end] = decode_physical(bytes, static_cast<std::uint64_t>(row.value()));
  ASSERT_EQ(p.kind(), PhysicalKind::Record);
  EXPECT_EQ(p.as<phys::Record>().table, s.customer);
  EXPECT_EQ(p.as<phys::Record>().fields.front().first, s.cust_id);
  for (const auto& tx : read_transactions(bytes))
    for (const auto& q : tx.physicals) for_each_uid(q.payload, [](Uid u) { EXPECT_FALSE(u.is_temporary()); });
  EXPECT_EQ(db->snapshot()->watermark, bytes.size());
}

TEST_F(EngineTest, LaterCommitsOnlyAppend) {
  Shop s = make_shop();
  auto before = db->log().read_all();
  add_customer(s, 1, "Ann");
  add_customer(s, 2, "Bob");
  auto after = db->log().read_all();
  ASSERT_GT(after.size(), before.size());
  EXPECT_TRUE(std::equal(before.begin(), before.end(), after.begin()));
}

TEST_F(EngineTest, ReplayReproducesState) {
  Shop s = make_shop();
  add_customer(s, 1, "Ann");
  Uid bob = add_customer(s, 2, "Bob");
  Transaction tx = db->begin(owner, role);
  tx.remove(s.customer, bob);
  db->commit(tx);
  const auto live = state_hash(*db->snapshot());
  db.reset();
  open();
  EXPECT_EQ(state_hash(*db->snapshot()), live);
  EXPECT_EQ(row_count(s.customer), 1u);
}

TEST_F(EngineTest, TruncatedLogReportsLastGoodBoundary) {
  Shop s = make_shop();
  add_customer(s, 1, "Ann");
  const auto good = db->log().size();
  add_customer(s, 2, "Bob");
  const auto full = db->log().size();
  db.reset();
  std::filesystem::resize_file(dir.file("shop.pyl"), full - 2);
  try {
    Database::open(dir.file("shop.pyl"), {.sync = false});
    FAIL() << "expected corruption";
  } catch (const LogCorruption& e) {
    EXPECT_EQ(e.last_good_boundary(), good);
  }
}

TEST_F(EngineTest, DuplicatePrimaryKeyLeavesLogUntouched) {
  Shop s = make_shop();
  add_customer(s, 1, "Ann");
  const auto size = db->log().size();
  const auto hash = state_hash(*db->snapshot());
  EXPECT_THROW(add_customer(s, 1, "Again"), ConstraintError);
  EXPECT_EQ(db->log().size(), size);
  EXPECT_EQ(state_hash(*db->snapshot()), hash);
}

TEST_F(EngineTest, NotNullAndForeignKeyEnforced) {
  Shop s = make_shop();
  add_customer(s, 1, "Ann");
  EXPECT_THROW(add_order(s, 1, 99, 5), ConstraintError);
  Transaction tx = db->begin(owner, role);
  tx.insert(s.orders, {{s.ord_id, Value::integer(1)}, {s.ord_cust, Value::integer(1)}});
  EXPECT_THROW(db->commit(tx), ConstraintError);
  add_order(s, 1, 1, 5);
  EXPECT_EQ(row_count(s.orders), 1u);
}

TEST_F(EngineTest, CascadeDeleteRemovesChildren) {
  Shop s = make_shop(FkAction::Cascade);
  Uid ann = add_customer(s, 1, "Ann");
  add_customer(s, 2, "Bob");
  add_order(s, 10, 1, 5);
  add_order(s, 11, 1, 6);
  add_order(s, 12, 2, 7);
  Transaction tx = db->begin(owner, role);
  tx.remove(s.customer, ann);
  auto r = db->commit(tx);
  EXPECT_EQ(r.physicals.size(), 3u);  // the delete plus two cascaded deletes
  EXPECT_EQ(row_count(s.orders), 1u);
  const auto live = state_hash(*db->snapshot());
  db.reset();
  open();
  EXPECT_EQ(state_hash(*db->snapshot()), live);
}

TEST_F(EngineTest, CascadeUpdateFollowsKey) {
  Shop s = make_shop();
  Uid ann = add_customer(s, 1, "Ann");
  Uid order = add_order(s, 10, 1, 5);
  Transaction tx = db->begin(owner, role);
  tx.update(s.customer, ann, {{s.cust_id, Value::integer(7)}});
  db->commit(tx);
  EXPECT_EQ(db->snapshot()->row(s.orders, order)->get(s.ord_cust), Value::integer(7));
}

TEST_F(EngineTest, RestrictAndSetNull) {
  {
    Shop s = make_shop(FkAction::Restrict);
    Uid ann = add_customer(s, 1, "Ann");
    add_order(s, 10, 1, 5);
    Transaction tx = db->begin(owner, role);
    tx.remove(s.customer, ann);
    EXPECT_THROW(db->commit(tx), ConstraintError);
    EXPECT_EQ(row_count(s.orders), 1u);
  }
  db.reset();
  std::filesystem::remove(dir.file("shop.pyl"));
  open();
  Shop s = make_shop(FkAction::SetNull);
  Uid ann = add_customer(s, 1, "Ann");
  Uid order = add_order(s, 10, 1, 5);
  Transaction tx = db->begin(owner, role);
  tx.remove(s.customer, ann);
  db->commit(tx);
  EXPECT_TRUE(db->snapshot()->row(s.orders, order)->get(s.ord_cust).is_null());
}

TEST_F(EngineTest, AutokeyCountsUpAndConflictsWithConcurrentInsert) {
  Shop s = make_shop();
  Transaction a = db->begin(owner, role);
  Transaction b = db->begin(owner, role);
  Uid ra = a.insert(s.customer, {{s.cust_name, Value::text("Ann")}});
  Uid rb = b.insert(s.customer, {{s.cust_name, Value::text("Bob")}});
  EXPECT_EQ(a.state().row(s.customer, ra)->get(s.cust_id), Value::integer(1));
  EXPECT_EQ(b.state().row(s.customer, rb)->get(s.cust_id), Value::integer(1));
  db->commit(a);
  try {
    db->commit(b);
    FAIL() << "expected conflict";
  } catch (const ConflictError& e) {
    EXPECT_EQ(e.report().reason, ConflictReason::ColumnReadUpdated);
  }
  Transaction c = db->begin(owner, role);
  Uid rc = c.insert(s.customer, {{s.cust_name, Value::text("Bob")}});
  EXPECT_EQ(c.state().row(s.customer, rc)->get(s.cust_id), Value::integer(2));
}

TEST_F(EngineTest, ConflictGranularity) {
  Shop s = make_shop();
  Uid ann = add_customer(s, 1, "Ann");
  Uid bob = add_customer(s, 2, "Bob");

  // Disjoint columns of a read row: no conflict.
  {
    Transaction a = db->begin(owner, role);
    a.note_row_read(s.customer, ann, {s.cust_id});
    a.update(s.customer, bob, {{s.cust_name, Value::text("B")}});
    Transaction b = db->begin(owner, role);
    b.update(s.customer, ann, {{s.cust_name, Value::text("A")}});
    db->commit(b);
    EXPECT_NO_THROW(db->commit(a));
  }
  // Overlapping column of a read row.
  {
    Transaction a = db->begin(owner, role);
    a.note_row_read(s.customer, ann, {s.cust_name});
    a.update(s.customer, bob, {{s.cust_name, Value::text("B2")}});
    Transaction b = db->begin(owner, role);
    b.update(s.customer, ann, {{s.cust_name, Value::text("A2")}});
    db->commit(b);
    try {
      db->commit(a);
      FAIL();
    } catch (const ConflictError& e) {
      EXPECT_EQ(e.report().reason, ConflictReason::RowReadUpdated);
      EXPECT_EQ(e.report().object, ann);
    }
  }
  // A phantom entering a key that was looked up.
  {
    Transaction a = db->begin(owner, role);
    a.note_index_read(s.customer, s.cust_pk, {Value::integer(5)});
    a.update(s.customer, bob, {{s.cust_name, Value::text("B3")}});
    add_customer(s, 5, "Eve");
    try {
      db->commit(a);
      FAIL();
    } catch (const ConflictError& e) {
      EXPECT_EQ(e.report().reason, ConflictReason::RowReadUpdated);
    }
  }
  // A concurrent schema change to a table being written.
  {
    Transaction a = db->begin(owner, role);
    a.update(s.customer, bob, {{s.cust_name, Value::text("B4")}});
    Transaction b = db->begin(owner, role);
    b.stage(phys::Column{s.customer, "CITY", Domain::text(), 2, false, {}});
    db->commit(b);
    try {
      db->commit(a);
      FAIL();
    } catch (const ConflictError& e) {
      EXPECT_EQ(e.report().reason, ConflictReason::ObjectChanged);
      EXPECT_EQ(e.report().object, s.customer);
    }
  }
}

TEST_F(EngineTest, ReadOnlyTransactionCommitsWithoutWriting) {
  make_shop();
  const auto size = db->log().size();
  Transaction a = db->begin(owner, role);
  auto r = db->commit(a);
  EXPECT_FALSE(r.wrote);
  EXPECT_EQ(db->log().size(), size);
}

TEST_F(EngineTest, RemoteFailureAbortsLocalCommit) {
  Shop s = make_shop();
  const auto size = db->log().size();
  Transaction a = db->begin(owner, role);
  a.insert(s.customer, {{s.cust_id, Value::integer(3)}, {s.cust_name, Value::text("Cy")}});
  a.stage_remote(RemoteWrite{"http://h:1", "PUT", "http://h:1/x", "{}", "\"1\"", "", ""});
  RemoteExecutor failing = [](const std::vector<RemoteWrite>&) { throw RemoteError("precondition failed", 412); };
  EXPECT_THROW(db->commit(a, &failing), RemoteError);
  EXPECT_EQ(db->log().size(), size);
  EXPECT_THROW(a.stage_remote(RemoteWrite{"http://other:2", "PUT", "http://other:2/x", "{}", "", "", ""}),
               RemoteError);
}

TEST_F(EngineTest, RolesAndPrivileges) {
  Shop s = make_shop();
  Transaction tx = db->begin(owner, role);
  Uid bob = tx.stage(phys::User{"bob", hash_password("bob", "pw")});
  Uid clerk = tx.stage(phys::Role{"CLERK"});
  tx.stage(phys::Grant{kUsage, clerk, bob, false});
  tx.stage(phys::Grant{kSelect | kInsert, s.orders, clerk, false});
  auto r = db->commit(tx);
  bob = r.relocation.at(bob);
  clerk = r.relocation.at(clerk);

  EXPECT_THROW(db->begin(bob, role), AuthorizationError);
  EXPECT_EQ(db->default_role(bob), clerk);
  Transaction b = db->begin(bob, clerk);
  EXPECT_THROW(b.insert(s.customer, {{s.cust_id, Value::integer(1)}}), AuthorizationError);
  EXPECT_TRUE(check_privilege(*db->snapshot(), bob, clerk, s.ord_qty, kSelect));
  EXPECT_FALSE(check_privilege(*db->snapshot(), bob, clerk, s.ord_qty, kUpdate));
  EXPECT_THROW(generate_class_model(*db->snapshot(), bob, clerk, "CUSTOMER"), AuthorizationError);
}

TEST_F(EngineTest, ClassModelNavigation) {
  make_shop();
  auto snap = db->snapshot();
  ClassModel c = generate_class_model(*snap, owner, role, "CUSTOMER");
  EXPECT_EQ(c.key, std::vector<std::string>{"ID"});
  ASSERT_EQ(c.columns.size(), 2u);
  EXPECT_TRUE(c.columns[0].autokey);
  ASSERT_EQ(c.navigation.size(), 1u);
  EXPECT_EQ(c.navigation[0].name, "orderss");
  EXPECT_TRUE(c.navigation[0].many);
  EXPECT_EQ(c.navigation[0].target_fields, std::vector<std::string>{"CUST"});

  ClassModel o = generate_class_model(*snap, owner, role, "ORDERS");
  ASSERT_EQ(o.navigation.size(), 1u);
  EXPECT_EQ(o.navigation[0].name, "customer");
  EXPECT_FALSE(o.navigation[0].many);
  EXPECT_EQ(o.navigation[0].local_fields, std::vector<std::string>{"CUST"});
  EXPECT_THROW(generate_class_model(*snap, owner, role, "NOPE"), NotFound);
}

TEST_F(EngineTest, DropRules) {
  Shop s = make_shop();
  Transaction a = db->begin(owner, role);
  EXPECT_THROW(a.stage(phys::Drop{s.customer}), SchemaError);
  EXPECT_THROW(a.stage(phys::Drop{s.cust_id}), SchemaError);
  a.stage(phys::Drop{s.orders});
  a.stage(phys::Drop{s.customer});
  db->commit(a);
  EXPECT_FALSE(db->snapshot()->lookup(Namespace::Relation, "CUSTOMER"));
}

TEST_F(EngineTest, RingTrimRejectsOldSnapshots) {
  db.reset();
  open({.sync = false, .ring_capacity = 2});
  Shop s = make_shop();
  Transaction old = db->begin(owner, role);
  old.insert(s.customer, {{s.cust_id, Value::integer(100)}, {s.cust_name, Value::text("Old")}});
  for (int i = 1; i <= 4; ++i) add_customer(s, i, "c");
  EXPECT_THROW(db->commit(old), ConflictError);
}
