#include "pyrlite/pbtree.hpp"
#include "pyrlite/key.hpp"
#include "pyrlite/errors.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace pyrlite;

namespace {

using IntTree = PTree<int, std::string>;

IntTree load(int n, std::size_t branching = 8) {
  IntTree t(branching);
  for (int i = 1; i <= n; ++i) t = t.add(i, std::to_string(i));
  return t;
}

std::vector<int> keys_of(const IntTree& t) {
  std::vector<int> out;
  for (auto [k, v] : t) out.push_back(k);
  return out;
}

// Nodes of `after` not present in `before`.
std::size_t new_nodes(const IntTree& before, const IntTree& after) {
  auto old = before.nodes();
  std::set<const void*> seen(old.begin(), old.end());
  std::size_t fresh = 0;
  for (auto* n : after.nodes())
    if (!seen.count(n)) ++fresh;
  return fresh;
}

}  // namespace

TEST(PTree, SingletonAndReplace) {
  IntTree t;
  t = t.add(5, "a");
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.get(5), "a");
  t = t.add(5, "b");
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.get(5), "b");
  EXPECT_FALSE(IntTree().get(1).has_value());
}

TEST(PTree, RemoveToEmptyAndAbsent) {
  IntTree t = IntTree().add(5, "a");
  EXPECT_TRUE(t.remove(5).empty());
  IntTree big = load(100);
  EXPECT_TRUE(same_root(big, big.remove(1000)));
}

TEST(PTree, BulkLoadMatchesOracle) {
  std::mt19937 rng(7);
  std::map<int, std::string> oracle;
  IntTree t;
  std::vector<int> order(10000);
  for (int i = 0; i < 10000; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (int k : order) {
    t = t.add(k, std::to_string(k * 3));
    oracle[k] = std::to_string(k * 3);
  }
  ASSERT_TRUE(t.well_formed());
  for (int k = 0; k < 10000; ++k) EXPECT_EQ(t.get(k), oracle[k]);
  EXPECT_EQ(t.size(), oracle.size());
}

TEST(PTree, RandomRemovalMatchesOracle) {
  std::mt19937 rng(11);
  IntTree t;
  std::map<int, int> oracle;
  PTree<int, int> ti;
  for (int i = 0; i < 10000; ++i) {
    ti = ti.add(i, i);
    oracle[i] = i;
  }
  std::vector<int> victims(10000);
  for (int i = 0; i < 10000; ++i) victims[i] = i;
  std::shuffle(victims.begin(), victims.end(), rng);
  victims.resize(5000);
  for (int k : victims) {
    ti = ti.remove(k);
    oracle.erase(k);
  }
  ASSERT_TRUE(ti.well_formed());
  std::vector<std::pair<int, int>> got(ti.begin(), ti.end());
  std::vector<std::pair<int, int>> want(oracle.begin(), oracle.end());
  EXPECT_EQ(got, want);
}

TEST(PTree, ShapeInvariantUnderMixedOperations) {
  std::mt19937 rng(3);
  for (std::size_t n : {2u, 3u, 8u}) {
    PTree<int, int> t(n);
    std::map<int, int> oracle;
    for (int step = 0; step < 6000; ++step) {
      int k = static_cast<int>(rng() % 700);
      if (rng() % 3 == 0) {
        t = t.remove(k);
        oracle.erase(k);
      } else {
        t = t.add(k, step);
        oracle[k] = step;
      }
      if (step % 97 == 0) {
        ASSERT_TRUE(t.well_formed()) << "n=" << n << " step=" << step;
      }
    }
    ASSERT_TRUE(t.well_formed());
    std::vector<std::pair<int, int>> got(t.begin(), t.end());
    std::vector<std::pair<int, int>> want(oracle.begin(), oracle.end());
    EXPECT_EQ(got, want);
  }
}

TEST(PTree, SequentialInsertAllocatesFewNodes) {
  IntTree before = load(10000);
  auto snapshot = keys_of(before);
  const auto start = ptree_node_constructions();
  IntTree after = before.add(10001, "x");
  const auto built = ptree_node_constructions() - start;
  EXPECT_LE(built, 7u);
  EXPECT_EQ(new_nodes(before, after), built);
  EXPECT_EQ(keys_of(before), snapshot);
  EXPECT_EQ(after.size(), 10001u);
}

// Path copy plus one sibling per split level, plus a possible new root.
TEST(PTree, StructuralSharingBound) {
  std::mt19937 rng(5);
  PTree<int, int> t;
  for (int i = 0; i < 4000; ++i) {
    int k = static_cast<int>(rng() % 100000);
    const auto depth = t.depth();
    const auto start = ptree_node_constructions();
    auto next = t.add(k, i);
    const auto built = ptree_node_constructions() - start;
    ASSERT_LE(built, 2 * depth + 1) << "key " << k;
    t = next;
  }
}

TEST(PTree, PersistenceOfOldVersions) {
  IntTree t = load(500);
  auto before = keys_of(t);
  auto t2 = t.remove(250).add(1000, "z").remove(1).add(7, "seven");
  EXPECT_EQ(keys_of(t), before);
  EXPECT_EQ(t.get(7), "7");
  EXPECT_EQ(t2.get(7), "seven");
}

TEST(Bookmark, SeekAndStep) {
  IntTree empty;
  EXPECT_FALSE(empty.first().has_value());
  IntTree t = IntTree().add(1, "a").add(3, "b").add(5, "c");
  auto b = t.seek(2);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->key(), 3);
  EXPECT_FALSE(t.seek(6).has_value());
  auto last = t.last();
  ASSERT_TRUE(last);
  EXPECT_FALSE(last->next().has_value());
  EXPECT_FALSE(t.first()->previous().has_value());
}

TEST(Bookmark, ForwardBackwardWalksMirror) {
  std::mt19937 rng(9);
  IntTree t;
  for (int i = 0; i < 3000; ++i) t = t.add(static_cast<int>(rng() % 50000), "");
  std::vector<int> fwd, bwd;
  for (auto b = t.first(); b; b = b->next()) fwd.push_back(b->key());
  for (auto b = t.last(); b; b = b->previous()) bwd.push_back(b->key());
  std::reverse(bwd.begin(), bwd.end());
  EXPECT_EQ(fwd, bwd);
  EXPECT_TRUE(std::is_sorted(fwd.begin(), fwd.end()));
  EXPECT_EQ(std::adjacent_find(fwd.begin(), fwd.end()), fwd.end());
  EXPECT_EQ(fwd.size(), t.size());
}

TEST(Bookmark, PositionAndAt) {
  IntTree t = load(1000);
  for (std::size_t i : {0u, 1u, 17u, 500u, 999u}) {
    auto b = t.at(i);
    ASSERT_TRUE(b);
    EXPECT_EQ(b->position(), i);
    EXPECT_EQ(b->key(), static_cast<int>(i + 1));
  }
  EXPECT_FALSE(t.at(1000).has_value());
}

TEST(Bookmark, WalkIgnoresLaterVersions) {
  IntTree t = load(2000);
  auto expected = keys_of(t);
  std::vector<int> walked;
  IntTree live = t;
  auto b = t.first();
  int extra = 5000;
  while (b) {
    walked.push_back(b->key());
    if (walked.size() % 20 == 0 && extra < 5100) live = live.add(extra++, "new").remove(walked.back() + 1);
    b = b->next();
  }
  EXPECT_EQ(extra, 5100);
  EXPECT_EQ(walked, expected);
}

TEST(PSet, UnionAndEquality) {
  auto a = PSet<int>().add(1).add(2);
  auto b = PSet<int>().add(2).add(3);
  auto u = a.unite(b);
  EXPECT_EQ(u.size(), 3u);
  EXPECT_TRUE(u == PSet<int>().add(3).add(1).add(2));
  EXPECT_FALSE(a == b);
}

TEST(PList, RemoveAtRenumbers) {
  auto l = PList<std::string>().push_back("a").push_back("b").push_back("c");
  auto r = l.remove_at(1);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], "a");
  EXPECT_EQ(r[1], "c");
  EXPECT_TRUE(PList<std::string>().push_back("a").remove_at(0).empty());
  EXPECT_THROW((void)l.remove_at(3), std::out_of_range);
  EXPECT_THROW((void)l.insert_at(4, "x"), std::out_of_range);
}

TEST(PList, RandomEditsMatchVectorOracle) {
  std::mt19937 rng(21);
  PList<int> l;
  std::vector<int> oracle;
  for (int step = 0; step < 1500; ++step) {
    if (!oracle.empty() && rng() % 3 == 0) {
      auto pos = rng() % oracle.size();
      l = l.remove_at(pos);
      oracle.erase(oracle.begin() + static_cast<std::ptrdiff_t>(pos));
    } else {
      auto pos = rng() % (oracle.size() + 1);
      l = l.insert_at(pos, step);
      oracle.insert(oracle.begin() + static_cast<std::ptrdiff_t>(pos), step);
    }
  }
  ASSERT_EQ(l.size(), oracle.size());
  std::size_t expect = 0;
  for (auto [k, v] : l) {
    EXPECT_EQ(k, expect);
    EXPECT_EQ(v, oracle[expect]);
    ++expect;
  }
}

TEST(Key, OrdersWithinKindAndRejectsMixed) {
  EXPECT_LT(Key(1), Key(2));
  EXPECT_LT(Key("a"), Key("b"));
  EXPECT_LT((Key{1, "a"}), (Key{1, "b"}));
  EXPECT_LT((Key{1}), (Key{1, 0}));
  EXPECT_THROW((void)(Key(1) < Key("a")), KeyKindError);
  PTree<Key, int> t;
  t = t.add(Key{"x", 2}, 1).add(Key{"x", 1}, 2);
  EXPECT_EQ(t.first()->value(), 2);
}
