#pragma once

// Immutable B-tree (PTree) and positional list (PList).
//
// Every mutation returns a new tree value. Unchanged nodes are shared between
// the old and the new version, so holding on to an old tree is a snapshot.
// Nodes carry no parent links; traversal uses Bookmarks, which record an
// explicit root-to-leaf path and therefore only ever see the root they were
// created from.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace pyrlite {

namespace detail {
inline thread_local std::uint64_t ptree_nodes_built = 0;
}  // namespace detail

/// Number of PTree nodes constructed on the calling thread. Test hook.
inline std::uint64_t ptree_node_constructions() noexcept {
  return detail::ptree_nodes_built;
}

inline constexpr std::size_t kDefaultBranching = 8;

template <class K, class V, class Compare = std::less<K>>
class PTree {
 public:
  struct Node {
    bool leaf = true;
    std::vector<K> keys;  // leaf: entry keys; inner: smallest key under each child
    std::vector<V> values;  // leaf only
    std::vector<std::shared_ptr<const Node>> children;  // inner only
    std::size_t count = 0;  // leaf entries in this subtree

    std::size_t width() const noexcept { return leaf ? keys.size() : children.size(); }
  };
  using NodePtr = std::shared_ptr<const Node>;

  class Bookmark;
  class const_iterator;

  PTree() = default;
  explicit PTree(std::size_t branching, Compare cmp = Compare{})
      : branching_(branching), cmp_(std::move(cmp)) {
    if (branching_ < 2) throw std::invalid_argument("PTree branching must be > 1");
  }

  std::size_t size() const noexcept { return root_ ? root_->count : 0; }
  bool empty() const noexcept { return !root_; }
  std::size_t branching() const noexcept { return branching_; }
  const NodePtr& root() const noexcept { return root_; }

  /// Levels from root to leaf; 0 for the empty tree.
  std::size_t depth() const noexcept {
    std::size_t d = 0;
    for (const Node* n = root_.get(); n; n = n->leaf ? nullptr : n->children.front().get()) ++d;
    return d;
  }

  bool contains(const K& key) const { return find(key) != nullptr; }

  const V* find(const K& key) const {
    const Node* n = root_.get();
    while (n) {
      if (n->leaf) {
        auto i = lower(n, key);
        if (i < n->keys.size() && equal(n->keys[i], key)) return &n->values[i];
        return nullptr;
      }
      n = n->children[child_index(n, key)].get();
    }
    return nullptr;
  }

  std::optional<V> get(const K& key) const {
    if (const V* v = find(key)) return *v;
    return std::nullopt;
  }

  /// Insert or replace. Replacing an existing key leaves size() unchanged.
  [[nodiscard]] PTree add(const K& key, V value) const {
    PTree out = *this;
    if (!root_) {
      auto n = make_node(true);
      n->keys.push_back(key);
      n->values.push_back(std::move(value));
      n->count = 1;
      out.root_ = std::move(n);
      return out;
    }
    auto r = insert(root_, key, std::move(value));
    if (r.right) {
      auto top = make_node(false);
      top->keys = {r.left->keys.front(), r.right->keys.front()};
      top->count = r.left->count + r.right->count;
      top->children = {std::move(r.left), std::move(r.right)};
      out.root_ = std::move(top);
    } else {
      out.root_ = std::move(r.left);
    }
    return out;
  }

  /// Removing an absent key returns a tree sharing this tree's root.
  [[nodiscard]] PTree remove(const K& key) const {
    if (!root_) return *this;
    auto r = erase(root_, key);
    if (!r.removed) return *this;
    PTree out = *this;
    NodePtr n = std::move(r.node);
    if (n->count == 0) {
      n.reset();
    } else if (!n->leaf && n->children.size() == 1) {
      n = n->children.front();
    }
    out.root_ = std::move(n);
    return out;
  }

  std::optional<Bookmark> first() const {
    if (!root_) return std::nullopt;
    Bookmark b(root_);
    b.descend_first(root_);
    return b;
  }

  std::optional<Bookmark> last() const {
    if (!root_) return std::nullopt;
    Bookmark b(root_);
    b.descend_last(root_);
    return b;
  }

  /// Bookmark at the first entry whose key is not less than `key`.
  std::optional<Bookmark> seek(const K& key) const {
    if (!root_) return std::nullopt;
    Bookmark b(root_);
    const Node* n = root_.get();
    while (!n->leaf) {
      auto i = child_index(n, key);
      b.path_.back().index = i;
      b.path_.push_back({n->children[i], 0});
      n = n->children[i].get();
    }
    auto i = lower(n, key);
    if (i < n->keys.size()) {
      b.path_.back().index = i;
      return b;
    }
    b.path_.back().index = n->keys.size() - 1;
    return b.next();
  }

  /// Entry at an ordinal position (0-based), or nullopt when out of range.
  std::optional<Bookmark> at(std::size_t index) const {
    if (!root_ || index >= root_->count) return std::nullopt;
    Bookmark b(root_);
    const Node* n = root_.get();
    while (!n->leaf) {
      std::size_t i = 0;
      while (index >= n->children[i]->count) index -= n->children[i++]->count;
      b.path_.back().index = i;
      b.path_.push_back({n->children[i], 0});
      n = n->children[i].get();
    }
    b.path_.back().index = index;
    return b;
  }

  const_iterator begin() const { return const_iterator(first()); }
  const_iterator end() const { return const_iterator(std::nullopt); }

  /// Every node reachable from the root, parents before children.
  std::vector<const Node*> nodes() const {
    std::vector<const Node*> out;
    if (!root_) return out;
    std::vector<const Node*> stack{root_.get()};
    while (!stack.empty()) {
      const Node* n = stack.back();
      stack.pop_back();
      out.push_back(n);
      if (!n->leaf)
        for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(it->get());
    }
    return out;
  }

  /// Checks the shape invariants; returns false on the first violation.
  bool well_formed() const {
    if (!root_) return true;
    std::size_t leaf_depth = 0;
    return check(root_.get(), true, 1, leaf_depth);
  }

  friend bool same_root(const PTree& a, const PTree& b) noexcept { return a.root_ == b.root_; }

  /// Entry-wise equality (keys equivalent under Compare, values ==).
  bool same_entries(const PTree& other) const {
    if (size() != other.size()) return false;
    auto a = begin(), b = other.begin();
    for (; a != end(); ++a, ++b) {
      if (!equal(a->first, b->first) || !(a->second == b->second)) return false;
    }
    return true;
  }

  class Bookmark {
   public:
    const K& key() const { return leaf().keys[path_.back().index]; }
    const V& value() const { return leaf().values[path_.back().index]; }

    /// Ordinal of this entry within the bookmark's root.
    std::size_t position() const {
      std::size_t pos = 0;
      for (std::size_t level = 0; level + 1 < path_.size(); ++level) {
        const Node& n = *path_[level].node;
        for (std::size_t i = 0; i < path_[level].index; ++i) pos += n.children[i]->count;
      }
      return pos + path_.back().index;
    }

    std::optional<Bookmark> next() const {
      Bookmark b = *this;
      if (!b.advance()) return std::nullopt;
      return b;
    }

    std::optional<Bookmark> previous() const {
      Bookmark b = *this;
      if (!b.retreat()) return std::nullopt;
      return b;
    }

   private:
    friend class PTree;
    friend class const_iterator;

    // index is the child slot for inner nodes and the entry slot for the leaf.
    struct Frame {
      NodePtr node;
      std::size_t index = 0;
    };

    explicit Bookmark(const NodePtr& root) { path_.push_back({root, 0}); }

    const Node& leaf() const { return *path_.back().node; }

    void descend_first(NodePtr) { descend(true); }
    void descend_last(NodePtr) {
      path_.back().index = last_slot(*path_.back().node);
      descend(false);
    }

    static std::size_t last_slot(const Node& n) { return n.width() - 1; }

    // Extends the path from the current bottom frame down to a leaf.
    void descend(bool leftmost) {
      for (;;) {
        const Node& n = *path_.back().node;
        if (n.leaf) return;
        NodePtr c = n.children[path_.back().index];
        std::size_t slot = leftmost ? 0 : last_slot(*c);
        path_.push_back({std::move(c), slot});
      }
    }

    bool advance() {
      if (path_.back().index + 1 < leaf().keys.size()) {
        ++path_.back().index;
        return true;
      }
      auto saved = path_;
      path_.pop_back();
      while (!path_.empty()) {
        Frame& f = path_.back();
        if (f.index + 1 < f.node->children.size()) {
          ++f.index;
          path_.push_back({f.node->children[f.index], 0});
          descend(true);
          return true;
        }
        path_.pop_back();
      }
      path_ = std::move(saved);
      return false;
    }

    bool retreat() {
      if (path_.back().index > 0) {
        --path_.back().index;
        return true;
      }
      auto saved = path_;
      path_.pop_back();
      while (!path_.empty()) {
        Frame& f = path_.back();
        if (f.index > 0) {
          --f.index;
          NodePtr c = f.node->children[f.index];
          std::size_t slot = last_slot(*c);
          path_.push_back({std::move(c), slot});
          descend(false);
          return true;
        }
        path_.pop_back();
      }
      path_ = std::move(saved);
      return false;
    }

    std::vector<Frame> path_;
  };

  class const_iterator {
   public:
    using value_type = std::pair<const K&, const V&>;
    using difference_type = std::ptrdiff_t;
    using reference = value_type;
    using pointer = void;
    using iterator_category = std::input_iterator_tag;

    const_iterator() = default;
    explicit const_iterator(std::optional<Bookmark> b) : at_(std::move(b)) {}

    value_type operator*() const { return {at_->key(), at_->value()}; }
    struct Arrow {
      value_type p;
      const value_type* operator->() const { return &p; }
    };
    Arrow operator->() const { return Arrow{**this}; }

    const_iterator& operator++() {
      if (!at_->advance()) at_.reset();
      return *this;
    }
    const_iterator operator++(int) {
      auto old = *this;
      ++*this;
      return old;
    }
    bool operator==(const const_iterator& o) const {
      if (!at_ || !o.at_) return !at_ && !o.at_;
      return &at_->leaf() == &o.at_->leaf() && at_->path_.back().index == o.at_->path_.back().index;
    }
    const std::optional<Bookmark>& bookmark() const { return at_; }

   private:
    std::optional<Bookmark> at_;
  };

 private:
  struct Insertion {
    NodePtr left;
    NodePtr right;  // set when the node split
  };
  struct Erasure {
    NodePtr node;
    bool removed = false;
  };

  static std::shared_ptr<Node> make_node(bool leaf) {
    ++detail::ptree_nodes_built;
    auto n = std::make_shared<Node>();
    n->leaf = leaf;
    return n;
  }
  static std::shared_ptr<Node> clone(const Node& src) {
    ++detail::ptree_nodes_built;
    return std::make_shared<Node>(src);
  }

  bool less(const K& a, const K& b) const { return cmp_(a, b); }
  bool equal(const K& a, const K& b) const { return !cmp_(a, b) && !cmp_(b, a); }

  std::size_t lower(const Node* n, const K& key) const {
    auto it = std::lower_bound(n->keys.begin(), n->keys.end(), key,
                               [this](const K& a, const K& b) { return cmp_(a, b); });
    return static_cast<std::size_t>(it - n->keys.begin());
  }

  // Last child whose smallest key is <= key, or 0.
  std::size_t child_index(const Node* n, const K& key) const {
    auto it = std::upper_bound(n->keys.begin(), n->keys.end(), key,
                               [this](const K& a, const K& b) { return cmp_(a, b); });
    auto i = static_cast<std::size_t>(it - n->keys.begin());
    return i == 0 ? 0 : i - 1;
  }

  std::size_t max_width() const noexcept { return 2 * branching_; }

  Insertion split(std::shared_ptr<Node> n) const {
    const std::size_t half = branching_;
    auto right = make_node(n->leaf);
    right->keys.assign(n->keys.begin() + half, n->keys.end());
    n->keys.resize(half);
    if (n->leaf) {
      right->values.assign(std::make_move_iterator(n->values.begin() + half),
                           std::make_move_iterator(n->values.end()));
      n->values.resize(half);
      right->count = right->keys.size();
      n->count = n->keys.size();
    } else {
      right->children.assign(n->children.begin() + half, n->children.end());
      n->children.resize(half);
      right->count = 0;
      for (auto& c : right->children) right->count += c->count;
      n->count -= right->count;
    }
    return {std::move(n), std::move(right)};
  }

  Insertion insert(const NodePtr& node, const K& key, V&& value) const {
    if (node->leaf) {
      auto i = lower(node.get(), key);
      auto n = clone(*node);
      if (i < n->keys.size() && equal(n->keys[i], key)) {
        n->values[i] = std::move(value);
        return {std::move(n), nullptr};
      }
      n->keys.insert(n->keys.begin() + i, key);
      n->values.insert(n->values.begin() + i, std::move(value));
      ++n->count;
      if (n->keys.size() > max_width()) return split(std::move(n));
      return {std::move(n), nullptr};
    }
    auto i = child_index(node.get(), key);
    auto sub = insert(node->children[i], key, std::move(value));
    auto n = clone(*node);
    n->count = n->count - node->children[i]->count + sub.left->count;
    n->keys[i] = sub.left->keys.front();
    n->children[i] = std::move(sub.left);
    if (sub.right) {
      n->count += sub.right->count;
      n->keys.insert(n->keys.begin() + i + 1, sub.right->keys.front());
      n->children.insert(n->children.begin() + i + 1, std::move(sub.right));
      if (n->children.size() > max_width()) return split(std::move(n));
    }
    return {std::move(n), nullptr};
  }

  Erasure erase(const NodePtr& node, const K& key) const {
    if (node->leaf) {
      auto i = lower(node.get(), key);
      if (i >= node->keys.size() || !equal(node->keys[i], key)) return {node, false};
      auto n = clone(*node);
      n->keys.erase(n->keys.begin() + i);
      n->values.erase(n->values.begin() + i);
      --n->count;
      return {std::move(n), true};
    }
    auto i = child_index(node.get(), key);
    auto sub = erase(node->children[i], key);
    if (!sub.removed) return {node, false};
    auto n = clone(*node);
    n->count -= 1;
    n->children[i] = sub.node;
    if (sub.node->width() >= branching_) {
      n->keys[i] = sub.node->keys.front();
      return {std::move(n), true};
    }
    rebalance(*n, i);
    return {std::move(n), true};
  }

  // children[i] of n is underfull; borrow from or merge with a sibling.
  void rebalance(Node& n, std::size_t i) const {
    if (n.children.size() == 1) {
      n.keys[0] = n.children[0]->keys.front();
      return;
    }
    const bool use_left = i > 0;
    const std::size_t li = use_left ? i - 1 : i;  // left member of the pair
    const std::size_t ri = li + 1;
    const Node& a = *n.children[li];
    const Node& b = *n.children[ri];
    if (a.width() + b.width() <= max_width()) {
      auto m = make_node(a.leaf);
      m->keys = a.keys;
      m->keys.insert(m->keys.end(), b.keys.begin(), b.keys.end());
      if (a.leaf) {
        m->values = a.values;
        m->values.insert(m->values.end(), b.values.begin(), b.values.end());
      } else {
        m->children = a.children;
        m->children.insert(m->children.end(), b.children.begin(), b.children.end());
      }
      m->count = a.count + b.count;
      n.keys[li] = m->keys.front();
      n.children[li] = std::move(m);
      n.keys.erase(n.keys.begin() + ri);
      n.children.erase(n.children.begin() + ri);
      return;
    }
    // Redistribute evenly between the two siblings.
    std::vector<K> keys = a.keys;
    keys.insert(keys.end(), b.keys.begin(), b.keys.end());
    const std::size_t total = keys.size();
    const std::size_t left_size = total / 2;
    auto na = make_node(a.leaf);
    auto nb = make_node(a.leaf);
    na->keys.assign(keys.begin(), keys.begin() + left_size);
    nb->keys.assign(keys.begin() + left_size, keys.end());
    if (a.leaf) {
      std::vector<V> vals = a.values;
      vals.insert(vals.end(), b.values.begin(), b.values.end());
      na->values.assign(vals.begin(), vals.begin() + left_size);
      nb->values.assign(vals.begin() + left_size, vals.end());
      na->count = na->keys.size();
      nb->count = nb->keys.size();
    } else {
      std::vector<NodePtr> kids = a.children;
      kids.insert(kids.end(), b.children.begin(), b.children.end());
      na->children.assign(kids.begin(), kids.begin() + left_size);
      nb->children.assign(kids.begin() + left_size, kids.end());
      for (auto& c : na->children) na->count += c->count;
      for (auto& c : nb->children) nb->count += c->count;
    }
    n.keys[li] = na->keys.front();
    n.keys[ri] = nb->keys.front();
    n.children[li] = std::move(na);
    n.children[ri] = std::move(nb);
  }

  bool check(const Node* n, bool is_root, std::size_t level, std::size_t& leaf_depth) const {
    const std::size_t w = n->width();
    if (w > max_width()) return false;
    if (!is_root && w < branching_) return false;
    if (is_root && !n->leaf && w < 2) return false;
    for (std::size_t i = 1; i < n->keys.size(); ++i)
      if (!less(n->keys[i - 1], n->keys[i])) return false;
    if (n->leaf) {
      if (n->values.size() != n->keys.size() || n->count != n->keys.size()) return false;
      if (leaf_depth == 0) leaf_depth = level;
      return leaf_depth == level;
    }
    if (n->keys.size() != n->children.size()) return false;
    std::size_t total = 0;
    for (std::size_t i = 0; i < n->children.size(); ++i) {
      const Node* c = n->children[i].get();
      if (!equal(n->keys[i], c->keys.front())) return false;
      if (!check(c, false, level + 1, leaf_depth)) return false;
      total += c->count;
    }
    return total == n->count;
  }

  NodePtr root_;
  std::size_t branching_ = kDefaultBranching;
  Compare cmp_{};
};

/// Ordered set on top of PTree.
template <class K, class Compare = std::less<K>>
class PSet {
 public:
  PSet() = default;
  [[nodiscard]] PSet add(const K& k) const { return PSet(tree_.add(k, std::monostate{})); }
  [[nodiscard]] PSet remove(const K& k) const { return PSet(tree_.remove(k)); }
  [[nodiscard]] PSet unite(const PSet& other) const {
    PSet out = *this;
    for (auto [k, v] : other.tree_) out = out.add(k);
    return out;
  }
  bool contains(const K& k) const { return tree_.contains(k); }
  std::size_t size() const noexcept { return tree_.size(); }
  bool empty() const noexcept { return tree_.empty(); }
  const PTree<K, std::monostate, Compare>& tree() const noexcept { return tree_; }

  template <class F>
  void for_each(F&& f) const {
    for (auto [k, v] : tree_) f(k);
  }

  friend bool operator==(const PSet& a, const PSet& b) { return a.tree_.same_entries(b.tree_); }

 private:
  explicit PSet(PTree<K, std::monostate, Compare> t) : tree_(std::move(t)) {}
  PTree<K, std::monostate, Compare> tree_;
};

/// Positional list: a PTree keyed by dense positions 0..size()-1.
/// Removal and insertion in the middle renumber every later element.
template <class V>
class PList {
 public:
  PList() = default;
  explicit PList(std::size_t branching) : tree_(branching) {}

  std::size_t size() const noexcept { return tree_.size(); }
  bool empty() const noexcept { return tree_.empty(); }

  const V& operator[](std::size_t pos) const {
    const V* v = tree_.find(pos);
    if (!v) throw std::out_of_range("PList index out of range");
    return *v;
  }

  [[nodiscard]] PList push_back(V v) const { return PList(tree_.add(size(), std::move(v))); }

  [[nodiscard]] PList insert_at(std::size_t pos, V v) const {
    if (pos > size()) throw std::out_of_range("PList insert position out of range");
    PTree<std::size_t, V> t(tree_.branching());
    std::size_t i = 0;
    for (auto [k, val] : tree_) {
      if (i == pos) t = t.add(i++, v);
      t = t.add(i++, val);
    }
    if (pos == size()) t = t.add(i, std::move(v));
    return PList(std::move(t));
  }

  [[nodiscard]] PList remove_at(std::size_t pos) const {
    if (pos >= size()) throw std::out_of_range("PList remove position out of range");
    PTree<std::size_t, V> t(tree_.branching());
    std::size_t i = 0;
    for (auto [k, val] : tree_) {
      if (k == pos) continue;
      t = t.add(i++, val);
    }
    return PList(std::move(t));
  }

  const PTree<std::size_t, V>& tree() const noexcept { return tree_; }
  auto begin() const { return tree_.begin(); }
  auto end() const { return tree_.end(); }

 private:
  explicit PList(PTree<std::size_t, V> t) : tree_(std::move(t)) {}
  PTree<std::size_t, V> tree_;
};

}  // namespace pyrlite
