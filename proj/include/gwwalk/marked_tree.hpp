#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "gwwalk/error.hpp"
#include "gwwalk/mark_law.hpp"
#include "gwwalk/rng.hpp"

namespace gwwalk {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
/// The reflecting parent e* of the root.
inline constexpr NodeId kEStar = kNoNode - 1;
inline constexpr NodeId kRoot = 0;

struct TreeNode {
  NodeId parent = kNoNode;
  NodeId first_child = kNoNode;
  std::uint32_t n_children = 0;
  std::uint32_t depth = 0;
  std::uint32_t weight_offset = 0;
  bool grown = false;
  double mark = 0.0;
  double potential = 0.0;
  std::uint64_t key = 0;
};

/// One quenched environment: a marked Galton-Watson tree grown on demand.
///
/// Node children are sampled exactly once, from a generator keyed by
/// (environment seed, path from the root), so the environment does not depend
/// on the order in which it is explored. Children of a node are contiguous ids.
/// A tree built with from_children() is finite and fully grown.
class MarkedTree {
 public:
  MarkedTree() = default;

  MarkedTree(const MarkLaw& law, std::uint64_t env_seed) { reset(law, env_seed); }

  void reset(const MarkLaw& law, std::uint64_t env_seed) {
    law_ = law;
    lazy_ = true;
    reset(env_seed);
  }

  /// New environment from the same law, reusing allocated storage.
  void reset(std::uint64_t env_seed) {
    nodes_.clear();
    weights_.clear();
    h_cache_.clear();
    TreeNode root;
    root.key = mix64(env_seed ^ 0x5851f42d4c957f2dULL);
    nodes_.push_back(root);
  }

  /// Finite explicit environment. Nodes are numbered breadth-first: node 0 is
  /// the root and the children of node i get the next free ids in order.
  /// children_marks[i] lists the marks of node i's children.
  static MarkedTree from_children(const std::vector<std::vector<double>>& children_marks) {
    MarkedTree t;
    t.nodes_.push_back(TreeNode{});
    for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
      const auto& marks = i < children_marks.size() ? children_marks[i] : std::vector<double>{};
      t.attach_children(static_cast<NodeId>(i), marks);
    }
    if (children_marks.size() > t.nodes_.size())
      throw Error(ErrorCode::InvalidArgument, "children_marks lists more nodes than the tree has");
    return t;
  }

  /// Copy of the first `depth` generations; nodes at that depth become leaves.
  MarkedTree truncated(std::uint32_t depth) {
    std::vector<std::vector<double>> spec;
    std::vector<NodeId> order{kRoot};
    for (std::size_t i = 0; i < order.size(); ++i) {
      NodeId x = order[i];
      std::vector<double> marks;
      if (nodes_[x].depth < depth)
        for (NodeId c : grow(x)) {
          marks.push_back(nodes_[c].mark);
          order.push_back(c);
        }
      spec.push_back(std::move(marks));
    }
    return from_children(spec);
  }

  bool is_lazy() const noexcept { return lazy_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const TreeNode& node(NodeId x) const { return nodes_[x]; }
  double potential(NodeId x) const { return nodes_[x].potential; }
  double mark(NodeId x) const { return nodes_[x].mark; }
  std::uint32_t depth(NodeId x) const { return nodes_[x].depth; }
  NodeId parent(NodeId x) const { return nodes_[x].parent; }
  bool grown(NodeId x) const { return nodes_[x].grown; }

  /// Children ids of x, sampling them on first call.
  std::pair<NodeId, NodeId> grow_range(NodeId x) {
    if (!nodes_[x].grown) grow_impl(x);
    const TreeNode& n = nodes_[x];
    return {n.first_child, n.first_child + n.n_children};
  }

  struct ChildRange {
    NodeId first, last;
    struct It {
      NodeId v;
      NodeId operator*() const { return v; }
      It& operator++() { ++v; return *this; }
      bool operator!=(const It& o) const { return v != o.v; }
    };
    It begin() const { return {first}; }
    It end() const { return {last}; }
    std::size_t size() const { return last - first; }
  };

  ChildRange grow(NodeId x) {
    auto [a, b] = grow_range(x);
    return {a, b};
  }

  /// Children of an already grown node.
  ChildRange children(NodeId x) const {
    const TreeNode& n = nodes_[x];
    return {n.first_child, n.first_child + n.n_children};
  }

  /// Cumulative normalized transition weights at grown node x:
  /// entry 0 is p(x, parent), entry i is p(x,parent) + ... + p(x, x^i).
  std::span<const double> cumulative_weights(NodeId x) const {
    const TreeNode& n = nodes_[x];
    return {weights_.data() + n.weight_offset, n.n_children + std::size_t{1}};
  }

  double prob_to_parent(NodeId x) const { return weights_[nodes_[x].weight_offset]; }

  double prob_to_child(NodeId x, std::uint32_t i) const {
    const double* w = weights_.data() + nodes_[x].weight_offset;
    return w[i + 1] - w[i];
  }

  /// H_x = sum_{e <= u <= x} e^{V(u) - V(x)}, via H_x = 1 + e^{-A_x} H_{x*}.
  double hx(NodeId x) {
    if (h_cache_.size() < nodes_.size()) h_cache_.resize(nodes_.size(), -1.0);
    if (h_cache_[x] >= 0.0) return h_cache_[x];
    std::vector<NodeId> chain;
    NodeId y = x;
    while (y != kNoNode && h_cache_[y] < 0.0) {
      chain.push_back(y);
      y = nodes_[y].parent;
    }
    double h = y == kNoNode ? 0.0 : h_cache_[y];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      NodeId z = *it;
      h = z == kRoot ? 1.0 : 1.0 + std::exp(-nodes_[z].mark) * h;
      h_cache_[z] = h;
    }
    return h;
  }

  struct LevelSum {
    double value = 0.0;
    bool extinct = false;
  };

  /// W_level = sum_{|x| = level} e^{-V(x)}, growing every node above `level`.
  LevelSum additive_martingale(std::uint32_t level) {
    std::vector<NodeId> frontier{kRoot}, next;
    for (std::uint32_t l = 0; l < level && !frontier.empty(); ++l) {
      next.clear();
      for (NodeId x : frontier)
        for (NodeId c : grow(x)) next.push_back(c);
      frontier.swap(next);
    }
    LevelSum out;
    out.extinct = frontier.empty();
    for (NodeId x : frontier) out.value += std::exp(-nodes_[x].potential);
    return out;
  }

  /// Proxy for W_infinity: W at `level`, except that subtrees whose weight
  /// e^{-V(x)} falls below `prune` are replaced by their conditional mean
  /// e^{-V(x)} (E[W] = 1 for every subtree).
  double w_infinity_proxy(std::uint32_t level, double prune) {
    double total = 0.0;
    std::vector<NodeId> stack{kRoot};
    while (!stack.empty()) {
      NodeId x = stack.back();
      stack.pop_back();
      double w = std::exp(-nodes_[x].potential);
      if (nodes_[x].depth == level || w < prune) {
        total += w;
        continue;
      }
      for (NodeId c : grow(x)) stack.push_back(c);
    }
    return total;
  }

  /// True when some line of descent reaches `depth`.
  bool survives_to(std::uint32_t depth) {
    std::vector<NodeId> stack{kRoot};
    while (!stack.empty()) {
      NodeId x = stack.back();
      stack.pop_back();
      if (nodes_[x].depth >= depth) return true;
      for (NodeId c : grow(x)) stack.push_back(c);
    }
    return false;
  }

  /// Vertices x with 1 <= |x| <= level, max_{1<=i<=|x|} H_{x_i} <= lambda and
  /// min_{1<=i<=|x|} V(x_i) >= -h.
  std::vector<NodeId> regular_line(std::uint32_t level, double lambda, double h) {
    std::vector<NodeId> out;
    if (level == 0) return out;
    std::vector<NodeId> stack;
    for (NodeId c : grow(kRoot)) stack.push_back(c);
    while (!stack.empty()) {
      NodeId x = stack.back();
      stack.pop_back();
      // Both conditions are inherited along the line, so failing prunes the subtree.
      if (hx(x) > lambda || nodes_[x].potential < -h) continue;
      out.push_back(x);
      if (nodes_[x].depth < level)
        for (NodeId c : grow(x)) stack.push_back(c);
    }
    return out;
  }

  std::vector<NodeId> ancestors_inclusive(NodeId x) const {
    std::vector<NodeId> line;
    for (NodeId y = x; y != kNoNode; y = nodes_[y].parent) line.push_back(y);
    return {line.rbegin(), line.rend()};
  }

 private:
  void grow_impl(NodeId x) {
    SplitMix64 gen(nodes_[x].key);
    const Atom& atom = law_.atoms()[law_.pick_atom(uniform01(gen))];
    attach_children(x, atom.marks);
  }

  void attach_children(NodeId x, const std::vector<double>& marks) {
    if (nodes_.size() + marks.size() >= static_cast<std::size_t>(kEStar))
      throw Error(ErrorCode::StepBudgetExceeded, "tree node capacity exhausted");
    auto first = static_cast<NodeId>(nodes_.size());
    const std::uint64_t key = nodes_[x].key;
    const double vx = nodes_[x].potential;
    const std::uint32_t d = nodes_[x].depth + 1;
    for (std::size_t i = 0; i < marks.size(); ++i) {
      TreeNode c;
      c.parent = x;
      c.depth = d;
      c.mark = marks[i];
      c.potential = vx + marks[i];
      c.key = combine_keys(key, i + 1);
      nodes_.push_back(c);
    }
    TreeNode& n = nodes_[x];
    n.first_child = first;
    n.n_children = static_cast<std::uint32_t>(marks.size());
    n.grown = true;
    n.weight_offset = static_cast<std::uint32_t>(weights_.size());
    // Weights relative to e^{-V(x)}: parent 1, child i e^{-A_{x^i}}.
    double total = 1.0;
    for (double a : marks) total += std::exp(-a);
    double acc = 1.0 / total;
    weights_.push_back(acc);
    for (double a : marks) {
      acc += std::exp(-a) / total;
      weights_.push_back(acc);
    }
    weights_.back() = 1.0;
  }

  MarkLaw law_;
  bool lazy_ = false;
  std::vector<TreeNode> nodes_;
  std::vector<double> weights_;
  std::vector<double> h_cache_;
};

}  // namespace gwwalk
