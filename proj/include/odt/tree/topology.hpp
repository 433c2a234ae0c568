/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_TREE_TOPOLOGY_HPP
#define ODT_TREE_TOPOLOGY_HPP

#include <stdexcept>
#include <vector>

namespace odt::tree {

using NodeId = int;

/// Complete binary tree of a given depth with heap (1-based) node indexing.
/// Branch nodes are 1 .. 2^d - 1, leaves 2^d .. 2^(d+1) - 1.
class Topology {
 public:
  explicit Topology(int depth) : depth_(depth)
  {
    if (depth < 1 || depth > 20) throw std::invalid_argument("tree depth must be in [1, 20]");
  }

  [[nodiscard]] int depth() const { return depth_; }
  [[nodiscard]] int num_nodes() const { return (1 << (depth_ + 1)) - 1; }
  [[nodiscard]] int num_branch_nodes() const { return (1 << depth_) - 1; }
  [[nodiscard]] int num_leaves() const { return 1 << depth_; }

  [[nodiscard]] bool is_branch(NodeId n) const { return n >= 1 && n < (1 << depth_); }
  [[nodiscard]] bool is_leaf(NodeId n) const { return n >= (1 << depth_) && n <= num_nodes(); }
  [[nodiscard]] bool contains(NodeId n) const { return n >= 1 && n <= num_nodes(); }

  static NodeId parent(NodeId n) { return n / 2; }
  static NodeId left(NodeId n) { return 2 * n; }
  static NodeId right(NodeId n) { return 2 * n + 1; }
  static bool is_right_child(NodeId n) { return n > 1 && (n % 2) == 1; }

  /// Level of a node (root = 0).
  static int level(NodeId n)
  {
    int l = 0;
    while (n > 1) {
      n /= 2;
      ++l;
    }
    return l;
  }

  [[nodiscard]] std::vector<NodeId> branch_nodes() const { return range(1, num_branch_nodes()); }
  [[nodiscard]] std::vector<NodeId> leaf_nodes() const { return range(num_leaves(), num_nodes()); }
  [[nodiscard]] std::vector<NodeId> nodes() const { return range(1, num_nodes()); }

  /// Ancestors of n ordered from the parent up to the root; empty for the root.
  static std::vector<NodeId> ancestors(NodeId n)
  {
    std::vector<NodeId> out;
    for (NodeId a = n / 2; a >= 1; a /= 2) out.push_back(a);
    return out;
  }

 private:
  static std::vector<NodeId> range(NodeId first, NodeId last)
  {
    std::vector<NodeId> out;
    for (NodeId n = first; n <= last; ++n) out.push_back(n);
    return out;
  }

  int depth_;
};

}  // namespace odt::tree

#endif  // ODT_TREE_TOPOLOGY_HPP
