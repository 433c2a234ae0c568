/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_TREE_PLAN_HPP
#define ODT_TREE_PLAN_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "odt/data/matrix.hpp"
#include "odt/error.hpp"
#include "odt/tree/topology.hpp"

namespace odt::tree {

enum class Role { branch, predict, pruned };

struct NodeRole {
  Role role = Role::pruned;
  int value = 0;  // feature index for branch, label for predict

  static NodeRole branch(int feature) { return {Role::branch, feature}; }
  static NodeRole predict(int label) { return {Role::predict, label}; }
  static NodeRole pruned() { return {Role::pruned, 0}; }

  bool operator==(const NodeRole&) const = default;
};

/// A learned tree over the complete topology of its depth. Every node carries
/// an explicit role so that positional extraction from a model is direct.
class TreePlan {
 public:
  explicit TreePlan(int depth) : topology_(depth), roles_(static_cast<std::size_t>(topology_.num_nodes()) + 1) {}

  [[nodiscard]] int depth() const { return topology_.depth(); }
  [[nodiscard]] const Topology& topology() const { return topology_; }

  [[nodiscard]] const NodeRole& at(NodeId n) const { return roles_.at(static_cast<std::size_t>(n)); }
  NodeRole& at(NodeId n) { return roles_.at(static_cast<std::size_t>(n)); }
  void set(NodeId n, NodeRole role) { at(n) = role; }

  [[nodiscard]] int branch_count() const
  {
    int count = 0;
    for (NodeId n = 1; n <= topology_.num_nodes(); ++n) count += at(n).role == Role::branch ? 1 : 0;
    return count;
  }

  [[nodiscard]] int max_feature() const
  {
    int out = -1;
    for (NodeId n = 1; n <= topology_.num_nodes(); ++n) {
      if (at(n).role == Role::branch) out = std::max(out, at(n).value);
    }
    return out;
  }

  [[nodiscard]] int max_label() const
  {
    int out = -1;
    for (NodeId n = 1; n <= topology_.num_nodes(); ++n) {
      if (at(n).role == Role::predict) out = std::max(out, at(n).value);
    }
    return out;
  }

  bool operator==(const TreePlan& other) const { return depth() == other.depth() && roles_ == other.roles_; }

  /// A constant predictor of the given label at the given depth.
  static TreePlan constant(int depth, int label)
  {
    TreePlan plan(depth);
    plan.set(1, NodeRole::predict(label));
    return plan;
  }

 private:
  Topology topology_;
  std::vector<NodeRole> roles_;  // index 0 unused
};

/// Lists violations of the plan invariants; empty means valid.
inline std::vector<Diagnostic> validate_plan(const TreePlan& plan)
{
  std::vector<Diagnostic> out;
  const auto& topo = plan.topology();
  // Walk from the root; `below_predict` marks subtrees under a prediction.
  struct Frame {
    NodeId node;
    bool below_predict;
  };
  std::vector<Frame> stack{{1, false}};
  while (!stack.empty()) {
    const auto [n, below] = stack.back();
    stack.pop_back();
    const auto& role = plan.at(n);
    const std::string who = "node " + std::to_string(n);
    if (below) {
      if (role.role != Role::pruned) out.push_back({who, "must be pruned below a prediction node"});
    } else if (role.role == Role::pruned) {
      out.push_back({who, "pruned node on a path without a prediction"});
    } else if (role.role == Role::branch && !topo.is_branch(n)) {
      out.push_back({who, "branch role on a leaf"});
    } else if ((role.role == Role::branch || role.role == Role::predict) && role.value < 0) {
      out.push_back({who, "negative feature or label index"});
    }
    if (topo.is_branch(n)) {
      const bool child_below = below || role.role != Role::branch;
      stack.push_back({Topology::right(n), child_below});
      stack.push_back({Topology::left(n), child_below});
    }
  }
  return out;
}

inline void require_valid(const TreePlan& plan)
{
  const auto diagnostics = validate_plan(plan);
  if (!diagnostics.empty()) {
    std::string msg = "malformed tree plan";
    for (const auto& d : diagnostics) msg += "; " + d.to_string();
    throw StructuralError(msg);
  }
}

/// Node sequence from the root to the prediction node reached by `x`.
/// Left when x[f] = 0, right when x[f] = 1.
inline std::vector<NodeId> route(const TreePlan& plan, std::span<const double> x)
{
  std::vector<NodeId> path;
  NodeId n = 1;
  for (int step = 0; step <= plan.depth(); ++step) {
    path.push_back(n);
    const auto& role = plan.at(n);
    if (role.role == Role::predict) return path;
    if (role.role == Role::pruned) throw StructuralError("route reached pruned node " + std::to_string(n));
    if (!plan.topology().is_branch(n)) throw StructuralError("branch role on leaf " + std::to_string(n));
    if (static_cast<std::size_t>(role.value) >= x.size()) {
      throw StructuralError("node " + std::to_string(n) + " tests feature " + std::to_string(role.value) +
                            " but the sample has " + std::to_string(x.size()) + " features");
    }
    n = x[static_cast<std::size_t>(role.value)] > 0.5 ? Topology::right(n) : Topology::left(n);
  }
  throw StructuralError("route did not reach a prediction node");
}

/// Label at the end of route(plan, x).
inline int predict_one(const TreePlan& plan, std::span<const double> x)
{
  return plan.at(route(plan, x).back()).value;
}

/// Predicted label for every row of X.
inline std::vector<int> predict(const TreePlan& plan, const data::FeatureMatrix& X)
{
  std::vector<int> out;
  out.reserve(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out.push_back(predict_one(plan, X.row(i)));
  return out;
}

}  // namespace odt::tree

#endif  // ODT_TREE_PLAN_HPP
