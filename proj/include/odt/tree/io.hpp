/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_TREE_IO_HPP
#define ODT_TREE_IO_HPP

#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "odt/error.hpp"
#include "odt/tree/plan.hpp"

namespace odt::tree {

namespace io_detail {

inline std::string dot_escape(const std::string& s)
{
  std::string out;
  for (const char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

inline std::string_view role_name(Role r)
{
  switch (r) {
    case Role::branch: return "branch";
    case Role::predict: return "predict";
    case Role::pruned: return "pruned";
  }
  return "pruned";
}

}  // namespace io_detail

inline std::vector<std::string> default_feature_names(std::size_t count)
{
  std::vector<std::string> out;
  for (std::size_t f = 0; f < count; ++f) out.push_back("x" + std::to_string(f));
  return out;
}

inline std::vector<std::string> default_label_names(std::size_t count)
{
  std::vector<std::string> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(std::to_string(k));
  return out;
}

/// DOT digraph of the plan. Branch nodes show the feature name, prediction
/// nodes the label name; the left edge is labeled "0" and the right edge "1".
/// Pruned nodes are omitted.
inline std::string to_dot(const TreePlan& plan, std::span<const std::string> feature_names,
                          std::span<const std::string> label_names)
{
  require_valid(plan);
  std::ostringstream out;
  out << "digraph tree {\n";
  out << "  node [shape=box, fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\"];\n";
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId n = 1; n <= plan.topology().num_nodes(); ++n) {
    const auto& role = plan.at(n);
    if (role.role == Role::pruned) continue;
    const auto idx = static_cast<std::size_t>(role.value);
    if (role.role == Role::branch) {
      if (idx >= feature_names.size()) throw NamingError("no name for feature " + std::to_string(role.value));
      out << "  n" << n << " [label=\"" << io_detail::dot_escape(feature_names[idx]) << "\"];\n";
      edges.emplace_back(n, Topology::left(n));
      edges.emplace_back(n, Topology::right(n));
    } else {
      if (idx >= label_names.size()) throw NamingError("no name for label " + std::to_string(role.value));
      out << "  n" << n << " [label=\"" << io_detail::dot_escape(label_names[idx])
          << "\", shape=ellipse];\n";
    }
  }
  for (const auto& [from, to] : edges) {
    out << "  n" << from << " -> n" << to << " [label=\"" << (Topology::is_right_child(to) ? 1 : 0) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

/// {"depth": d, "nodes": [{"id", "role", "feature"?, "label"?}, ...]}
inline nlohmann::ordered_json to_json(const TreePlan& plan)
{
  nlohmann::ordered_json j;
  j["depth"] = plan.depth();
  auto nodes = nlohmann::ordered_json::array();
  for (NodeId n = 1; n <= plan.topology().num_nodes(); ++n) {
    const auto& role = plan.at(n);
    nlohmann::ordered_json node;
    node["id"] = n;
    node["role"] = io_detail::role_name(role.role);
    if (role.role == Role::branch) node["feature"] = role.value;
    if (role.role == Role::predict) node["label"] = role.value;
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

/// Parses the tree schema; nodes not listed are pruned. Throws ParseError on
/// schema violations and StructuralError when the plan is invalid.
template <typename Json>
TreePlan plan_from_json(const Json& j)
{
  try {
    if (!j.is_object() || !j.contains("depth") || !j.contains("nodes")) {
      throw ParseError("tree JSON needs \"depth\" and \"nodes\"");
    }
    const int depth = j.at("depth").template get<int>();
    if (depth < 1 || depth > 20) throw ParseError("tree depth out of range");
    TreePlan plan(depth);
    for (const auto& node : j.at("nodes")) {
      const int id = node.at("id").template get<int>();
      if (!plan.topology().contains(id)) throw ParseError("node id " + std::to_string(id) + " outside the tree");
      const auto role = node.at("role").template get<std::string>();
      if (role == "branch") {
        plan.set(id, NodeRole::branch(node.at("feature").template get<int>()));
      } else if (role == "predict") {
        plan.set(id, NodeRole::predict(node.at("label").template get<int>()));
      } else if (role == "pruned") {
        plan.set(id, NodeRole::pruned());
      } else {
        throw ParseError("unknown node role '" + role + "'");
      }
    }
    require_valid(plan);
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
}

inline TreePlan plan_from_json_text(const std::string& text)
{
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
  return plan_from_json(j);
}

}  // namespace odt::tree

#endif  // ODT_TREE_IO_HPP
