/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_OCT_FLOW_HPP
#define ODT_OCT_FLOW_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "odt/data/dataset.hpp"
#include "odt/error.hpp"
#include "odt/mip/model.hpp"
#include "odt/mip/solver.hpp"
#include "odt/tree/plan.hpp"

namespace odt::oct {

using mip::VarId;
using tree::NodeId;
using tree::TreePlan;

enum class Objective { accuracy, weighted, worst_case };

struct OCTConfig {
  int depth = 1;
  double lambda = 0.0;  // weight on the branch count
  Objective mode = Objective::accuracy;
  mip::SolverConfig solver;
  bool warm_start = true;

  [[nodiscard]] std::vector<Diagnostic> validate() const
  {
    std::vector<Diagnostic> out;
    if (depth < 1 || depth > 20) out.push_back({"depth", "must be in [1, 20]"});
    if (!(lambda >= 0.0 && lambda < 1.0)) out.push_back({"lambda", "must be in [0, 1)"});
    if (!solver.valid()) out.push_back({"solver config", "tolerances must be positive"});
    return out;
  }
};

/// Variable ids of the flow model, indexed by node id (index 0 unused) and by
/// sample. Entries that do not exist on a node (branching on a leaf) are -1.
struct ModelHandles {
  int depth = 1;
  std::size_t num_samples = 0;
  int num_features = 0;
  int num_labels = 0;

  std::vector<std::vector<VarId>> b;  // [node][feature]
  std::vector<VarId> p;               // [node]
  std::vector<std::vector<VarId>> w;  // [node][label]
  std::vector<VarId> source;          // [sample]
  std::vector<std::vector<VarId>> left;   // [sample][node]
  std::vector<std::vector<VarId>> right;  // [sample][node]
  std::vector<VarId> sink_ids;            // flat, see sink()
  std::optional<VarId> gamma;

  std::size_t structural_rows = 0;
  std::size_t flow_rows = 0;
  std::size_t capacity_rows = 0;
  std::size_t source_rows = 0;
  std::size_t objective_rows = 0;

  [[nodiscard]] int num_nodes() const { return (1 << (depth + 1)) - 1; }

  [[nodiscard]] VarId sink(std::size_t i, NodeId n, int k) const
  {
    const auto N = static_cast<std::size_t>(num_nodes()) + 1;
    return sink_ids[(i * N + static_cast<std::size_t>(n)) * static_cast<std::size_t>(num_labels) +
                    static_cast<std::size_t>(k)];
  }
};

/// Adds the routing system shared by every pipeline: structural rows, flow
/// conservation, capacities and the unit source. The objective is untouched.
inline ModelHandles build_flow_core(mip::Model& model, const data::FeatureMatrix& X, int num_labels, int depth)
{
  using mip::RowSense;
  using mip::Term;
  const tree::Topology topo(depth);
  const std::size_t n = X.rows();
  const int F = static_cast<int>(X.cols());
  const int K = num_labels;
  const NodeId N = topo.num_nodes();
  const auto node_slots = static_cast<std::size_t>(N) + 1;

  ModelHandles h;
  h.depth = depth;
  h.num_samples = n;
  h.num_features = F;
  h.num_labels = K;
  h.b.assign(node_slots, {});
  h.p.assign(node_slots, -1);
  h.w.assign(node_slots, {});

  const auto ns = [](NodeId v) { return std::to_string(v); };
  for (const NodeId v : topo.branch_nodes()) {
    for (int f = 0; f < F; ++f) h.b[v].push_back(model.add_binary("b_" + ns(v) + "_" + std::to_string(f)));
  }
  for (NodeId v = 1; v <= N; ++v) h.p[v] = model.add_binary("p_" + ns(v));
  for (NodeId v = 1; v <= N; ++v) {
    for (int k = 0; k < K; ++k) h.w[v].push_back(model.add_binary("w_" + ns(v) + "_" + std::to_string(k)));
  }

  h.source.resize(n);
  h.left.assign(n, std::vector<VarId>(node_slots, -1));
  h.right.assign(n, std::vector<VarId>(node_slots, -1));
  h.sink_ids.assign(n * node_slots * static_cast<std::size_t>(K), -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto is = std::to_string(i);
    h.source[i] = model.add_variable(0.0, 1.0, mip::VarKind::continuous, "z_" + is + "_s_1");
    for (const NodeId v : topo.branch_nodes()) {
      h.left[i][v] = model.add_variable(0.0, 1.0, mip::VarKind::continuous, "z_" + is + "_" + ns(v) + "_" + ns(2 * v));
      h.right[i][v] =
          model.add_variable(0.0, 1.0, mip::VarKind::continuous, "z_" + is + "_" + ns(v) + "_" + ns(2 * v + 1));
    }
    for (NodeId v = 1; v <= N; ++v) {
      for (int k = 0; k < K; ++k) {
        h.sink_ids[(i * node_slots + static_cast<std::size_t>(v)) * static_cast<std::size_t>(K) +
                   static_cast<std::size_t>(k)] =
            model.add_variable(0.0, 1.0, mip::VarKind::continuous, "zs_" + is + "_" + ns(v) + "_" + std::to_string(k));
      }
    }
  }

  // Structural rows.
  for (NodeId v = 1; v <= N; ++v) {
    std::vector<Term> terms;
    if (topo.is_branch(v)) {
      for (const VarId id : h.b[v]) terms.push_back({id, 1.0});
    }
    terms.push_back({h.p[v], 1.0});
    for (const NodeId a : tree::Topology::ancestors(v)) terms.push_back({h.p[a], 1.0});
    model.add_constraint(std::move(terms), RowSense::equal, 1.0, "node_n" + ns(v));
  }
  for (NodeId v = 1; v <= N; ++v) {
    std::vector<Term> terms;
    for (const VarId id : h.w[v]) terms.push_back({id, 1.0});
    terms.push_back({h.p[v], -1.0});
    model.add_constraint(std::move(terms), RowSense::equal, 0.0, "pred_n" + ns(v));
  }
  h.structural_rows = static_cast<std::size_t>(topo.num_branch_nodes() + topo.num_leaves() + N);

  for (std::size_t i = 0; i < n; ++i) {
    const auto is = std::to_string(i);
    // Flow conservation.
    for (NodeId v = 1; v <= N; ++v) {
      std::vector<Term> terms;
      terms.push_back({v == 1 ? h.source[i] : (tree::Topology::is_right_child(v) ? h.right[i][v / 2] : h.left[i][v / 2]), 1.0});
      if (topo.is_branch(v)) {
        terms.push_back({h.left[i][v], -1.0});
        terms.push_back({h.right[i][v], -1.0});
      }
      for (int k = 0; k < K; ++k) terms.push_back({h.sink(i, v, k), -1.0});
      model.add_constraint(std::move(terms), RowSense::equal, 0.0, "flow_i" + is + "_n" + ns(v));
      ++h.flow_rows;
    }
    // Capacities.
    for (const NodeId v : topo.branch_nodes()) {
      std::vector<Term> lt{{h.left[i][v], 1.0}};
      std::vector<Term> rt{{h.right[i][v], 1.0}};
      for (int f = 0; f < F; ++f) {
        (X.bit(i, static_cast<std::size_t>(f)) ? rt : lt).push_back({h.b[v][static_cast<std::size_t>(f)], -1.0});
      }
      model.add_constraint(std::move(lt), RowSense::less_equal, 0.0, "capl_i" + is + "_n" + ns(v));
      model.add_constraint(std::move(rt), RowSense::less_equal, 0.0, "capr_i" + is + "_n" + ns(v));
      h.capacity_rows += 2;
    }
    for (NodeId v = 1; v <= N; ++v) {
      for (int k = 0; k < K; ++k) {
        model.add_constraint({{h.sink(i, v, k), 1.0}, {h.w[v][static_cast<std::size_t>(k)], -1.0}},
                             RowSense::less_equal, 0.0, "caps_i" + is + "_n" + ns(v) + "_k" + std::to_string(k));
        ++h.capacity_rows;
      }
    }
    model.add_constraint({{h.source[i], 1.0}}, RowSense::equal, 1.0, "src_i" + is);
    ++h.source_rows;
  }
  return h;
}

/// Adds -lambda per branch variable to the objective.
inline void add_sparsity_penalty(mip::Model& model, const ModelHandles& h, double lambda)
{
  if (lambda == 0.0) return;
  for (const auto& row : h.b) {
    for (const VarId id : row) model.add_objective_coef(id, -lambda);
  }
}

/// Builds the classification model for the configured objective mode.
inline ModelHandles build_flow_model(mip::Model& model, const data::BinarizedDataset& ds, const OCTConfig& config)
{
  auto diagnostics = data::validate(ds, data::Task::classification);
  const auto config_diag = config.validate();
  diagnostics.insert(diagnostics.end(), config_diag.begin(), config_diag.end());
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));

  const int K = ds.num_classes();
  auto h = build_flow_core(model, ds.X, K, config.depth);
  model.set_sense(mip::ObjSense::maximize);
  const double keep = 1.0 - config.lambda;
  const NodeId N = h.num_nodes();

  if (config.mode == Objective::worst_case) {
    h.gamma = model.add_variable(-mip::kInf, mip::kInf, mip::VarKind::continuous, "gamma");
    std::vector<double> class_size(static_cast<std::size_t>(K), 0.0);
    for (const int y : ds.y) class_size[static_cast<std::size_t>(y)] += 1.0;
    for (int k = 0; k < K; ++k) {
      std::vector<mip::Term> terms{{*h.gamma, 1.0}};
      const double inv = 1.0 / class_size[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.y[i] != k) continue;
        for (NodeId v = 1; v <= N; ++v) terms.push_back({h.sink(i, v, k), -inv});
      }
      model.add_constraint(std::move(terms), mip::RowSense::less_equal, 0.0, "worst_k" + std::to_string(k));
      ++h.objective_rows;
    }
    model.set_objective_coef(*h.gamma, keep);
  } else {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double u = config.mode == Objective::weighted ? ds.weight(i) : 1.0;
      if (u == 0.0) continue;
      for (NodeId v = 1; v <= N; ++v) model.add_objective_coef(h.sink(i, v, ds.y[i]), keep * u);
    }
  }
  add_sparsity_penalty(model, h, config.lambda);
  return h;
}

/// Maps an incumbent to a plan. Every b, p and w value must be integral
/// within `int_tol`.
inline TreePlan extract_plan(const ModelHandles& h, const std::vector<double>& values, double int_tol = 1e-6)
{
  const auto read = [&](VarId id, const std::string& what) {
    const double v = values.at(static_cast<std::size_t>(id));
    const double r = std::round(v);
    if (std::abs(v - r) > int_tol || (r != 0.0 && r != 1.0)) {
      throw ExtractionError(what + " has non-integral value " + std::to_string(v));
    }
    return r == 1.0;
  };
  TreePlan plan(h.depth);
  for (NodeId v = 1; v <= h.num_nodes(); ++v) {
    int feature = -1;
    for (std::size_t f = 0; f < h.b[v].size(); ++f) {
      if (read(h.b[v][f], "b[" + std::to_string(v) + "," + std::to_string(f) + "]")) {
        if (feature >= 0) throw ExtractionError("node " + std::to_string(v) + " branches on several features");
        feature = static_cast<int>(f);
      }
    }
    int label = -1;
    for (std::size_t k = 0; k < h.w[v].size(); ++k) {
      if (read(h.w[v][k], "w[" + std::to_string(v) + "," + std::to_string(k) + "]")) {
        if (label >= 0) throw ExtractionError("node " + std::to_string(v) + " predicts several labels");
        label = static_cast<int>(k);
      }
    }
    if (feature >= 0 && label >= 0) throw ExtractionError("node " + std::to_string(v) + " both branches and predicts");
    if (feature >= 0) plan.set(v, tree::NodeRole::branch(feature));
    if (label >= 0) plan.set(v, tree::NodeRole::predict(label));
  }
  tree::require_valid(plan);
  return plan;
}

/// Full model assignment that realizes `plan`: structural variables plus
/// the unit flow of every sample along its route. Gamma, when present, is
/// set to the smallest per-class recall.
inline std::vector<double> assignment_from_plan(const mip::Model& model, const ModelHandles& h, const TreePlan& plan,
                                                const data::FeatureMatrix& X, std::span<const int> labels = {})
{
  std::vector<double> values(model.num_variables(), 0.0);
  for (NodeId v = 1; v <= h.num_nodes(); ++v) {
    const auto& role = plan.at(v);
    if (role.role == tree::Role::branch) values[static_cast<std::size_t>(h.b[v].at(static_cast<std::size_t>(role.value)))] = 1.0;
    if (role.role == tree::Role::predict) {
      values[static_cast<std::size_t>(h.p[v])] = 1.0;
      values[static_cast<std::size_t>(h.w[v].at(static_cast<std::size_t>(role.value)))] = 1.0;
    }
  }
  std::vector<double> hits(static_cast<std::size_t>(h.num_labels), 0.0);
  std::vector<double> sizes(static_cast<std::size_t>(h.num_labels), 0.0);
  for (std::size_t i = 0; i < h.num_samples; ++i) {
    const auto path = tree::route(plan, X.row(i));
    values[static_cast<std::size_t>(h.source[i])] = 1.0;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
      const NodeId from = path[s];
      const NodeId to = path[s + 1];
      values[static_cast<std::size_t>(tree::Topology::is_right_child(to) ? h.right[i][from] : h.left[i][from])] = 1.0;
    }
    const int k = plan.at(path.back()).value;
    values[static_cast<std::size_t>(h.sink(i, path.back(), k))] = 1.0;
    if (!labels.empty()) {
      sizes[static_cast<std::size_t>(labels[i])] += 1.0;
      if (labels[i] == k) hits[static_cast<std::size_t>(k)] += 1.0;
    }
  }
  if (h.gamma) {
    double gamma = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (sizes[k] > 0.0) gamma = std::min(gamma, hits[k] / sizes[k]);
    }
    values[static_cast<std::size_t>(*h.gamma)] = std::isfinite(gamma) ? gamma : 0.0;
  }
  return values;
}

/// Score of assigning label k to sample i; the greedy tree maximizes the sum.
using SampleScore = std::function<double(std::size_t, int)>;

/// One-pass greedy tree: at each node keep the best single-feature split if
/// it improves the penalized score, otherwise predict the best label.
inline TreePlan greedy_plan(const data::FeatureMatrix& X, int num_labels, int depth, double lambda,
                            const SampleScore& score)
{
  TreePlan plan(depth);
  const tree::Topology topo(depth);
  const int F = static_cast<int>(X.cols());

  const auto best_label = [&](const std::vector<std::size_t>& members) {
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_labels; ++k) {
      double total = 0.0;
      for (const auto i : members) total += score(i, k);
      if (total > best_value + 1e-12) {
        best_value = total;
        best = k;
      }
    }
    return std::pair{best, best_value};
  };

  struct Frame {
    NodeId node;
    std::vector<std::size_t> members;
  };
  std::vector<std::size_t> all(X.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<Frame> stack;
  stack.push_back({1, std::move(all)});
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    const auto [label, leaf_value] = best_label(frame.members);
    int best_feature = -1;
    double best_gain = 0.0;
    if (topo.is_branch(frame.node)) {
      for (int f = 0; f < F; ++f) {
        std::vector<std::size_t> lo;
        std::vector<std::size_t> hi;
        for (const auto i : frame.members) (X.bit(i, static_cast<std::size_t>(f)) ? hi : lo).push_back(i);
        const double split_value = best_label(lo).second + best_label(hi).second;
        const double gain = (1.0 - lambda) * (split_value - leaf_value) - lambda;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = f;
        }
      }
    }
    if (best_feature < 0) {
      plan.set(frame.node, tree::NodeRole::predict(label));
      continue;
    }
    plan.set(frame.node, tree::NodeRole::branch(best_feature));
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;
    for (const auto i : frame.members) (X.bit(i, static_cast<std::size_t>(best_feature)) ? hi : lo).push_back(i);
    stack.push_back({tree::Topology::right(frame.node), std::move(hi)});
    stack.push_back({tree::Topology::left(frame.node), std::move(lo)});
  }
  return plan;
}

/// Smallest q <= max_den with lambda * q integral, if any.
inline std::optional<long long> lambda_denominator(double lambda, long long max_den = 10000)
{
  for (long long q = 1; q <= max_den; ++q) {
    const double scaled = lambda * static_cast<double>(q);
    if (std::abs(scaled - std::round(scaled)) <= 1e-9 * std::max(1.0, scaled)) return q;
  }
  return std::nullopt;
}

/// Spacing of attainable objective values when the per-unit scores are
/// integral multiples of 1/`score_den`; 0 when no safe spacing is known.
inline double lattice_step(double lambda, long long score_den)
{
  const auto q = lambda_denominator(lambda);
  if (!q || score_den <= 0) return 0.0;
  const long long den = *q * score_den;
  if (den > 1000000) return 0.0;
  return 1.0 / static_cast<double>(den);
}

inline bool all_integral(std::span<const double> values)
{
  return std::all_of(values.begin(), values.end(), [](double v) { return v == std::round(v); });
}

/// Penalized objective of a plan computed by routing alone.
inline double evaluate_objective(const TreePlan& plan, const data::BinarizedDataset& ds, const OCTConfig& config)
{
  const auto predicted = tree::predict(plan, ds.X);
  const double penalty = config.lambda * plan.branch_count();
  if (config.mode == Objective::worst_case) {
    const int K = ds.num_classes();
    std::vector<double> hits(static_cast<std::size_t>(K), 0.0);
    std::vector<double> sizes(static_cast<std::size_t>(K), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      sizes[static_cast<std::size_t>(ds.y[i])] += 1.0;
      if (predicted[i] == ds.y[i]) hits[static_cast<std::size_t>(ds.y[i])] += 1.0;
    }
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      if (sizes[static_cast<std::size_t>(k)] > 0.0) worst = std::min(worst, hits[static_cast<std::size_t>(k)] / sizes[static_cast<std::size_t>(k)]);
    }
    return (1.0 - config.lambda) * worst - penalty;
  }
  double correct = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (predicted[i] == ds.y[i]) correct += config.mode == Objective::weighted ? ds.weight(i) : 1.0;
  }
  return (1.0 - config.lambda) * correct - penalty;
}

struct FitResult {
  std::optional<TreePlan> plan;
  mip::SolveResult solve;
  std::vector<std::string> warnings;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t rounds = 1;  // master solves (robust loop)
  bool capped = false;

  [[nodiscard]] bool optimal() const { return solve.status == mip::SolveStatus::optimal && !capped; }
};

/// Solves a built model and extracts the plan from the incumbent.
inline FitResult solve_and_extract(const mip::Model& model, const ModelHandles& h, const mip::SolverConfig& solver,
                                   std::span<const double> warm_start = {},
                                   const mip::SolverBackend& backend = mip::default_backend())
{
  FitResult fit;
  fit.solve = backend.solve_mip(model, solver, warm_start);
  if (fit.solve.has_solution()) {
    fit.plan = extract_plan(h, fit.solve.values, solver.int_tol);
    fit.objective = fit.solve.objective;
  }
  switch (fit.solve.status) {
    case mip::SolveStatus::time_limit:
      fit.warnings.emplace_back(fit.plan ? "time limit reached; plan is the best incumbent"
                                         : "time limit reached before any feasible plan was found");
      break;
    case mip::SolveStatus::gap_limit:
      fit.warnings.emplace_back("node limit reached; plan is the best incumbent");
      break;
    case mip::SolveStatus::infeasible:
      fit.warnings.emplace_back("model is infeasible");
      break;
    default:
      break;
  }
  return fit;
}

/// Objective spacing for classification objectives on this dataset.
inline double classification_step(const data::BinarizedDataset& ds, const OCTConfig& config)
{
  if (config.mode == Objective::weighted && !all_integral(ds.weights)) return 0.0;
  long long den = 1;
  if (config.mode == Objective::worst_case) {
    std::vector<long long> sizes(static_cast<std::size_t>(ds.num_classes()), 0);
    for (const int y : ds.y) ++sizes[static_cast<std::size_t>(y)];
    for (const auto s : sizes) {
      den = std::lcm(den, std::max<long long>(s, 1));
      if (den > 1000000) return 0.0;
    }
  }
  return lattice_step(config.lambda, den);
}

/// Optimal classification tree for the configured objective.
inline FitResult fit_classifier(const data::BinarizedDataset& ds, const OCTConfig& config,
                                const mip::SolverBackend& backend = mip::default_backend())
{
  mip::Model model;
  const auto h = build_flow_model(model, ds, config);
  auto solver = config.solver;
  if (solver.objective_step == 0.0) solver.objective_step = classification_step(ds, config);

  std::vector<double> seed;
  if (config.warm_start) {
    const bool worst = config.mode == Objective::worst_case;
    const bool weighted = config.mode == Objective::weighted;
    const auto plan = greedy_plan(ds.X, ds.num_classes(), config.depth, worst ? 0.0 : config.lambda,
                                  [&](std::size_t i, int k) { return ds.y[i] == k ? (weighted ? ds.weight(i) : 1.0) : 0.0; });
    seed = assignment_from_plan(model, h, plan, ds.X, ds.y);
  }
  return solve_and_extract(model, h, solver, seed, backend);
}

}  // namespace odt::oct

#endif  // ODT_OCT_FLOW_HPP
