/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_OCT_FAIR_HPP
#define ODT_OCT_FAIR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "odt/data/dataset.hpp"
#include "odt/error.hpp"
#include "odt/oct/flow.hpp"

namespace odt::oct {

enum class FairnessType { statistical_parity, conditional_statistical_parity, equalized_odds };

inline std::string_view to_string(FairnessType t)
{
  switch (t) {
    case FairnessType::statistical_parity: return "SP";
    case FairnessType::conditional_statistical_parity: return "CSP";
    case FairnessType::equalized_odds: return "EqOdds";
  }
  return "SP";
}

inline FairnessType parse_fairness_type(std::string_view name)
{
  if (name == "SP") return FairnessType::statistical_parity;
  if (name == "CSP") return FairnessType::conditional_statistical_parity;
  if (name == "EqOdds" || name == "EO") return FairnessType::equalized_odds;
  throw SchemaError("unknown fairness type '" + std::string(name) + "' (expected SP, CSP or EqOdds)");
}

struct FairnessSpec {
  FairnessType type = FairnessType::statistical_parity;
  double bound = 1.0;  // largest allowed gap in positive-prediction rates
  int positive_class = 1;

  [[nodiscard]] std::vector<Diagnostic> validate(const data::BinarizedDataset& ds) const
  {
    std::vector<Diagnostic> out;
    if (!(bound >= 0.0 && bound <= 1.0)) out.push_back({"fairness bound", "must be in [0, 1]"});
    if (positive_class < 0 || positive_class >= ds.num_classes()) {
      out.push_back({"positive class", "label code " + std::to_string(positive_class) + " does not exist"});
    }
    const auto task =
        type == FairnessType::conditional_statistical_parity ? data::Task::fair_conditional : data::Task::fair;
    const auto more = data::validate(ds, task);
    out.insert(out.end(), more.begin(), more.end());
    return out;
  }
};

/// Pair of protected groups compared within one stratum.
struct FairnessComparison {
  std::vector<std::size_t> first;   // samples of the lower group code
  std::vector<std::size_t> second;  // samples of the higher group code
  std::string label;
};

/// Every (stratum, group pair) the fairness type compares, skipping strata in
/// which either group is absent.
inline std::vector<FairnessComparison> fairness_comparisons(const data::BinarizedDataset& ds, FairnessType type)
{
  if (ds.protected_group.empty()) throw ValidationError(std::vector<Diagnostic>{{"protected", "missing protected attribute"}});
  std::vector<int> stratum(ds.size(), 0);
  if (type == FairnessType::conditional_statistical_parity) {
    if (ds.legitimate.empty()) throw ValidationError(std::vector<Diagnostic>{{"legitimate", "missing legitimate factor"}});
    stratum = ds.legitimate;
  } else if (type == FairnessType::equalized_odds) {
    stratum = ds.y;
  }
  const int num_strata = stratum.empty() ? 0 : *std::max_element(stratum.begin(), stratum.end()) + 1;
  const int num_groups = *std::max_element(ds.protected_group.begin(), ds.protected_group.end()) + 1;

  std::vector<FairnessComparison> out;
  for (int s = 0; s < num_strata; ++s) {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_groups));
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (stratum[i] == s) members[static_cast<std::size_t>(ds.protected_group[i])].push_back(i);
    }
    for (int a = 0; a < num_groups; ++a) {
      for (int b = a + 1; b < num_groups; ++b) {
        const auto& ma = members[static_cast<std::size_t>(a)];
        const auto& mb = members[static_cast<std::size_t>(b)];
        if (ma.empty() || mb.empty()) continue;
        out.push_back({ma, mb, "s" + std::to_string(s) + "_g" + std::to_string(a) + "_g" + std::to_string(b)});
      }
    }
  }
  return out;
}

/// Adds the two-sided rate-gap rows to a flow model and returns how many rows
/// were added. A dataset with a single protected group adds none.
inline std::size_t add_fairness_constraints(mip::Model& model, const ModelHandles& h, const FairnessSpec& spec,
                                            const data::BinarizedDataset& ds,
                                            std::vector<std::string>* warnings = nullptr)
{
  const auto comparisons = fairness_comparisons(ds, spec.type);
  const auto groups = std::set<int>(ds.protected_group.begin(), ds.protected_group.end());
  if (groups.size() < 2 && warnings != nullptr) {
    warnings->emplace_back("only one protected group present; no fairness rows were added");
  }
  std::size_t rows = 0;
  const auto positive_terms = [&](const std::vector<std::size_t>& members, double scale, std::vector<mip::Term>& terms) {
    for (const auto i : members) {
      for (NodeId v = 1; v <= h.num_nodes(); ++v) terms.push_back({h.sink(i, v, spec.positive_class), scale});
    }
  };
  for (const auto& cmp : comparisons) {
    const double inv_a = 1.0 / static_cast<double>(cmp.first.size());
    const double inv_b = 1.0 / static_cast<double>(cmp.second.size());
    for (const double sign : {1.0, -1.0}) {
      std::vector<mip::Term> terms;
      positive_terms(cmp.first, sign * inv_a, terms);
      positive_terms(cmp.second, -sign * inv_b, terms);
      model.add_constraint(std::move(terms), mip::RowSense::less_equal, spec.bound,
                           std::string("fair_") + (sign > 0 ? "up_" : "dn_") + cmp.label);
      ++rows;
    }
  }
  return rows;
}

/// Largest gap in positive-prediction rates over the compared group pairs,
/// computed by routing. Zero when nothing is compared.
inline double disparity(const TreePlan& plan, const data::BinarizedDataset& ds, const FairnessSpec& spec)
{
  const auto predicted = tree::predict(plan, ds.X);
  const auto rate = [&](const std::vector<std::size_t>& members) {
    double hits = 0.0;
    for (const auto i : members) hits += predicted[i] == spec.positive_class ? 1.0 : 0.0;
    return hits / static_cast<double>(members.size());
  };
  double worst = 0.0;
  for (const auto& cmp : fairness_comparisons(ds, spec.type)) {
    worst = std::max(worst, std::abs(rate(cmp.first) - rate(cmp.second)));
  }
  return worst;
}

/// Optimal classification tree subject to the fairness rows.
inline FitResult fit_fair(const data::BinarizedDataset& ds, const OCTConfig& config, const FairnessSpec& spec,
                          const mip::SolverBackend& backend = mip::default_backend())
{
  if (auto diagnostics = spec.validate(ds); !diagnostics.empty()) throw ValidationError(std::move(diagnostics));
  mip::Model model;
  const auto h = build_flow_model(model, ds, config);
  std::vector<std::string> warnings;
  add_fairness_constraints(model, h, spec, ds, &warnings);

  auto solver = config.solver;
  if (solver.objective_step == 0.0) solver.objective_step = classification_step(ds, config);
  std::vector<double> seed;
  if (config.warm_start) {
    const bool weighted = config.mode == Objective::weighted;
    auto plan = greedy_plan(ds.X, ds.num_classes(), config.depth,
                            config.mode == Objective::worst_case ? 0.0 : config.lambda,
                            [&](std::size_t i, int k) { return ds.y[i] == k ? (weighted ? ds.weight(i) : 1.0) : 0.0; });
    if (disparity(plan, ds, spec) > spec.bound) {
      // A constant tree has zero disparity, so some seed always qualifies.
      int best = 0;
      double best_value = -1.0;
      for (int k = 0; k < ds.num_classes(); ++k) {
        const double value = evaluate_objective(TreePlan::constant(config.depth, k), ds, config);
        if (value > best_value) {
          best_value = value;
          best = k;
        }
      }
      plan = TreePlan::constant(config.depth, best);
    }
    seed = assignment_from_plan(model, h, plan, ds.X, ds.y);
  }
  auto fit = solve_and_extract(model, h, solver, seed, backend);
  fit.warnings.insert(fit.warnings.begin(), warnings.begin(), warnings.end());
  return fit;
}

}  // namespace odt::oct

#endif  // ODT_OCT_FAIR_HPP
