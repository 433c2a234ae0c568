/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_POLICY_PRESCRIPTIVE_HPP
#define ODT_POLICY_PRESCRIPTIVE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odt/data/dataset.hpp"
#include "odt/error.hpp"
#include "odt/oct/flow.hpp"

namespace odt::policy {

using oct::FitResult;
using tree::NodeId;
using tree::TreePlan;

struct ObservationalData {
  data::FeatureMatrix X;
  std::vector<int> treatment;
  std::vector<double> outcome;
  int num_treatments = 0;

  static ObservationalData from(const data::BinarizedDataset& ds)
  {
    data::require_valid(ds, data::Task::policy);
    return {ds.X, ds.treatment, ds.outcome, ds.num_treatments()};
  }

  [[nodiscard]] std::size_t size() const { return X.rows(); }

  [[nodiscard]] std::vector<Diagnostic> validate() const
  {
    std::vector<Diagnostic> out;
    if (treatment.size() != size() || outcome.size() != size()) {
      out.push_back({"observations", "treatment and outcome columns must have one entry per sample"});
      return out;
    }
    std::vector<int> arm_size(static_cast<std::size_t>(std::max(num_treatments, 0)), 0);
    for (std::size_t i = 0; i < size(); ++i) {
      if (treatment[i] < 0 || treatment[i] >= num_treatments) {
        out.push_back({"treatment[" + std::to_string(i) + "]", "code out of range"});
        continue;
      }
      ++arm_size[static_cast<std::size_t>(treatment[i])];
      if (!std::isfinite(outcome[i])) out.push_back({"outcome[" + std::to_string(i) + "]", "non-finite outcome"});
    }
    for (int k = 0; k < num_treatments; ++k) {
      if (arm_size[static_cast<std::size_t>(k)] == 0) out.push_back({"treatment", "arm " + std::to_string(k) + " is empty"});
    }
    return out;
  }
};

/// Stratum-level propensities and outcome means. A stratum is one distinct
/// binary feature vector.
struct NuisanceEstimates {
  double alpha = 1.0;
  std::vector<int> stratum_of;                  // per sample
  std::vector<std::vector<double>> propensity;  // [stratum][treatment]
  std::vector<std::vector<double>> mean;        // [stratum][treatment]

  [[nodiscard]] std::size_t num_strata() const { return propensity.size(); }
};

enum class ScoreMethod { ipw, direct, doubly_robust, supplied };

inline std::string_view to_string(ScoreMethod m)
{
  switch (m) {
    case ScoreMethod::ipw: return "IPW";
    case ScoreMethod::direct: return "DM";
    case ScoreMethod::doubly_robust: return "DR";
    case ScoreMethod::supplied: return "supplied";
  }
  return "supplied";
}

inline ScoreMethod parse_score_method(std::string_view name)
{
  if (name == "IPW") return ScoreMethod::ipw;
  if (name == "DM") return ScoreMethod::direct;
  if (name == "DR") return ScoreMethod::doubly_robust;
  throw SchemaError("unknown scoring method '" + std::string(name) + "' (expected IPW, DM or DR)");
}

/// v[i][k]: estimated outcome of sample i under treatment k.
struct ScoreMatrix {
  std::vector<std::vector<double>> v;
  ScoreMethod method = ScoreMethod::supplied;

  [[nodiscard]] std::size_t size() const { return v.size(); }
  [[nodiscard]] int num_treatments() const { return v.empty() ? 0 : static_cast<int>(v.front().size()); }

  [[nodiscard]] std::vector<Diagnostic> validate(std::size_t n) const
  {
    std::vector<Diagnostic> out;
    if (v.size() != n) out.push_back({"scores", "has " + std::to_string(v.size()) + " rows, expected " + std::to_string(n)});
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].size() != v.front().size()) out.push_back({"scores row " + std::to_string(i), "ragged row"});
      for (const double x : v[i]) {
        if (!std::isfinite(x)) out.push_back({"scores row " + std::to_string(i), "non-finite score"});
      }
    }
    if (num_treatments() < 1) out.push_back({"scores", "no treatment columns"});
    return out;
  }
};

/// Laplace-smoothed propensities and cell means with arm-level fallback.
inline NuisanceEstimates estimate_nuisances(const ObservationalData& data, double alpha = 1.0)
{
  if (auto diagnostics = data.validate(); !diagnostics.empty()) throw ValidationError(std::move(diagnostics));
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError(std::vector<Diagnostic>{{"alpha", "must be finite and nonnegative"}});
  const std::size_t n = data.size();
  const auto K = static_cast<std::size_t>(data.num_treatments);

  NuisanceEstimates est;
  est.alpha = alpha;
  std::map<std::vector<double>, int> index;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.X.row(i);
    const auto [it, inserted] = index.emplace(std::vector<double>(row.begin(), row.end()), static_cast<int>(index.size()));
    est.stratum_of.push_back(it->second);
  }
  const std::size_t S = index.size();
  std::vector<std::vector<double>> count(S, std::vector<double>(K, 0.0));
  std::vector<std::vector<double>> sum(S, std::vector<double>(K, 0.0));
  std::vector<double> stratum_size(S, 0.0);
  std::vector<double> arm_count(K, 0.0);
  std::vector<double> arm_sum(K, 0.0);
  double global_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(est.stratum_of[i]);
    const auto k = static_cast<std::size_t>(data.treatment[i]);
    count[s][k] += 1.0;
    sum[s][k] += data.outcome[i];
    stratum_size[s] += 1.0;
    arm_count[k] += 1.0;
    arm_sum[k] += data.outcome[i];
    global_sum += data.outcome[i];
  }

  est.propensity.assign(S, std::vector<double>(K, 0.0));
  est.mean.assign(S, std::vector<double>(K, 0.0));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t k = 0; k < K; ++k) {
      if (alpha == 0.0 && count[s][k] == 0.0) {
        throw EstimationError("stratum " + std::to_string(s) + " has no samples under treatment " + std::to_string(k) +
                              "; a positive smoothing alpha is required");
      }
      est.propensity[s][k] = (count[s][k] + alpha) / (stratum_size[s] + alpha * static_cast<double>(K));
      if (count[s][k] > 0.0) {
        est.mean[s][k] = sum[s][k] / count[s][k];
      } else if (arm_count[k] > 0.0) {
        est.mean[s][k] = arm_sum[k] / arm_count[k];
      } else {
        est.mean[s][k] = global_sum / static_cast<double>(n);
      }
    }
  }
  return est;
}

inline ScoreMatrix compute_scores(const ObservationalData& data, const NuisanceEstimates& est, ScoreMethod method)
{
  const auto K = static_cast<std::size_t>(data.num_treatments);
  ScoreMatrix scores;
  scores.method = method;
  scores.v.assign(data.size(), std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = static_cast<std::size_t>(est.stratum_of.at(i));
    for (std::size_t k = 0; k < K; ++k) {
      const bool treated = data.treatment[i] == static_cast<int>(k);
      const double e = est.propensity[s][k];
      const double mu = est.mean[s][k];
      switch (method) {
        case ScoreMethod::ipw: scores.v[i][k] = treated ? data.outcome[i] / e : 0.0; break;
        case ScoreMethod::direct: scores.v[i][k] = mu; break;
        case ScoreMethod::doubly_robust: scores.v[i][k] = mu + (treated ? (data.outcome[i] - mu) / e : 0.0); break;
        case ScoreMethod::supplied: throw SchemaError("supplied scores are not computed");
      }
    }
  }
  return scores;
}

struct PolicyConfig {
  int depth = 1;
  double lambda = 0.0;
  std::vector<std::optional<long long>> budgets;  // per treatment; empty or nullopt means unlimited
  mip::SolverConfig solver;
  bool warm_start = true;

  [[nodiscard]] std::optional<long long> budget(int k) const
  {
    if (static_cast<std::size_t>(k) >= budgets.size()) return std::nullopt;
    return budgets[static_cast<std::size_t>(k)];
  }
};

/// Treatment chosen for every sample by routing.
inline std::vector<long long> assignment_counts(const TreePlan& plan, const data::FeatureMatrix& X, int num_treatments)
{
  std::vector<long long> counts(static_cast<std::size_t>(num_treatments), 0);
  for (const int k : tree::predict(plan, X)) ++counts.at(static_cast<std::size_t>(k));
  return counts;
}

/// Sum over samples of the score of the assigned treatment.
inline double policy_value(const TreePlan& plan, const data::FeatureMatrix& X, const ScoreMatrix& scores)
{
  double total = 0.0;
  const auto assigned = tree::predict(plan, X);
  for (std::size_t i = 0; i < assigned.size(); ++i) total += scores.v.at(i).at(static_cast<std::size_t>(assigned[i]));
  return total;
}

inline bool within_budgets(const TreePlan& plan, const data::FeatureMatrix& X, int num_treatments,
                           const PolicyConfig& config)
{
  const auto counts = assignment_counts(plan, X, num_treatments);
  for (int k = 0; k < num_treatments; ++k) {
    const auto cap = config.budget(k);
    if (cap && counts[static_cast<std::size_t>(k)] > *cap) return false;
  }
  return true;
}

/// Tree assigning one treatment per sample that maximizes the summed scores
/// less lambda per branch node, subject to the treatment budgets.
inline FitResult fit_policy(const data::FeatureMatrix& X, const ScoreMatrix& scores, const PolicyConfig& config,
                            const mip::SolverBackend& backend = mip::default_backend())
{
  const std::size_t n = X.rows();
  auto diagnostics = scores.validate(n);
  if (config.depth < 1 || config.depth > 20) diagnostics.push_back({"depth", "must be in [1, 20]"});
  if (!(config.lambda >= 0.0 && config.lambda < 1.0)) diagnostics.push_back({"lambda", "must be in [0, 1)"});
  for (std::size_t k = 0; k < config.budgets.size(); ++k) {
    if (config.budgets[k] && *config.budgets[k] < 0) diagnostics.push_back({"budget " + std::to_string(k), "must be nonnegative"});
  }
  if (n == 0) diagnostics.push_back({"dataset", "no samples"});
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));
  const int K = scores.num_treatments();
  if (config.budgets.size() > static_cast<std::size_t>(K)) {
    throw ValidationError(std::vector<Diagnostic>{{"budgets", "more budgets than treatments"}});
  }

  FitResult fit;
  // Capacity check: every sample needs some treatment.
  long long capacity = 0;
  bool unlimited = false;
  for (int k = 0; k < K; ++k) {
    const auto cap = config.budget(k);
    if (!cap) unlimited = true;
    else capacity += *cap;
  }
  if (!unlimited && capacity < static_cast<long long>(n)) {
    fit.solve.status = mip::SolveStatus::infeasible;
    fit.warnings.emplace_back("treatment budgets total " + std::to_string(capacity) + " but there are " +
                              std::to_string(n) + " samples");
    return fit;
  }

  mip::Model model;
  model.set_sense(mip::ObjSense::maximize);
  const auto h = oct::build_flow_core(model, X, K, config.depth);
  const double keep = 1.0 - config.lambda;
  for (std::size_t i = 0; i < n; ++i) {
    for (NodeId v = 1; v <= h.num_nodes(); ++v) {
      for (int k = 0; k < K; ++k) {
        const double score = scores.v[i][static_cast<std::size_t>(k)];
        if (score != 0.0) model.add_objective_coef(h.sink(i, v, k), keep * score);
      }
    }
  }
  oct::add_sparsity_penalty(model, h, config.lambda);
  for (int k = 0; k < K; ++k) {
    const auto cap = config.budget(k);
    if (!cap) continue;
    std::vector<mip::Term> terms;
    for (std::size_t i = 0; i < n; ++i) {
      for (NodeId v = 1; v <= h.num_nodes(); ++v) terms.push_back({h.sink(i, v, k), 1.0});
    }
    model.add_constraint(std::move(terms), mip::RowSense::less_equal, static_cast<double>(*cap),
                         "budget_k" + std::to_string(k));
  }

  auto solver = config.solver;
  if (solver.objective_step == 0.0) {
    bool integral = true;
    for (const auto& row : scores.v) integral = integral && oct::all_integral(row);
    if (integral) solver.objective_step = oct::lattice_step(config.lambda, 1);
  }

  std::vector<double> seed;
  if (config.warm_start) {
    const auto plan = oct::greedy_plan(X, K, config.depth, config.lambda,
                                       [&](std::size_t i, int k) { return scores.v[i][static_cast<std::size_t>(k)]; });
    if (within_budgets(plan, X, K, config)) seed = oct::assignment_from_plan(model, h, plan, X);
  }
  return oct::solve_and_extract(model, h, solver, seed, backend);
}

}  // namespace odt::policy

#endif  // ODT_POLICY_PRESCRIPTIVE_HPP
