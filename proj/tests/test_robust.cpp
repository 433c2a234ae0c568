/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch_amalgamated.hpp>

#include <random>

#include "odt/oct/robust.hpp"
#include "odt/oracle/enumerate.hpp"
#include "support/oracles.hpp"

using namespace odt;
using namespace odt::oct;
using tree::NodeRole;
using tree::TreePlan;

namespace {

OCTConfig config(int depth, double lambda = 0.0)
{
  OCTConfig c;
  c.depth = depth;
  c.lambda = lambda;
  return c;
}

// Independent adversary: tries every flip subset of the features.
bool robustly_correct(const TreePlan& plan, std::span<const double> x, int y, std::span<const double> cost, double eps)
{
  const std::size_t F = x.size();
  std::vector<double> moved(x.begin(), x.end());
  for (std::uint32_t mask = 0; mask < (1U << F); ++mask) {
    double spent = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      const bool flip = (mask >> f) & 1U;
      moved[f] = flip ? 1.0 - x[f] : x[f];
      if (flip) spent += cost[f];
    }
    if (spent <= eps && testing::walk(plan, moved) != y) return false;
  }
  return true;
}

double brute_robust(const TreePlan& plan, const data::BinarizedDataset& ds, const RobustSpec& spec, double lambda)
{
  double correct = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (robustly_correct(plan, ds.X.row(i), ds.y[i], spec.costs[i], spec.epsilon)) correct += ds.weight(i);
  }
  return (1.0 - lambda) * correct - lambda * testing::count_branches(plan);
}

double robust_oracle(const data::BinarizedDataset& ds, const RobustSpec& spec, int depth, double lambda)
{
  return oracle::best_plan(depth, static_cast<int>(ds.num_features()), ds.num_classes(), [&](const TreePlan& p) {
           return (1.0 - lambda) * worst_case_correct(p, ds, spec) - lambda * p.branch_count();
         }).value;
}

RobustSpec random_spec(std::mt19937& rng, const data::BinarizedDataset& ds, double eps)
{
  RobustSpec spec;
  spec.epsilon = eps;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> row;
    for (std::size_t f = 0; f < ds.num_features(); ++f) row.push_back(1.0 + static_cast<double>(rng() % 3));
    spec.costs.push_back(std::move(row));
  }
  return spec;
}

}  // namespace

TEST_CASE("adversary examples", "[robust]")
{
  TreePlan stump(1);
  stump.set(1, NodeRole::branch(0));
  stump.set(2, NodeRole::predict(0));
  stump.set(3, NodeRole::predict(1));
  const std::vector<double> x{0.0};
  const std::vector<double> c{3.0};

  const auto already = min_misclassification_cost(stump, x, 1, c);
  CHECK(already.cost == 0.0);
  REQUIRE(already.witness);
  CHECK(already.witness->terminal == 2);

  const auto none = min_misclassification_cost(TreePlan::constant(1, 0), x, 0, c);
  CHECK(std::isinf(none.cost));
  CHECK_FALSE(none.witness);

  const auto flip = min_misclassification_cost(stump, x, 0, c);
  CHECK(flip.cost == 3.0);
  REQUIRE(flip.witness);
  CHECK(flip.witness->terminal == 3);
  CHECK(flip.witness->label == 1);
  CHECK(flip.witness->path == std::vector<std::pair<tree::NodeId, int>>{{1, 0}});
}

TEST_CASE("a path testing one feature both ways is unreachable", "[robust]")
{
  TreePlan p(2);
  p.set(1, NodeRole::branch(0));
  p.set(2, NodeRole::branch(0));
  p.set(3, NodeRole::predict(0));
  p.set(4, NodeRole::predict(0));
  p.set(5, NodeRole::predict(1));  // requires f0 = 0 then f0 = 1
  const std::vector<double> x{0.0};
  const std::vector<double> c{0.0};
  CHECK(std::isinf(min_misclassification_cost(p, x, 0, c).cost));
}

TEST_CASE("worst_case_correct examples", "[robust]")
{
  std::mt19937 rng(50);
  const auto ds = testing::random_dataset(rng, 10, 3, 2);
  const auto zero = RobustSpec::uniform(ds.size(), 3, 1.0, 0.0);
  const auto plan = greedy_plan(ds.X, 2, 2, 0.0, [&](std::size_t i, int k) { return ds.y[i] == k ? 1.0 : 0.0; });
  CHECK(worst_case_correct(plan, ds, zero) == testing::penalized_accuracy(plan, ds, 0.0));
  for (const double eps : {0.0, 1.0, 5.0}) {
    const auto spec = RobustSpec::uniform(ds.size(), 3, 1.0, eps);
    for (int k = 0; k < 2; ++k) {
      CHECK(worst_case_correct(TreePlan::constant(2, k), ds, spec) == static_cast<double>(std::count(ds.y.begin(), ds.y.end(), k)));
    }
  }
}

TEST_CASE("worst_case_correct agrees with subset enumeration", "[robust][property]")
{
  std::mt19937 rng(51);
  for (int t = 0; t < 5; ++t) {
    const auto ds = testing::random_dataset(rng, 8, 3, 2);
    const auto spec = random_spec(rng, ds, static_cast<double>(rng() % 4));
    oracle::enumerate_plans(2, 3, 2, [&](const TreePlan& p) {
      CHECK(worst_case_correct(p, ds, spec) == brute_robust(p, ds, spec, 0.0));
    });
  }
}

TEST_CASE("zero budget reduces to the nominal fit", "[robust]")
{
  std::mt19937 rng(52);
  for (int t = 0; t < 3; ++t) {
    const auto ds = testing::random_dataset(rng, 10, 3, 2);
    const auto fit = fit_robust(ds, config(2), RobustSpec::uniform(ds.size(), 3, 1.0, 0.0));
    REQUIRE(fit.optimal());
    CHECK(fit.objective == fit_classifier(ds, config(2)).objective);
  }
}

TEST_CASE("an unlimited adversary leaves only the majority constant", "[robust]")
{
  std::mt19937 rng(53);
  const auto ds = testing::random_dataset(rng, 9, 3, 2);
  const auto spec = RobustSpec::uniform(ds.size(), 3, 1.0, 3.0);
  const auto fit = fit_robust(ds, config(2, 0.01), spec);
  REQUIRE(fit.optimal());
  const long ones = std::count(ds.y.begin(), ds.y.end(), 1);
  const long majority = std::max<long>(ones, static_cast<long>(ds.size()) - ones);
  CHECK(fit.plan->branch_count() == 0);
  CHECK(fit.objective == Catch::Approx(0.99 * static_cast<double>(majority)).margin(1e-9));
}

TEST_CASE("XOR with unit costs and budget one matches the oracle", "[robust]")
{
  const auto ds = testing::xor_dataset();
  const auto spec = RobustSpec::uniform(4, 2, 1.0, 1.0);
  const auto fit = fit_robust(ds, config(2), spec);
  REQUIRE(fit.optimal());
  CHECK(fit.objective == robust_oracle(ds, spec, 2, 0.0));
  CHECK(fit.objective == worst_case_correct(*fit.plan, ds, spec));
}

TEST_CASE("cut loop matches the oracle and its own evaluator", "[robust][property]")
{
  std::mt19937 rng(54);
  for (int t = 0; t < 6; ++t) {
    const auto ds = testing::random_dataset(rng, 8 + rng() % 4, 3, 2);
    const auto spec = random_spec(rng, ds, 1.0 + static_cast<double>(rng() % 3));
    const double lambda = t % 2 == 0 ? 0.0 : 0.01;
    RobustOptions options;
    options.cut_all_reachable = t < 3;
    const auto fit = fit_robust(ds, config(2, lambda), spec, options);
    INFO("instance " << t);
    REQUIRE(fit.optimal());
    CHECK(fit.rounds <= options.max_rounds);
    CHECK(fit.objective == Catch::Approx(robust_oracle(ds, spec, 2, lambda)).margin(1e-9));
    CHECK(fit.objective == Catch::Approx(brute_robust(*fit.plan, ds, spec, lambda)).margin(1e-12));
    if (lambda == 0.0) CHECK(fit.objective == worst_case_correct(*fit.plan, ds, spec));
  }
}

TEST_CASE("the optimum is monotone in budget and costs", "[robust][property]")
{
  std::mt19937 rng(55);
  const auto ds = testing::random_dataset(rng, 10, 3, 2);
  auto spec = random_spec(rng, ds, 0.0);
  double previous = std::numeric_limits<double>::infinity();
  for (const double eps : {0.0, 1.0, 2.0, 4.0}) {
    spec.epsilon = eps;
    const auto fit = fit_robust(ds, config(2), spec);
    REQUIRE(fit.optimal());
    CHECK(fit.objective <= previous);
    previous = fit.objective;
  }
  spec.epsilon = 2.0;
  const double base = fit_robust(ds, config(2), spec).objective;
  for (auto& row : spec.costs) row[0] += 2.0;
  CHECK(fit_robust(ds, config(2), spec).objective >= base);
}

TEST_CASE("the round cap stops the loop with a warning", "[robust]")
{
  std::mt19937 rng(56);
  const auto ds = testing::random_dataset(rng, 10, 3, 2);
  const auto spec = RobustSpec::uniform(ds.size(), 3, 1.0, 1.0);
  RobustOptions options;
  options.max_rounds = 1;
  const auto fit = fit_robust(ds, config(2), spec, options);
  CHECK(fit.capped);
  CHECK_FALSE(fit.optimal());
  REQUIRE(fit.plan);
  CHECK(fit.objective == worst_case_correct(*fit.plan, ds, spec));
  CHECK_FALSE(fit.warnings.empty());
}

TEST_CASE("malformed cost matrices are rejected", "[robust]")
{
  const auto ds = testing::xor_dataset();
  CHECK_THROWS_AS(fit_robust(ds, config(1), RobustSpec::uniform(3, 2, 1.0, 1.0)), ValidationError);
  CHECK_THROWS_AS(fit_robust(ds, config(1), RobustSpec::uniform(4, 2, -1.0, 1.0)), ValidationError);
  CHECK_THROWS_AS(fit_robust(ds, config(1), RobustSpec::uniform(4, 2, 1.0, -1.0)), ValidationError);
}
