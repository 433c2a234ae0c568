/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "odt/cli.hpp"
#include "odt/mip/lp_format.hpp"
#include "odt/mip/solver.hpp"
#include "odt/oct/fair.hpp"
#include "odt/oct/flow.hpp"
#include "odt/oct/robust.hpp"
#include "odt/oracle/enumerate.hpp"
#include "odt/policy/prescriptive.hpp"
#include "odt/tree/io.hpp"
#include "support/oracles.hpp"

using namespace odt;
using tree::TreePlan;

namespace {

const std::string kData = ODT_TEST_DATA;
const std::string kGolden = ODT_TEST_GOLDEN;

// Collects the first few failure messages of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what)
  {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  [[nodiscard]] bool ok() const { return failures_ == 0; }
  [[nodiscard]] std::string notes() const { return notes_; }
  void note(const std::string& s) { info_ += (info_.empty() ? "" : ", ") + s; }
  [[nodiscard]] const std::string& info() const { return info_; }

 private:
  int failures_ = 0;
  std::string notes_;
  std::string info_;
};

std::string num(double v)
{
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

oct::OCTConfig oct_config(int depth, double lambda)
{
  oct::OCTConfig c;
  c.depth = depth;
  c.lambda = lambda;
  return c;
}

double classify_oracle(const data::BinarizedDataset& ds, const oct::OCTConfig& c)
{
  return oracle::best_plan(c.depth, static_cast<int>(ds.num_features()), ds.num_classes(),
                           [&](const TreePlan& p) { return testing::penalized_accuracy(p, ds, c.lambda); })
      .value;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void classification(Check& chk)
{
  std::mt19937 rng(1001);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 10 + rng() % 21;
    const std::size_t F = 2 + rng() % 5;
    const int K = 2 + static_cast<int>(rng() % 2);
    const double lambda = t % 2 == 0 ? 0.0 : 0.01;
    const auto ds = testing::random_dataset(rng, n, F, K);
    const auto c = oct_config(2, lambda);
    const auto fit = oct::fit_classifier(ds, c);
    const double expected = classify_oracle(ds, c);
    const std::string tag = "instance " + std::to_string(t) + " (n=" + std::to_string(n) + " F=" + std::to_string(F) +
                            " K=" + std::to_string(K) + ")";
    chk.expect(fit.optimal(), tag + " not optimal");
    if (lambda == 0.0) {
      chk.expect(fit.objective == expected, tag + " objective " + num(fit.objective) + " vs " + num(expected));
    } else {
      chk.expect(close(fit.objective, expected, 1e-9), tag + " objective " + num(fit.objective) + " vs " + num(expected));
    }
  }
  chk.note("20 instances");
}

void xor_sanity(Check& chk)
{
  const auto ds = testing::xor_dataset();
  const auto d2 = oct::fit_classifier(ds, oct_config(2, 0.0));
  const auto d1 = oct::fit_classifier(ds, oct_config(1, 0.0));
  chk.expect(d2.optimal() && d2.objective == 4.0, "depth 2 objective " + num(d2.objective));
  chk.expect(d1.optimal() && d1.objective == 2.0, "depth 1 objective " + num(d1.objective));
  chk.note("depth 2 = " + num(d2.objective) + ", depth 1 = " + num(d1.objective));
}

data::BinarizedDataset random_fair(std::mt19937& rng, std::size_t n, std::size_t F)
{
  auto ds = testing::random_dataset(rng, n, F, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int g = (rng() % 4 == 0) ? 1 - static_cast<int>(ds.X(i, 0)) : static_cast<int>(ds.X(i, 0));
    ds.protected_group.push_back(g);
    ds.legitimate.push_back(static_cast<int>(rng() % 2));
  }
  ds.protected_group[0] = 0;
  ds.protected_group[1] = 1;
  ds.legitimate[0] = 0;
  ds.legitimate[1] = 1;
  ds.group_names = {"0", "1"};
  ds.legitimate_names = {"0", "1"};
  return ds;
}

void fairness(Check& chk)
{
  // (a) the fairness example parameters on the bundled fixture.
  cli::Options opt;
  opt.data = kData + "/fair_toy.csv";
  const auto loaded = cli::detail::load_training_data(opt, false);
  const auto c = oct_config(2, 0.01);
  const oct::FairnessSpec loose{oct::FairnessType::statistical_parity, 1.0, 1};
  const auto fair = oct::fit_fair(loaded.ds, c, loose);
  const auto plain = oct::fit_classifier(loaded.ds, c);
  chk.expect(fair.optimal() && plain.optimal() && close(fair.objective, plain.objective, 1e-9),
             "(a) " + num(fair.objective) + " vs unconstrained " + num(plain.objective));
  chk.note("(a) " + num(fair.objective));

  // (b) zero bound on the group-separating fixture.
  const auto sep = testing::group_separating_dataset();
  const oct::FairnessSpec strict{oct::FairnessType::statistical_parity, 0.0, 1};
  const auto tight = oct::fit_fair(sep, oct_config(1, 0.0), strict);
  const double gap = tight.plan ? oct::disparity(*tight.plan, sep, strict) : 1.0;
  chk.expect(tight.optimal() && gap <= 1e-6, "(b) disparity " + num(gap));
  chk.note("(b) disparity " + num(gap));

  // (c) filtered oracle.
  std::mt19937 rng(1003);
  const oct::FairnessType types[] = {oct::FairnessType::statistical_parity,
                                     oct::FairnessType::conditional_statistical_parity,
                                     oct::FairnessType::equalized_odds};
  for (int t = 0; t < 10; ++t) {
    const auto ds = random_fair(rng, 10 + rng() % 5, 3);
    const oct::FairnessSpec spec{types[t % 3], t % 2 == 0 ? 0.0 : 0.2, 1};
    const auto cfg = oct_config(2, t < 5 ? 0.0 : 0.01);
    const auto fit = oct::fit_fair(ds, cfg, spec);
    const double expected =
        oracle::best_plan(
            2, static_cast<int>(ds.num_features()), 2,
            [&](const TreePlan& p) { return oct::evaluate_objective(p, ds, cfg); },
            [&](const TreePlan& p) { return oct::disparity(p, ds, spec) <= spec.bound + 1e-9; })
            .value;
    chk.expect(fit.optimal() && close(fit.objective, expected, 1e-9),
               "(c) instance " + std::to_string(t) + ": " + num(fit.objective) + " vs " + num(expected));
  }
  chk.note("(c) 10 instances");
}

oct::RobustSpec random_costs(std::mt19937& rng, const data::BinarizedDataset& ds, double eps)
{
  oct::RobustSpec spec;
  spec.epsilon = eps;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> row;
    for (std::size_t f = 0; f < ds.num_features(); ++f) row.push_back(1.0 + static_cast<double>(rng() % 3));
    spec.costs.push_back(std::move(row));
  }
  return spec;
}

void robustness(Check& chk)
{
  std::mt19937 rng(1004);
  for (int t = 0; t < 10; ++t) {
    const auto ds = testing::random_dataset(rng, 8 + rng() % 5, 3, 2);
    const auto c = oct_config(2, t % 2 == 0 ? 0.0 : 0.01);
    const auto fit = oct::fit_robust(ds, c, random_costs(rng, ds, 0.0));
    const auto nominal = oct::fit_classifier(ds, c);
    chk.expect(fit.optimal() && close(fit.objective, nominal.objective, 1e-9),
               "(a) instance " + std::to_string(t) + ": " + num(fit.objective) + " vs " + num(nominal.objective));
  }

  const auto ds = testing::random_dataset(rng, 11, 3, 2);
  const auto all = oct::RobustSpec::uniform(ds.size(), 3, 1.0, 3.0);
  const auto fit = oct::fit_robust(ds, oct_config(2, 0.01), all);
  const long ones = std::count(ds.y.begin(), ds.y.end(), 1);
  const double majority = static_cast<double>(std::max<long>(ones, static_cast<long>(ds.size()) - ones));
  chk.expect(fit.optimal() && fit.plan && fit.plan->branch_count() == 0 && close(fit.objective, 0.99 * majority, 1e-9),
             "(b) objective " + num(fit.objective) + " vs " + num(0.99 * majority));

  std::size_t max_rounds = 0;
  for (int t = 0; t < 10; ++t) {
    const auto inst = testing::random_dataset(rng, 8 + rng() % 5, 3 + rng() % 2, 2);
    const auto spec = random_costs(rng, inst, 1.0 + static_cast<double>(rng() % 3));
    const double lambda = t % 2 == 0 ? 0.0 : 0.01;
    const auto r = oct::fit_robust(inst, oct_config(2, lambda), spec);
    max_rounds = std::max(max_rounds, r.rounds);
    const std::string tag = "(c) instance " + std::to_string(t);
    chk.expect(r.optimal() && !r.capped, tag + " did not terminate optimally");
    if (!r.plan) continue;
    const double exact = (1.0 - lambda) * oct::worst_case_correct(*r.plan, inst, spec) - lambda * r.plan->branch_count();
    chk.expect(r.objective == exact, tag + " objective " + num(r.objective) + " vs evaluator " + num(exact));
    if (lambda == 0.0) {
      const double best = oracle::best_plan(2, static_cast<int>(inst.num_features()), 2, [&](const TreePlan& p) {
                            return oct::worst_case_correct(p, inst, spec);
                          }).value;
      chk.expect(r.objective == best, tag + " objective " + num(r.objective) + " vs oracle " + num(best));
    }
  }
  chk.note("(c) at most " + std::to_string(max_rounds) + " master solves of " +
           std::to_string(oct::RobustOptions{}.max_rounds));
}

policy::PolicyConfig policy_config(int depth, std::vector<std::optional<long long>> budgets = {})
{
  policy::PolicyConfig c;
  c.depth = depth;
  c.budgets = std::move(budgets);
  return c;
}

data::FeatureMatrix random_bits(std::mt19937& rng, std::size_t n, std::size_t F)
{
  data::FeatureMatrix X(n, F);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < F; ++f) X(i, f) = static_cast<double>(rng() % 2);
  }
  return X;
}

policy::ScoreMatrix random_scores(std::mt19937& rng, const data::FeatureMatrix& X, int K)
{
  policy::ScoreMatrix s;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    std::vector<double> row;
    for (int k = 0; k < K; ++k) row.push_back(static_cast<double>(rng() % 9) - 3.0 + 2.0 * X(i, static_cast<std::size_t>(k) % X.cols()));
    s.v.push_back(std::move(row));
  }
  return s;
}

void prescriptive(Check& chk)
{
  std::mt19937 rng(1005);

  // (a) a dominant arm wins everywhere; a zero budget forbids it.
  const auto X = random_bits(rng, 12, 2);
  policy::ScoreMatrix dom;
  double sum0 = 0.0, sum1 = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double base = static_cast<double>(rng() % 5);
    dom.v.push_back({base, base + 1.0 + static_cast<double>(rng() % 3)});
    sum0 += dom.v.back()[0];
    sum1 += dom.v.back()[1];
  }
  const auto free = policy::fit_policy(X, dom, policy_config(2));
  chk.expect(free.optimal() && free.objective == sum1 && policy::assignment_counts(*free.plan, X, 2)[0] == 0,
             "(a) dominance objective " + num(free.objective) + " vs " + num(sum1));
  const auto none = policy::fit_policy(X, dom, policy_config(2, {std::nullopt, 0}));
  chk.expect(none.optimal() && none.objective == sum0 && policy::assignment_counts(*none.plan, X, 2)[1] == 0,
             "(a) zero budget objective " + num(none.objective) + " vs " + num(sum0));

  // (b) oracle on random score matrices.
  for (int t = 0; t < 10; ++t) {
    const auto n = 8 + rng() % 7;
    const auto Xr = random_bits(rng, n, 3);
    const int K = 2 + static_cast<int>(rng() % 2);
    const auto s = random_scores(rng, Xr, K);
    auto c = policy_config(1 + t % 2);
    if (t % 3 == 1) c.budgets = {std::nullopt, static_cast<long long>(n / 3)};
    if (t % 4 == 3) c.lambda = 0.01;
    const auto fit = policy::fit_policy(Xr, s, c);
    const double expected =
        oracle::best_plan(
            c.depth, 3, K,
            [&](const TreePlan& p) { return (1.0 - c.lambda) * policy::policy_value(p, Xr, s) - c.lambda * p.branch_count(); },
            [&](const TreePlan& p) { return policy::within_budgets(p, Xr, K, c); })
            .value;
    chk.expect(fit.optimal() && close(fit.objective, expected, 1e-9) && policy::within_budgets(*fit.plan, Xr, K, c),
               "(b) instance " + std::to_string(t) + ": " + num(fit.objective) + " vs " + num(expected));
  }

  // (c) DR collapses to DM when cell means reproduce every outcome.
  policy::ObservationalData d;
  d.X = random_bits(rng, 16, 2);
  d.num_treatments = 2;
  for (std::size_t i = 0; i < 16; ++i) {
    const int k = i < 2 ? static_cast<int>(i) : static_cast<int>(rng() % 2);
    d.treatment.push_back(k);
    d.outcome.push_back(1.0 + 2.0 * d.X(i, 0) * k + d.X(i, 1) - 0.5 * k);
  }
  const auto est = policy::estimate_nuisances(d, 1.0);
  const auto dm = policy::compute_scores(d, est, policy::ScoreMethod::direct);
  const auto dr = policy::compute_scores(d, est, policy::ScoreMethod::doubly_robust);
  const auto fit_dm = policy::fit_policy(d.X, dm, policy_config(2));
  const auto fit_dr = policy::fit_policy(d.X, dr, policy_config(2));
  chk.expect(dm.v == dr.v && close(fit_dm.objective, fit_dr.objective, 1e-9),
             "(c) DR " + num(fit_dr.objective) + " vs DM " + num(fit_dm.objective));

  // (d) affine shift.
  for (int t = 0; t < 5; ++t) {
    const auto Xs = random_bits(rng, 10, 3);
    const auto s = random_scores(rng, Xs, 2);
    const double beta = 0.75 + t;
    auto shifted = s;
    for (auto& row : shifted.v) {
      for (auto& x : row) x += beta;
    }
    const auto a = policy::fit_policy(Xs, s, policy_config(2));
    const auto b = policy::fit_policy(Xs, shifted, policy_config(2));
    chk.expect(a.optimal() && b.optimal() && close(b.objective, a.objective + 10.0 * beta, 1e-6) &&
                   close(policy::policy_value(*b.plan, Xs, s), a.objective, 1e-6),
               "(d) shift " + num(beta) + ": " + num(b.objective) + " vs " + num(a.objective + 10.0 * beta));
  }
  chk.note("(b) 10 instances");
}

void mip_core(Check& chk)
{
  std::mt19937 rng(1006);
  int infeasible = 0;
  for (int t = 0; t < 100; ++t) {
    const auto m = testing::random_binary_mip(rng);
    const auto expected = testing::binary_brute_max(m);
    const auto a = mip::solve_mip(m);
    const auto b = mip::solve_mip(m);
    const std::string tag = "MIP " + std::to_string(t);
    chk.expect(a.status == b.status && a.values == b.values && a.nodes_explored == b.nodes_explored &&
                   a.bound_trace == b.bound_trace,
               tag + " not deterministic");
    if (!expected) {
      ++infeasible;
      chk.expect(a.status == mip::SolveStatus::infeasible, tag + " should be infeasible");
      continue;
    }
    chk.expect(a.status == mip::SolveStatus::optimal && a.objective == *expected,
               tag + " objective " + num(a.objective) + " vs " + num(*expected));
  }
  for (int t = 0; t < 100; ++t) {
    const auto lp = testing::random_box_lp(rng);
    const auto expected = testing::lp_vertex_max(lp);
    const auto a = mip::solve_lp(lp);
    const auto b = mip::solve_lp(lp);
    const std::string tag = "LP " + std::to_string(t);
    chk.expect(a.status == b.status && a.values == b.values && a.lp_iterations == b.lp_iterations,
               tag + " not deterministic");
    if (!expected) {
      chk.expect(a.status == mip::SolveStatus::infeasible, tag + " should be infeasible");
      continue;
    }
    chk.expect(a.status == mip::SolveStatus::optimal && close(a.objective, *expected, 1e-6),
               tag + " objective " + num(a.objective) + " vs " + num(*expected));
  }
  chk.note("100 MIPs (" + std::to_string(infeasible) + " infeasible), 100 LPs");
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void interfaces(Check& chk)
{
  std::mt19937 rng(1007);
  for (int t = 0; t < 20; ++t) {
    const auto m = t % 2 == 0 ? testing::random_binary_mip(rng) : testing::random_box_lp(rng);
    const auto back = mip::read_lp_string(mip::to_lp_string(m));
    const auto a = t % 2 == 0 ? mip::solve_mip(m) : mip::solve_lp(m);
    const auto b = t % 2 == 0 ? mip::solve_mip(back) : mip::solve_lp(back);
    chk.expect(a.status == b.status && (!a.has_solution() || close(a.objective, b.objective, 1e-9)),
               "LP round trip model " + std::to_string(t));
  }

  const auto dir = std::filesystem::temp_directory_path() / ("odt_acceptance_" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  std::ostringstream out, err;
  const int fit_code = cli::run({"fit", "--task", "classify", "--data", kData + "/fair_toy.csv", "--depth", "2",
                                 "--lambda", "0.01", "--out", dir.string()},
                                out, err);
  chk.expect(fit_code == 0, "fit exited " + std::to_string(fit_code) + ": " + err.str());
  if (fit_code == 0) {
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    std::ostringstream pred;
    const int code = cli::run({"predict", "--tree", (dir / "tree.json").string(), "--data", kData + "/fair_toy.csv"}, pred, err);
    std::string expected = "prediction\n";
    for (const auto& v : manifest["predictions"]) expected += v.get<std::string>() + "\n";
    chk.expect(code == 0 && pred.str() == expected, "tree JSON round trip through predict");
  }

  auto j = tree::to_json(testing::xor_plan());
  j["feature_names"] = {"x1", "x2"};
  j["label_names"] = {"0", "1"};
  std::ofstream(dir / "xor.json") << j.dump(2);
  const auto golden = slurp(kGolden + "/xor_depth2.dot");
  for (int run = 0; run < 2; ++run) {
    std::ostringstream dot;
    cli::run({"visualize", "--tree", (dir / "xor.json").string()}, dot, err);
    chk.expect(!golden.empty() && dot.str() == golden, "DOT output differs from the golden file");
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  chk.note("20 LP models, predict round trip, DOT golden");
}

}  // namespace

int main()
{
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {"classification oracle equivalence", classification},
      {"xor sanity", xor_sanity},
      {"fairness", fairness},
      {"robustness", robustness},
      {"prescriptive", prescriptive},
      {"mip core", mip_core},
      {"interfaces", interfaces},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Check chk;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(chk);
    } catch (const std::exception& e) {
      chk.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += chk.ok() ? 0 : 1;
    std::printf("%s  %-36s %7.2fs  %s%s%s\n", chk.ok() ? "PASS" : "FAIL", c.name, secs, chk.info().c_str(),
                chk.ok() ? "" : " | ", chk.notes().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
