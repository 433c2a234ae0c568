/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_ORACLE_ENUMERATE_HPP
#define ODT_ORACLE_ENUMERATE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "odt/error.hpp"
#include "odt/tree/plan.hpp"

namespace odt::oracle {

using tree::NodeId;
using tree::TreePlan;

inline constexpr int kMaxDepth = 3;

/// Number of valid plans: C(0) = K, C(d) = K + F * C(d-1)^2. Saturates at
/// the largest uint64 value.
inline std::uint64_t count_plans(int depth, int num_features, int num_labels)
{
  constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
  const auto K = static_cast<std::uint64_t>(num_labels);
  const auto F = static_cast<std::uint64_t>(num_features);
  std::uint64_t c = K;
  for (int level = 1; level <= depth; ++level) {
    if (c != 0 && c > cap / c) return cap;
    const std::uint64_t sq = c * c;
    if (F != 0 && sq > (cap - K) / F) return cap;
    c = K + F * sq;
  }
  return c;
}

/// Streams every structurally valid plan exactly once. Each node's choices
/// run Predict(0..K-1) then Branch(0..F-1); the root varies slowest and,
/// under a branch, the right subtree varies fastest.
class PlanIterator {
 public:
  PlanIterator(int depth, int num_features, int num_labels)
      : depth_(depth), features_(num_features), labels_(num_labels)
  {
    if (depth > kMaxDepth) {
      throw GuardError("exhaustive enumeration is limited to depth " + std::to_string(kMaxDepth));
    }
    if (depth < 1) throw GuardError("depth must be at least 1");
    if (num_features < 0 || num_labels < 1) throw GuardError("need at least one label and a nonnegative feature count");
    root_ = std::make_unique<Cursor>(depth);
  }

  /// Writes the next plan into `out`; false once the stream is exhausted.
  bool next(TreePlan& out)
  {
    if (done_) return false;
    if (started_ && !advance(*root_)) {
      done_ = true;
      return false;
    }
    started_ = true;
    out = TreePlan(depth_);
    write(*root_, 1, out);
    ++emitted_;
    return true;
  }

  [[nodiscard]] std::uint64_t emitted() const { return emitted_; }

 private:
  struct Cursor {
    explicit Cursor(int remaining_depth) : remaining(remaining_depth) {}
    int remaining;
    int choice = 0;  // < K: predict, else branch on feature choice - K
    std::unique_ptr<Cursor> left;
    std::unique_ptr<Cursor> right;
  };

  [[nodiscard]] int num_choices(const Cursor& c) const { return labels_ + (c.remaining > 0 ? features_ : 0); }

  void enter_choice(Cursor& c) const
  {
    if (c.choice >= labels_) {
      c.left = std::make_unique<Cursor>(c.remaining - 1);
      c.right = std::make_unique<Cursor>(c.remaining - 1);
    } else {
      c.left.reset();
      c.right.reset();
    }
  }

  bool advance(Cursor& c) const
  {
    if (c.choice >= labels_) {
      if (advance(*c.right)) return true;
      c.right = std::make_unique<Cursor>(c.remaining - 1);
      if (advance(*c.left)) return true;
    }
    if (c.choice + 1 >= num_choices(c)) return false;
    ++c.choice;
    enter_choice(c);
    return true;
  }

  void write(const Cursor& c, NodeId n, TreePlan& out) const
  {
    if (c.choice < labels_) {
      out.set(n, tree::NodeRole::predict(c.choice));
      return;
    }
    out.set(n, tree::NodeRole::branch(c.choice - labels_));
    write(*c.left, tree::Topology::left(n), out);
    write(*c.right, tree::Topology::right(n), out);
  }

  int depth_;
  int features_;
  int labels_;
  std::unique_ptr<Cursor> root_;
  bool started_ = false;
  bool done_ = false;
  std::uint64_t emitted_ = 0;
};

/// Calls `visit` on every plan in enumeration order. Returns the count.
inline std::uint64_t enumerate_plans(int depth, int num_features, int num_labels,
                                     const std::function<void(const TreePlan&)>& visit)
{
  PlanIterator it(depth, num_features, num_labels);
  TreePlan plan(depth);
  while (it.next(plan)) visit(plan);
  return it.emitted();
}

struct OracleResult {
  TreePlan plan;
  double value = 0.0;
  std::uint64_t enumerated = 0;
  std::uint64_t accepted = 0;
};

using Evaluator = std::function<double(const TreePlan&)>;
using Filter = std::function<bool(const TreePlan&)>;

/// Best plan under `evaluate` among those passing `filter`; the first plan in
/// enumeration order wins ties.
inline OracleResult best_plan(int depth, int num_features, int num_labels, const Evaluator& evaluate,
                              const Filter& filter = {})
{
  std::optional<OracleResult> best;
  std::uint64_t enumerated = 0;
  std::uint64_t accepted = 0;
  enumerate_plans(depth, num_features, num_labels, [&](const TreePlan& plan) {
    ++enumerated;
    if (filter && !filter(plan)) return;
    ++accepted;
    const double value = evaluate(plan);
    if (!best || value > best->value) best = OracleResult{plan, value, 0, 0};
  });
  if (!best) throw Error("no feasible plan");
  best->enumerated = enumerated;
  best->accepted = accepted;
  return *best;
}

}  // namespace odt::oracle

#endif  // ODT_ORACLE_ENUMERATE_HPP
