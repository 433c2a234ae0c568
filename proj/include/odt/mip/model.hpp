/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_MIP_MODEL_HPP
#define ODT_MIP_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "odt/error.hpp"

namespace odt::mip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using VarId = int;

enum class VarKind { continuous, binary };
enum class RowSense { less_equal, equal, greater_equal };
enum class ObjSense { maximize, minimize };

struct Variable {
  VarId id = 0;
  double lower = 0.0;
  double upper = kInf;
  VarKind kind = VarKind::continuous;
  std::string name;
};

struct Term {
  VarId var = 0;
  double coef = 0.0;
};

struct LinearConstraint {
  std::vector<Term> terms;
  RowSense sense = RowSense::less_equal;
  double rhs = 0.0;
  std::string tag;
};

/// A linear mixed-integer model. Ids are dense indices into `variables`.
class Model {
 public:
  VarId add_variable(double lower, double upper, VarKind kind = VarKind::continuous,
                     std::string name = {})
  {
    const auto id = static_cast<VarId>(variables_.size());
    variables_.push_back(Variable{id, lower, upper, kind, std::move(name)});
    objective_.push_back(0.0);
    return id;
  }

  VarId add_binary(std::string name = {})
  {
    return add_variable(0.0, 1.0, VarKind::binary, std::move(name));
  }

  std::size_t add_constraint(std::vector<Term> terms, RowSense sense, double rhs,
                             std::string tag = {})
  {
    constraints_.push_back(LinearConstraint{std::move(terms), sense, rhs, std::move(tag)});
    return constraints_.size() - 1;
  }

  // Used only by model readers; the solver never mutates a Model.
  void push_variable(Variable v)
  {
    v.id = static_cast<VarId>(variables_.size());
    variables_.push_back(std::move(v));
    objective_.push_back(0.0);
  }

  void set_objective_coef(VarId id, double coef) { objective_.at(static_cast<std::size_t>(id)) = coef; }
  void add_objective_coef(VarId id, double coef) { objective_.at(static_cast<std::size_t>(id)) += coef; }
  void clear_objective() { std::fill(objective_.begin(), objective_.end(), 0.0); }
  void set_sense(ObjSense sense) { sense_ = sense; }

  [[nodiscard]] const std::vector<Variable>& variables() const { return variables_; }
  [[nodiscard]] const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  [[nodiscard]] const std::vector<double>& objective() const { return objective_; }
  [[nodiscard]] ObjSense sense() const { return sense_; }
  [[nodiscard]] std::size_t num_variables() const { return variables_.size(); }
  [[nodiscard]] std::size_t num_constraints() const { return constraints_.size(); }

  [[nodiscard]] std::size_t num_binaries() const
  {
    std::size_t count = 0;
    for (const auto& v : variables_) count += v.kind == VarKind::binary ? 1 : 0;
    return count;
  }

  /// Objective value of an assignment, in the model's own sense.
  [[nodiscard]] double evaluate(const std::vector<double>& values) const
  {
    double total = 0.0;
    for (std::size_t j = 0; j < objective_.size() && j < values.size(); ++j) {
      if (objective_[j] != 0.0) total += objective_[j] * values[j];
    }
    return total;
  }

  [[nodiscard]] static double row_activity(const LinearConstraint& row,
                                           const std::vector<double>& values)
  {
    double total = 0.0;
    for (const auto& t : row.terms) total += t.coef * values[static_cast<std::size_t>(t.var)];
    return total;
  }

  /// True when `values` satisfies bounds, rows (within `feas_tol`) and integrality
  /// (within `int_tol`).
  [[nodiscard]] bool is_feasible(const std::vector<double>& values, double feas_tol,
                                 double int_tol) const
  {
    if (values.size() != variables_.size()) return false;
    for (const auto& v : variables_) {
      const double x = values[static_cast<std::size_t>(v.id)];
      if (!std::isfinite(x)) return false;
      if (x < v.lower - feas_tol || x > v.upper + feas_tol) return false;
      if (v.kind == VarKind::binary && std::abs(x - std::round(x)) > int_tol) return false;
    }
    for (const auto& row : constraints_) {
      const double act = row_activity(row, values);
      const double tol = feas_tol * std::max(1.0, std::abs(row.rhs));
      switch (row.sense) {
        case RowSense::less_equal:
          if (act > row.rhs + tol) return false;
          break;
        case RowSense::greater_equal:
          if (act < row.rhs - tol) return false;
          break;
        case RowSense::equal:
          if (std::abs(act - row.rhs) > tol) return false;
          break;
      }
    }
    return true;
  }

 private:
  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  std::vector<double> objective_;
  ObjSense sense_ = ObjSense::maximize;
};

/// Returns one diagnostic per violated model invariant; empty means well formed.
inline std::vector<Diagnostic> validate_model(const Model& model)
{
  std::vector<Diagnostic> out;
  const auto n = static_cast<VarId>(model.num_variables());
  for (const auto& v : model.variables()) {
    const std::string who = "variable " + std::to_string(v.id) + (v.name.empty() ? "" : " (" + v.name + ")");
    if (std::isnan(v.lower) || std::isnan(v.upper)) {
      out.push_back({who, "NaN bound"});
    } else if (v.lower > v.upper) {
      out.push_back({who, "empty bound interval [" + std::to_string(v.lower) + ", " +
                              std::to_string(v.upper) + "]"});
    }
    if (v.kind == VarKind::binary && (v.lower < 0.0 || v.upper > 1.0)) {
      out.push_back({who, "binary variable with bounds outside [0,1]"});
    }
  }
  for (std::size_t r = 0; r < model.num_constraints(); ++r) {
    const auto& row = model.constraints()[r];
    const std::string who = "constraint " + std::to_string(r) + (row.tag.empty() ? "" : " (" + row.tag + ")");
    std::unordered_set<VarId> seen;
    for (const auto& t : row.terms) {
      if (t.var < 0 || t.var >= n) {
        out.push_back({who, "unknown variable id " + std::to_string(t.var)});
        continue;
      }
      if (!seen.insert(t.var).second) {
        out.push_back({who, "duplicate variable id " + std::to_string(t.var)});
      }
      if (!std::isfinite(t.coef)) {
        out.push_back({who, "non-finite coefficient on variable " + std::to_string(t.var)});
      }
    }
    if (!std::isfinite(row.rhs)) out.push_back({who, "non-finite right-hand side"});
  }
  for (std::size_t j = 0; j < model.objective().size(); ++j) {
    if (!std::isfinite(model.objective()[j])) {
      out.push_back({"objective", "non-finite coefficient on variable " + std::to_string(j)});
    }
  }
  return out;
}

}  // namespace odt::mip

#endif  // ODT_MIP_MODEL_HPP
