/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_CLI_HPP
#define ODT_CLI_HPP

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "odt/data/csv.hpp"
#include "odt/data/dataset.hpp"
#include "odt/error.hpp"
#include "odt/oct/fair.hpp"
#include "odt/oct/flow.hpp"
#include "odt/oct/robust.hpp"
#include "odt/oracle/enumerate.hpp"
#include "odt/policy/prescriptive.hpp"
#include "odt/tree/io.hpp"

namespace odt::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kLimit = 2,       // time limit, node limit or cut-loop cap
  kInfeasible = 3,
  kUsage = 64,
  kDataError = 65,
  kSoftware = 70,
  kIoError = 74,
};

using Json = nlohmann::ordered_json;

struct Options {
  std::string task = "classify";
  std::string data;
  std::optional<int> depth;
  double lambda = 0.0;
  std::string objective = "accuracy";
  std::string fairness_type = "SP";
  double fairness_bound = 1.0;
  std::string positive_class = "1";
  std::string label, protected_attr, legit, treatment, outcome, weight;
  std::string roles_file;
  std::string costs;
  std::optional<double> epsilon;
  std::string scores;
  std::string method = "DR";
  double alpha = 1.0;
  std::vector<std::string> budgets;
  std::optional<double> time_limit;
  std::string out;
  std::string tree;
  bool oracle = false;
  std::size_t max_thresholds = 8;
  std::vector<std::string> argv;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// `column = role` lines; '#' starts a comment.
inline std::vector<data::RoleDeclaration> parse_roles_file(const std::string& text)
{
  std::vector<data::RoleDeclaration> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ParseError("roles file line " + std::to_string(line_no) + ": expected column = role");
    out.push_back({trim(line.substr(0, eq)), data::parse_role(trim(line.substr(eq + 1)))});
  }
  return out;
}

/// Role declarations from the roles file, explicit flags and, for roles left
/// undeclared, conventional column names.
inline std::vector<data::RoleDeclaration> role_declarations(const Options& opt, const std::vector<std::string>& header,
                                                            bool policy)
{
  std::map<std::string, data::ColumnRole> roles;
  if (!opt.roles_file.empty()) {
    for (const auto& d : parse_roles_file(read_file(opt.roles_file))) roles[d.column] = d.role;
  }
  const auto declare = [&](const std::string& column, data::ColumnRole role) {
    if (!column.empty()) roles[column] = role;
  };
  declare(opt.label, data::ColumnRole::label);
  declare(opt.protected_attr, data::ColumnRole::protected_attribute);
  declare(opt.legit, data::ColumnRole::legitimate);
  declare(opt.treatment, data::ColumnRole::treatment);
  declare(opt.outcome, data::ColumnRole::outcome);
  declare(opt.weight, data::ColumnRole::weight);

  const auto has_role = [&](data::ColumnRole role) {
    for (const auto& [c, r] : roles) {
      if (r == role) return true;
    }
    return false;
  };
  const auto fallback = [&](data::ColumnRole role, std::initializer_list<const char*> names) {
    if (has_role(role)) return;
    for (const char* name : names) {
      if (roles.count(name) == 0 && std::find(header.begin(), header.end(), name) != header.end()) {
        roles[name] = role;
        return;
      }
    }
  };
  if (policy) {
    fallback(data::ColumnRole::treatment, {"t", "treatment"});
    fallback(data::ColumnRole::outcome, {"y", "outcome"});
  } else {
    fallback(data::ColumnRole::label, {"y", "label"});
    fallback(data::ColumnRole::protected_attribute, {"protected", "group"});
    fallback(data::ColumnRole::legitimate, {"legit_factor", "legitimate", "legit"});
  }
  fallback(data::ColumnRole::weight, {"weight"});

  std::vector<data::RoleDeclaration> out;
  for (const auto& [c, r] : roles) out.push_back({c, r});
  return out;
}

inline std::vector<std::string> header_of(const std::string& csv_text)
{
  return data::load_csv_text(csv_text.substr(0, csv_text.find('\n'))).columns;
}

inline bool first_line_numeric(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r\"");
      const auto e = cell.find_last_not_of(" \t\r\"");
      if (b == std::string::npos || !data::parse_number(cell.substr(b, e - b + 1))) return false;
    }
    return true;
  }
  return true;
}

/// Numeric matrix file; a non-numeric first line is taken as a header.
inline std::vector<std::vector<double>> read_matrix(const std::string& path)
{
  const auto text = read_file(path);
  std::istringstream in(text);
  return data::load_numeric_csv(in, !first_line_numeric(text));
}

inline Json binarization_to_json(const data::BinarizationSpec& spec)
{
  Json j = Json::object();
  for (const auto& [name, enc] : spec.columns) {
    if (enc.kind == data::ColumnEncoding::Kind::thresholds) {
      j[name] = Json{{"thresholds", enc.thresholds}};
    } else if (enc.kind == data::ColumnEncoding::Kind::categories) {
      j[name] = Json{{"categories", enc.categories}};
    }
  }
  return j;
}

template <typename J>
data::BinarizationSpec binarization_from_json(const J& j)
{
  data::BinarizationSpec spec;
  try {
    for (const auto& [name, enc] : j.items()) {
      if (enc.contains("thresholds")) {
        spec.columns[name] = data::ColumnEncoding::numeric(enc.at("thresholds").template get<std::vector<double>>());
      } else if (enc.contains("categories")) {
        spec.columns[name] =
            data::ColumnEncoding::categorical(enc.at("categories").template get<std::vector<std::string>>());
      } else {
        throw ParseError("binarization entry '" + name + "' has neither thresholds nor categories");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("binarization: ") + e.what());
  }
  return spec;
}

struct LoadedData {
  data::RawTable table;
  data::BinarizationSpec spec;
  data::BinarizedDataset ds;
  std::vector<std::string> feature_columns;
};

inline LoadedData load_training_data(const Options& opt, bool policy)
{
  LoadedData out;
  const auto text = read_file(opt.data);
  out.table = data::load_csv_text(text, role_declarations(opt, header_of(text), policy));
  out.spec = data::default_binarization(out.table, opt.max_thresholds);
  out.ds = data::binarize(out.table, out.spec);
  for (const auto c : out.table.with_role(data::ColumnRole::feature)) out.feature_columns.push_back(out.table.columns[c]);
  return out;
}

inline int positive_class_code(const std::string& text, const data::BinarizedDataset& ds)
{
  for (std::size_t k = 0; k < ds.label_names.size(); ++k) {
    if (ds.label_names[k] == text) return static_cast<int>(k);
  }
  if (const auto v = data::parse_number(text); v && *v == std::round(*v)) return static_cast<int>(*v);
  throw SchemaError("positive class '" + text + "' is not a label");
}

inline oct::Objective parse_objective(const std::string& name)
{
  if (name == "accuracy") return oct::Objective::accuracy;
  if (name == "weighted") return oct::Objective::weighted;
  if (name == "worst_case" || name == "balanced") return oct::Objective::worst_case;
  throw SchemaError("unknown objective '" + name + "' (expected accuracy, weighted or worst_case)");
}

inline std::optional<double> time_limit(const Options& opt)
{
  if (opt.time_limit) return opt.time_limit;
  if (const char* env = std::getenv("ODT_TIME_LIMIT"); env != nullptr && *env != '\0') {
    const auto v = data::parse_number(env);
    if (!v || *v < 0.0) throw SchemaError(std::string("ODT_TIME_LIMIT is not a nonnegative number: ") + env);
    return v;
  }
  return std::nullopt;
}

inline std::vector<std::optional<long long>> parse_budgets(const std::vector<std::string>& items,
                                                           const std::vector<std::string>& names, int K)
{
  std::vector<std::optional<long long>> out(static_cast<std::size_t>(K));
  const auto code_of = [&](const std::string& key) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == key) return static_cast<int>(k);
    }
    const auto v = data::parse_number(key);
    if (!v || *v != std::round(*v) || *v < 0 || *v >= K) throw SchemaError("unknown treatment '" + key + "' in budget");
    return static_cast<int>(*v);
  };
  const auto amount = [](const std::string& text) -> std::optional<long long> {
    if (text == "inf" || text == "unlimited") return std::nullopt;
    const auto v = data::parse_number(text);
    if (!v || *v != std::round(*v) || *v < 0) throw SchemaError("budget '" + text + "' is not a nonnegative integer");
    return static_cast<long long>(*v);
  };
  std::size_t position = 0;
  for (const auto& item : items) {
    std::istringstream parts(item);
    std::string part;
    while (std::getline(parts, part, ',')) {
      if (const auto eq = part.find('='); eq != std::string::npos) {
        out[static_cast<std::size_t>(code_of(part.substr(0, eq)))] = amount(part.substr(eq + 1));
      } else {
        if (position >= out.size()) throw SchemaError("more budgets than treatments");
        out[position++] = amount(part);
      }
    }
  }
  return out;
}

inline Json status_json(const oct::FitResult& fit)
{
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json r;
  r["status"] = fit.capped ? "cut_limit" : std::string(mip::to_string(fit.solve.status));
  r["objective"] = finite_or_null(fit.objective);
  r["best_bound"] = finite_or_null(fit.solve.best_bound);
  r["gap"] = finite_or_null(fit.solve.gap());
  r["wall_time"] = fit.solve.wall_time;
  r["nodes"] = fit.solve.nodes_explored;
  r["lp_iterations"] = fit.solve.lp_iterations;
  r["rounds"] = fit.rounds;
  r["warnings"] = fit.warnings;
  return r;
}

inline int exit_code_of(const oct::FitResult& fit)
{
  if (fit.capped) return kLimit;
  switch (fit.solve.status) {
    case mip::SolveStatus::optimal: return kOk;
    case mip::SolveStatus::infeasible: return kInfeasible;
    case mip::SolveStatus::time_limit:
    case mip::SolveStatus::gap_limit: return kLimit;
    case mip::SolveStatus::unbounded: return kSoftware;
  }
  return kSoftware;
}

inline std::vector<std::string> names_or_default(const std::vector<std::string>& names, std::size_t count)
{
  return names.size() >= count ? names : tree::default_label_names(count);
}

struct TreeFile {
  tree::TreePlan plan;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
  std::optional<data::BinarizationSpec> binarization;
  std::vector<std::string> feature_columns;
};

inline TreeFile load_tree(const std::string& path)
{
  const auto text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
  TreeFile out{tree::plan_from_json(j), {}, {}, std::nullopt, {}};
  try {
    if (j.contains("feature_names")) out.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("label_names")) out.label_names = j.at("label_names").get<std::vector<std::string>>();
    if (j.contains("feature_columns")) out.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
  if (j.contains("binarization")) out.binarization = binarization_from_json(j.at("binarization"));
  return out;
}

/// Binarizes `path` the way the tree was trained: the tree's source feature
/// columns are features and every other column is ignored. Without that
/// record all undeclared columns are features and must already be binary.
inline data::BinarizedDataset load_for_tree(const Options& opt, const TreeFile& tf, bool policy)
{
  const auto text = read_file(opt.data);
  const auto header = header_of(text);
  auto declarations = role_declarations(opt, header, policy);
  if (!tf.feature_columns.empty()) {
    std::map<std::string, data::ColumnRole> roles;
    for (const auto& d : declarations) roles[d.column] = d.role;
    for (const auto& c : header) {
      const bool feature = std::find(tf.feature_columns.begin(), tf.feature_columns.end(), c) != tf.feature_columns.end();
      if (feature) {
        roles[c] = data::ColumnRole::feature;
      } else if (roles.count(c) == 0) {
        roles[c] = data::ColumnRole::ignore;
      }
    }
    for (const auto& c : tf.feature_columns) {
      if (std::find(header.begin(), header.end(), c) == header.end()) {
        throw SchemaError("data has no column '" + c + "' required by the tree");
      }
    }
    declarations.clear();
    for (const auto& [c, r] : roles) declarations.push_back({c, r});
  }
  const auto table = data::load_csv_text(text, declarations);
  auto ds = data::binarize(table, tf.binarization ? *tf.binarization : data::default_binarization(table, opt.max_thresholds));
  // Re-express labels with the training label codes when both are named.
  if (!tf.label_names.empty() && !ds.y.empty()) {
    std::vector<int> recoded;
    for (const int code : ds.y) {
      const auto& name = ds.label_names[static_cast<std::size_t>(code)];
      const auto it = std::find(tf.label_names.begin(), tf.label_names.end(), name);
      if (it == tf.label_names.end()) throw EncodingError("label '" + name + "' was not seen in training");
      recoded.push_back(static_cast<int>(it - tf.label_names.begin()));
    }
    ds.y = std::move(recoded);
    ds.label_names = tf.label_names;
  }
  if (!tf.feature_names.empty() && tf.feature_names.size() != ds.num_features()) {
    throw SchemaError("tree expects " + std::to_string(tf.feature_names.size()) + " features but the data has " +
                      std::to_string(ds.num_features()));
  }
  const int used = tf.plan.max_feature();
  if (used >= 0 && static_cast<std::size_t>(used) >= ds.num_features()) {
    throw SchemaError("tree tests feature " + std::to_string(used) + " but the data has " +
                      std::to_string(ds.num_features()) + " features");
  }
  return ds;
}

inline oct::RobustSpec robust_spec(const Options& opt, const data::BinarizedDataset& ds)
{
  oct::RobustSpec spec;
  spec.epsilon = opt.epsilon.value_or(0.0);
  if (opt.costs.empty()) {
    spec = oct::RobustSpec::uniform(ds.size(), ds.num_features(), 1.0, spec.epsilon);
  } else {
    spec.costs = read_matrix(opt.costs);
  }
  return spec;
}

inline policy::ScoreMatrix policy_scores(const Options& opt, const data::BinarizedDataset& ds)
{
  if (!opt.scores.empty()) {
    policy::ScoreMatrix s{read_matrix(opt.scores), policy::ScoreMethod::supplied};
    if (auto d = s.validate(ds.size()); !d.empty()) throw ValidationError(std::move(d));
    return s;
  }
  const auto obs = policy::ObservationalData::from(ds);
  const auto est = policy::estimate_nuisances(obs, opt.alpha);
  return policy::compute_scores(obs, est, policy::parse_score_method(opt.method));
}

inline Json config_json(const Options& opt)
{
  Json c;
  c["depth"] = opt.depth.value_or(0);
  c["lambda"] = opt.lambda;
  c["objective"] = opt.objective;
  if (opt.task == "fair") {
    c["fairness_type"] = opt.fairness_type;
    c["fairness_bound"] = opt.fairness_bound;
    c["positive_class"] = opt.positive_class;
  }
  if (opt.task == "robust") {
    c["epsilon"] = opt.epsilon.value_or(0.0);
    c["costs"] = opt.costs.empty() ? Json("uniform 1") : Json(opt.costs);
  }
  if (opt.task == "policy") {
    c["method"] = opt.scores.empty() ? opt.method : "supplied";
    c["alpha"] = opt.alpha;
    c["budgets"] = opt.budgets;
  }
  if (const auto tl = time_limit(opt)) c["time_limit"] = *tl;
  return c;
}

}  // namespace detail

/// `fit`: runs one pipeline and writes manifest.json, tree.json and tree.dot.
inline int cmd_fit(const Options& opt, std::ostream& out, std::ostream& /*err*/)
{
  const bool policy_task = opt.task == "policy";
  auto loaded = detail::load_training_data(opt, policy_task);
  const auto& ds = loaded.ds;

  oct::OCTConfig config;
  config.depth = *opt.depth;
  config.lambda = opt.lambda;
  config.mode = detail::parse_objective(opt.objective);
  config.solver.time_limit = detail::time_limit(opt);

  oct::FitResult fit;
  std::vector<std::string> label_names = ds.label_names;
  int num_labels = ds.num_classes();
  Json metrics;
  if (opt.task == "classify") {
    fit = oct::fit_classifier(ds, config);
  } else if (opt.task == "fair") {
    oct::FairnessSpec spec{oct::parse_fairness_type(opt.fairness_type), opt.fairness_bound,
                           detail::positive_class_code(opt.positive_class, ds)};
    fit = oct::fit_fair(ds, config, spec);
    if (fit.plan) metrics["disparity"] = oct::disparity(*fit.plan, ds, spec);
  } else if (opt.task == "robust") {
    const auto spec = detail::robust_spec(opt, ds);
    fit = oct::fit_robust(ds, config, spec);
    if (fit.plan) metrics["worst_case_correct"] = oct::worst_case_correct(*fit.plan, ds, spec);
  } else {
    data::require_valid(ds, data::Task::policy);
    const auto scores = detail::policy_scores(opt, ds);
    policy::PolicyConfig pc;
    pc.depth = config.depth;
    pc.lambda = config.lambda;
    pc.solver = config.solver;
    num_labels = scores.num_treatments();
    label_names = detail::names_or_default(ds.treatment_names, static_cast<std::size_t>(num_labels));
    pc.budgets = detail::parse_budgets(opt.budgets, label_names, num_labels);
    fit = policy::fit_policy(ds.X, scores, pc);
    if (fit.plan) {
      metrics["policy_value"] = policy::policy_value(*fit.plan, ds.X, scores);
      metrics["assignment_counts"] = policy::assignment_counts(*fit.plan, ds.X, num_labels);
    }
  }
  label_names = detail::names_or_default(label_names, static_cast<std::size_t>(num_labels));

  Json manifest;
  manifest["tool"] = "odtree";
  manifest["version"] = kVersion;
  manifest["command"] = opt.argv;
  manifest["task"] = opt.task;
  manifest["inputs"] = Json{{"data", opt.data}};
  if (!opt.costs.empty()) manifest["inputs"]["costs"] = opt.costs;
  if (!opt.scores.empty()) manifest["inputs"]["scores"] = opt.scores;
  Json roles = Json::object();
  for (std::size_t c = 0; c < loaded.table.columns.size(); ++c) {
    roles[loaded.table.columns[c]] = std::string(data::to_string(loaded.table.roles[c]));
  }
  manifest["inputs"]["roles"] = roles;
  manifest["config"] = detail::config_json(opt);
  manifest["result"] = detail::status_json(fit);

  const std::filesystem::path dir = opt.out.empty() ? std::filesystem::path(".") : std::filesystem::path(opt.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  if (fit.plan) {
    const auto predicted = tree::predict(*fit.plan, ds.X);
    std::vector<std::string> shown;
    for (const int k : predicted) shown.push_back(label_names.at(static_cast<std::size_t>(k)));
    if (!ds.y.empty() && !policy_task) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < ds.size(); ++i) correct += predicted[i] == ds.y[i] ? 1 : 0;
      metrics["correct"] = correct;
      metrics["accuracy"] = static_cast<double>(correct) / static_cast<double>(ds.size());
    }
    manifest["metrics"] = metrics;
    manifest["predictions"] = shown;

    auto tree_json = tree::to_json(*fit.plan);
    tree_json["feature_names"] = ds.feature_names;
    tree_json["label_names"] = label_names;
    tree_json["feature_columns"] = loaded.feature_columns;
    tree_json["binarization"] = detail::binarization_to_json(loaded.spec);
    manifest["tree"] = tree_json;
    detail::write_file(dir / "tree.json", tree_json.dump(2) + "\n");
    detail::write_file(dir / "tree.dot", tree::to_dot(*fit.plan, ds.feature_names, label_names));
  }
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << manifest["result"].dump(2) << "\n";
  return detail::exit_code_of(fit);
}

/// `predict`: one output row per input row with the predicted label.
inline int cmd_predict(const Options& opt, std::ostream& out, std::ostream& /*err*/)
{
  const auto tf = detail::load_tree(opt.tree);
  const auto ds = detail::load_for_tree(opt, tf, opt.task == "policy");
  const auto predicted = tree::predict(tf.plan, ds.X);
  const auto names = detail::names_or_default(tf.label_names, static_cast<std::size_t>(std::max(tf.plan.max_label() + 1, 0)));
  std::ostringstream csv;
  csv << "prediction\n";
  for (const int k : predicted) csv << names.at(static_cast<std::size_t>(k)) << "\n";
  if (opt.out.empty()) {
    out << csv.str();
  } else {
    detail::write_file(opt.out, csv.str());
  }
  return kOk;
}

/// `visualize`: DOT text of a tree file.
inline int cmd_visualize(const Options& opt, std::ostream& out, std::ostream& /*err*/)
{
  const auto tf = detail::load_tree(opt.tree);
  const auto features = tf.feature_names.empty()
                            ? tree::default_feature_names(static_cast<std::size_t>(std::max(tf.plan.max_feature() + 1, 0)))
                            : tf.feature_names;
  const auto labels = detail::names_or_default(tf.label_names, static_cast<std::size_t>(std::max(tf.plan.max_label() + 1, 0)));
  const auto dot = tree::to_dot(tf.plan, features, labels);
  if (opt.out.empty()) {
    out << dot;
  } else {
    detail::write_file(opt.out, dot);
  }
  return kOk;
}

/// `evaluate`: metrics of a tree on a dataset, optionally against the oracle.
inline int cmd_evaluate(const Options& opt, std::ostream& out, std::ostream& /*err*/)
{
  const auto tf = detail::load_tree(opt.tree);
  const bool policy_task = opt.task == "policy";
  const auto ds = detail::load_for_tree(opt, tf, policy_task);
  const auto& plan = tf.plan;
  const int depth = opt.depth.value_or(plan.depth());

  oct::OCTConfig config;
  config.depth = depth;
  config.lambda = opt.lambda;
  config.mode = detail::parse_objective(opt.objective);

  Json metrics;
  metrics["samples"] = ds.size();
  metrics["branch_nodes"] = plan.branch_count();
  oracle::Evaluator evaluator;
  oracle::Filter filter;
  int num_labels = 0;

  if (policy_task) {
    const auto scores = detail::policy_scores(opt, ds);
    num_labels = scores.num_treatments();
    const auto value = policy::policy_value(plan, ds.X, scores);
    metrics["policy_value"] = value;
    metrics["assignment_counts"] = policy::assignment_counts(plan, ds.X, num_labels);
    policy::PolicyConfig pc;
    pc.budgets = detail::parse_budgets(opt.budgets, detail::names_or_default(ds.treatment_names, static_cast<std::size_t>(num_labels)), num_labels);
    metrics["within_budgets"] = policy::within_budgets(plan, ds.X, num_labels, pc);
    const double lambda = opt.lambda;
    evaluator = [&ds, scores, lambda](const tree::TreePlan& p) {
      return (1.0 - lambda) * policy::policy_value(p, ds.X, scores) - lambda * p.branch_count();
    };
    filter = [&ds, num_labels, pc](const tree::TreePlan& p) { return policy::within_budgets(p, ds.X, num_labels, pc); };
    metrics["objective"] = evaluator(plan);
  } else {
    data::require_valid(ds, data::Task::classification);
    num_labels = ds.num_classes();
    const auto predicted = tree::predict(plan, ds.X);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) correct += predicted[i] == ds.y[i] ? 1 : 0;
    metrics["correct"] = correct;
    metrics["accuracy"] = static_cast<double>(correct) / static_cast<double>(ds.size());
    metrics["objective"] = oct::evaluate_objective(plan, ds, config);
    evaluator = [&ds, config](const tree::TreePlan& p) { return oct::evaluate_objective(p, ds, config); };
    if (!ds.protected_group.empty()) {
      oct::FairnessSpec spec{oct::parse_fairness_type(opt.fairness_type), opt.fairness_bound,
                             detail::positive_class_code(opt.positive_class, ds)};
      metrics["disparity"] = oct::disparity(plan, ds, spec);
      if (opt.task == "fair") {
        filter = [&ds, spec](const tree::TreePlan& p) { return oct::disparity(p, ds, spec) <= spec.bound + 1e-9; };
      }
    }
    if (opt.task == "robust" || opt.epsilon || !opt.costs.empty()) {
      const auto spec = detail::robust_spec(opt, ds);
      if (auto d = spec.validate(ds); !d.empty()) throw ValidationError(std::move(d));
      metrics["worst_case_correct"] = oct::worst_case_correct(plan, ds, spec);
      if (opt.task == "robust") {
        const double lambda = opt.lambda;
        evaluator = [&ds, spec, lambda](const tree::TreePlan& p) {
          return (1.0 - lambda) * oct::worst_case_correct(p, ds, spec) - lambda * p.branch_count();
        };
        metrics["objective"] = evaluator(plan);
      }
    }
  }

  if (opt.oracle) {
    const auto best = oracle::best_plan(depth, static_cast<int>(ds.num_features()), num_labels, evaluator, filter);
    const double own = evaluator(plan);
    Json o;
    o["value"] = best.value;
    o["plan_value"] = own;
    o["plans_enumerated"] = best.enumerated;
    o["matches"] = std::abs(best.value - own) <= 1e-9 * std::max(1.0, std::abs(best.value));
    metrics["oracle"] = o;
  }
  const auto text = metrics.dump(2) + "\n";
  if (opt.out.empty()) {
    out << text;
  } else {
    detail::write_file(opt.out, text);
  }
  return kOk;
}

/// Parses arguments and dispatches to a subcommand. Never throws.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
  Options opt;
  opt.argv = args;
  CLI::App app{"Optimal decision trees by mixed-integer optimization", "odt"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const auto add_roles = [&](CLI::App* sub) {
    sub->add_option("--label", opt.label, "Label column");
    sub->add_option("--protected", opt.protected_attr, "Protected attribute column");
    sub->add_option("--legit", opt.legit, "Legitimate factor column (CSP)");
    sub->add_option("--treatment", opt.treatment, "Treatment column");
    sub->add_option("--outcome", opt.outcome, "Outcome column");
    sub->add_option("--weight", opt.weight, "Sample weight column");
    sub->add_option("--roles", opt.roles_file, "File of 'column = role' lines");
  };
  const auto add_task_options = [&](CLI::App* sub) {
    sub->add_option("--task", opt.task, "classify, fair, robust or policy")
        ->check(CLI::IsMember({"classify", "fair", "robust", "policy"}));
    sub->add_option("--lambda", opt.lambda, "Penalty per branch node, in [0, 1)");
    sub->add_option("--objective", opt.objective, "accuracy, weighted or worst_case");
    sub->add_option("--fairness-type", opt.fairness_type, "SP, CSP or EqOdds");
    sub->add_option("--fairness-bound", opt.fairness_bound, "Largest allowed disparity");
    sub->add_option("--positive-class", opt.positive_class, "Label counted as a positive prediction");
    sub->add_option("--costs", opt.costs, "CSV of per-sample feature flip costs");
    sub->add_option("--epsilon", opt.epsilon, "Per-sample adversary budget");
    sub->add_option("--scores", opt.scores, "CSV of per-sample treatment scores");
    sub->add_option("--method", opt.method, "IPW, DM or DR");
    sub->add_option("--alpha", opt.alpha, "Propensity smoothing");
    sub->add_option("--budget", opt.budgets, "Treatment budgets: 'k=C' items or a list in treatment order");
    add_roles(sub);
  };

  auto* fit = app.add_subcommand("fit", "Fit a tree and write manifest.json, tree.json and tree.dot");
  fit->add_option("--data", opt.data, "Training CSV")->required();
  fit->add_option("--depth", opt.depth, "Tree depth")->required();
  fit->add_option("--time-limit", opt.time_limit, "Seconds (default from ODT_TIME_LIMIT)");
  fit->add_option("--max-thresholds", opt.max_thresholds, "Thresholds per numeric column");
  fit->add_option("--out", opt.out, "Output directory");
  add_task_options(fit);

  auto* predict = app.add_subcommand("predict", "Predict with a tree file");
  predict->add_option("--tree", opt.tree, "Tree JSON")->required();
  predict->add_option("--data", opt.data, "Input CSV")->required();
  predict->add_option("--task", opt.task, "classify, fair, robust or policy");
  predict->add_option("--out", opt.out, "Output CSV (default standard output)");
  add_roles(predict);

  auto* visualize = app.add_subcommand("visualize", "Print a tree as DOT");
  visualize->add_option("--tree", opt.tree, "Tree JSON")->required();
  visualize->add_option("--out", opt.out, "Output file (default standard output)");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics of a tree on a dataset");
  evaluate->add_option("--tree", opt.tree, "Tree JSON")->required();
  evaluate->add_option("--data", opt.data, "Input CSV")->required();
  evaluate->add_option("--depth", opt.depth, "Depth searched by --oracle (default: the tree's)");
  evaluate->add_flag("--oracle", opt.oracle, "Also report the exhaustive-search optimum");
  evaluate->add_option("--out", opt.out, "Output file (default standard output)");
  add_task_options(evaluate);

  std::vector<const char*> argv{"odt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failing->help();
    return kUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(opt, out, err);
    if (predict->parsed()) return cmd_predict(opt, out, err);
    if (visualize->parsed()) return cmd_visualize(opt, out, err);
    return cmd_evaluate(opt, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ValidationError& e) {
    err << "error: invalid input\n";
    for (const auto& d : e.diagnostics()) err << "  " << d.to_string() << "\n";
    return kDataError;
  } catch (const ExtractionError& e) {
    err << "error: " << e.what() << "\n";
    return kSoftware;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kSoftware;
  }
}

}  // namespace odt::cli

#endif  // ODT_CLI_HPP
