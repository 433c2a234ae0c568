/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch_amalgamated.hpp>

#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "odt/tree/io.hpp"
#include "odt/tree/plan.hpp"
#include "support/oracles.hpp"

using namespace odt;
using namespace odt::tree;

namespace {

// Recursive-descent check of the DOT subset the emitter may use:
//   graph    : 'digraph' ID '{' stmt* '}'
//   stmt     : ('node' | 'edge') attrs ';' | ID ('->' ID)? attrs? ';'
//   attrs    : '[' (ID '=' ID (',' ID '=' ID)*)? ']'
// where ID is an identifier, a number or a double-quoted string.
class DotChecker {
 public:
  explicit DotChecker(std::string text) : s_(std::move(text)) {}

  bool valid()
  {
    try {
      expect_word("digraph");
      id();
      expect("{");
      while (peek() != '}') stmt();
      expect("}");
      skip();
      return pos_ == s_.size();
    } catch (const std::runtime_error&) {
      return false;
    }
  }

 private:
  void skip()
  {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek()
  {
    skip();
    if (pos_ >= s_.size()) throw std::runtime_error("eof");
    return s_[pos_];
  }
  void expect(const std::string& lit)
  {
    skip();
    if (s_.compare(pos_, lit.size(), lit) != 0) throw std::runtime_error("expected " + lit);
    pos_ += lit.size();
  }
  void expect_word(const std::string& w)
  {
    if (id() != w) throw std::runtime_error("expected " + w);
  }
  std::string id()
  {
    const char c = peek();
    if (c == '"') {
      std::string out;
      ++pos_;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        out.push_back(s_[pos_++]);
      }
      if (pos_ >= s_.size()) throw std::runtime_error("unterminated string");
      ++pos_;
      return out;
    }
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.')) ++pos_;
    if (start == pos_) throw std::runtime_error("expected id");
    return s_.substr(start, pos_ - start);
  }
  void attrs()
  {
    expect("[");
    if (peek() != ']') {
      for (;;) {
        id();
        expect("=");
        id();
        if (peek() != ',') break;
        expect(",");
      }
    }
    expect("]");
  }
  void stmt()
  {
    const auto name = id();
    if (name == "node" || name == "edge") {
      attrs();
    } else {
      skip();
      if (s_.compare(pos_, 2, "->") == 0) {
        expect("->");
        id();
      }
      if (peek() == '[') attrs();
    }
    expect(";");
  }

  std::string s_;
  std::size_t pos_ = 0;
};

TreePlan stump(int feature, int left, int right)
{
  TreePlan p(1);
  p.set(1, NodeRole::branch(feature));
  p.set(2, NodeRole::predict(left));
  p.set(3, NodeRole::predict(right));
  return p;
}

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Random valid plan: each live node predicts with probability 1/3 (always at
// leaves), pruned below predictions.
TreePlan random_plan(std::mt19937& rng, int depth, int F, int K)
{
  TreePlan p(depth);
  std::function<void(NodeId)> fill = [&](NodeId n) {
    if (!p.topology().is_branch(n) || rng() % 3 == 0) {
      p.set(n, NodeRole::predict(static_cast<int>(rng() % static_cast<unsigned>(K))));
      return;
    }
    p.set(n, NodeRole::branch(static_cast<int>(rng() % static_cast<unsigned>(F))));
    fill(Topology::left(n));
    fill(Topology::right(n));
  };
  fill(1);
  return p;
}

}  // namespace

TEST_CASE("topology arithmetic", "[tree]")
{
  const Topology t(2);
  CHECK(t.num_nodes() == 7);
  CHECK(t.branch_nodes() == std::vector<NodeId>{1, 2, 3});
  CHECK(t.leaf_nodes() == std::vector<NodeId>{4, 5, 6, 7});
  CHECK(Topology::ancestors(5) == std::vector<NodeId>{2, 1});
  CHECK(Topology::is_right_child(5));
  CHECK_FALSE(Topology::is_right_child(4));
}

TEST_CASE("route follows x[f] = 1 to the right", "[tree]")
{
  const auto p = stump(0, 0, 1);
  const std::vector<double> one{1.0, 0.0}, zero{0.0, 1.0};
  CHECK(route(p, one) == std::vector<NodeId>{1, 3});
  CHECK(route(p, zero) == std::vector<NodeId>{1, 2});
  const auto c = TreePlan::constant(1, 1);
  CHECK(route(c, one) == std::vector<NodeId>{1});
  CHECK(c.at(2).role == Role::pruned);
  CHECK(c.at(3).role == Role::pruned);
}

TEST_CASE("predict examples", "[tree]")
{
  const auto X = testing::xor_dataset().X;
  CHECK(predict(testing::xor_plan(), X) == std::vector<int>{0, 1, 1, 0});
  CHECK(predict(TreePlan::constant(2, 1), X) == std::vector<int>{1, 1, 1, 1});
  const data::FeatureMatrix two{{5.0, 0.0}, {5.0, 1.0}};
  CHECK(predict(stump(1, 0, 1), two) == std::vector<int>{0, 1});
}

TEST_CASE("validate_plan rejects structural violations", "[tree]")
{
  TreePlan hole(1);
  hole.set(1, NodeRole::branch(0));
  hole.set(2, NodeRole::predict(0));
  CHECK_FALSE(validate_plan(hole).empty());

  auto below = TreePlan::constant(1, 0);
  below.set(2, NodeRole::predict(1));
  CHECK_FALSE(validate_plan(below).empty());

  TreePlan leaf_branch(1);
  leaf_branch.set(1, NodeRole::branch(0));
  leaf_branch.set(2, NodeRole::branch(0));
  leaf_branch.set(3, NodeRole::predict(0));
  CHECK_FALSE(validate_plan(leaf_branch).empty());
  CHECK_THROWS_AS(require_valid(leaf_branch), StructuralError);
  CHECK(validate_plan(testing::xor_plan()).empty());
}

TEST_CASE("to_dot examples", "[tree]")
{
  const std::vector<std::string> labels{"no", "yes"};
  const std::vector<std::string> features{"age≤30"};
  const auto single = to_dot(TreePlan::constant(1, 1), features, labels);
  CHECK(single.find("n1 [label=\"yes\", shape=ellipse];") != std::string::npos);
  CHECK(single.find("->") == std::string::npos);

  const auto d1 = to_dot(stump(0, 0, 1), features, labels);
  CHECK(d1.find("n1 [label=\"age≤30\"]") != std::string::npos);
  CHECK(d1.find("n1 -> n2 [label=\"0\"];") != std::string::npos);
  CHECK(d1.find("n1 -> n3 [label=\"1\"];") != std::string::npos);
  std::size_t edges = 0;
  for (auto at = d1.find("->"); at != std::string::npos; at = d1.find("->", at + 2)) ++edges;
  CHECK(edges == 2);

  CHECK_THROWS_AS(to_dot(stump(3, 0, 1), features, labels), NamingError);
  const std::vector<std::string> quoted{"say \"hi\""};
  CHECK(DotChecker(to_dot(stump(0, 0, 1), quoted, labels)).valid());
}

TEST_CASE("XOR plan matches the golden DOT file", "[tree]")
{
  const std::vector<std::string> features{"x1", "x2"};
  const std::vector<std::string> labels{"0", "1"};
  const auto golden = read_file(std::string(ODT_TEST_GOLDEN) + "/xor_depth2.dot");
  REQUIRE_FALSE(golden.empty());
  CHECK(to_dot(testing::xor_plan(), features, labels) == golden);
}

TEST_CASE("JSON round trip and schema errors", "[tree]")
{
  const auto p = testing::xor_plan();
  CHECK(plan_from_json_text(to_json(p).dump()) == p);
  CHECK(plan_from_json_text(R"({"depth":1,"nodes":[{"id":1,"role":"predict","label":1}]})") == TreePlan::constant(1, 1));
  CHECK_THROWS_AS(plan_from_json_text(R"({"depth":1,"nodes":[)"), ParseError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"nodes":[]})"), ParseError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"depth":1,"nodes":[{"id":1,"role":"fly"}]})"), ParseError);
  CHECK_THROWS_AS(plan_from_json_text(R"({"depth":1,"nodes":[{"id":1,"role":"branch","feature":0}]})"),
                  StructuralError);
}

TEST_CASE("routing is total and pruned contents never matter", "[tree][property]")
{
  std::mt19937 rng(12);
  for (int t = 0; t < 200; ++t) {
    const int depth = 1 + static_cast<int>(rng() % 3);
    const auto plan = random_plan(rng, depth, 4, 3);
    REQUIRE(validate_plan(plan).empty());
    std::vector<double> x(4);
    for (auto& v : x) v = static_cast<double>(rng() % 2);
    const auto path = route(plan, x);
    CHECK(path.size() <= static_cast<std::size_t>(depth) + 1);
    CHECK(plan.at(path.back()).role == Role::predict);
    CHECK(predict_one(plan, x) == testing::walk(plan, x));

    // Scribble into pruned slots; prediction must not change.
    auto scribbled = plan;
    for (NodeId n = 1; n <= plan.topology().num_nodes(); ++n) {
      if (plan.at(n).role == Role::pruned) scribbled.at(n) = NodeRole::predict(2);
    }
    CHECK(predict_one(scribbled, x) == predict_one(plan, x));

    CHECK(plan_from_json(to_json(plan)) == plan);
    CHECK(DotChecker(to_dot(plan, default_feature_names(4), default_label_names(3))).valid());
  }
}
