/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <sstream>

#include "odt/mip/lp_format.hpp"
#include "odt/mip/solver.hpp"
#include "odt/oct/flow.hpp"
#include "support/oracles.hpp"

using namespace odt;
using namespace odt::mip;

namespace {

std::size_t count_lines_starting(const std::string& text, const std::string& prefix)
{
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0 ? 1 : 0;
  return n;
}

std::string section(const std::string& text, const std::string& header, const std::string& next)
{
  const auto b = text.find(header + "\n");
  const auto e = text.find(next + "\n", b);
  return text.substr(b + header.size() + 1, e - b - header.size() - 1);
}

}  // namespace

TEST_CASE("minimal model writes one objective line and one bound line", "[lp]")
{
  Model m;
  m.set_objective_coef(m.add_variable(0.0, 1.0, VarKind::continuous, "x"), 1.0);
  const auto text = to_lp_string(m);
  CHECK(count_lines_starting(text, " obj:") == 1);
  CHECK(section(text, "Bounds", "End") == " 0 <= x <= 1\n");
  CHECK(section(text, "Subject To", "Bounds").empty());
}

TEST_CASE("knapsack survives a round trip with the same optimum", "[lp]")
{
  Model m;
  const auto a = m.add_binary("a");
  const auto b = m.add_binary("b");
  m.add_constraint({{a, 2.0}, {b, 2.0}}, RowSense::less_equal, 2.0, "cap");
  m.set_objective_coef(a, 3.0);
  m.set_objective_coef(b, 2.0);
  const auto back = read_lp_string(to_lp_string(m));
  CHECK(back.num_variables() == 2);
  CHECK(back.num_binaries() == 2);
  CHECK(solve_mip(back).objective == 3.0);
}

TEST_CASE("row tags appear verbatim as row names", "[lp]")
{
  Model m;
  const auto x = m.add_binary("x");
  m.add_constraint({{x, 1.0}}, RowSense::less_equal, 1.0, "flow_root_i3");
  const auto text = to_lp_string(m);
  CHECK(text.find(" flow_root_i3: ") != std::string::npos);
  CHECK(read_lp_string(text).constraints()[0].tag == "flow_root_i3");
}

TEST_CASE("illegal or missing names are replaced deterministically", "[lp]")
{
  Model m;
  m.add_variable(-kInf, kInf, VarKind::continuous, "bad name");
  m.add_variable(-2.0, 5.0);
  m.add_constraint({{0, 1.0}}, RowSense::greater_equal, -3.0, "x-y");
  m.set_sense(ObjSense::minimize);
  const auto text = to_lp_string(m);
  CHECK(text == to_lp_string(m));
  const auto back = read_lp_string(text);
  CHECK(back.sense() == ObjSense::minimize);
  CHECK(back.variables()[0].lower == -kInf);
  CHECK(back.variables()[1].lower == -2.0);
  CHECK(back.variables()[1].upper == 5.0);
  CHECK(back.constraints()[0].sense == RowSense::greater_equal);
}

TEST_CASE("reader accepts common spellings and rejects garbage", "[lp]")
{
  const auto m = read_lp_string("max\n 2 x + y\nst\n c1: x + y <= 1\n y >= 0.5\nbounds\n x <= 4\nend\n");
  CHECK(m.num_variables() == 2);
  CHECK(m.num_constraints() == 2);
  CHECK(solve_lp(m).objective == Catch::Approx(1.5));

  CHECK_THROWS_AS(read_lp_string("hello\n"), ParseError);
  CHECK_THROWS_AS(read_lp_string("max\n x\nst\n c: x <=\nend\n"), ParseError);
  CHECK_THROWS_AS(read_lp_string("max\n x\ngenerals\n x\nend\n"), ParseError);
}

TEST_CASE("round trip preserves optima of random models", "[lp][property]")
{
  std::mt19937 rng(31);
  for (int t = 0; t < 30; ++t) {
    const auto m = testing::random_binary_mip(rng);
    const auto back = read_lp_string(to_lp_string(m));
    const auto a = solve_mip(m);
    const auto b = solve_mip(back);
    INFO("model " << t);
    CHECK(a.status == b.status);
    if (a.has_solution()) CHECK(a.objective == b.objective);
    CHECK(to_lp_string(back) == to_lp_string(m));
  }
  for (int t = 0; t < 20; ++t) {
    const auto m = testing::random_box_lp(rng);
    const auto a = solve_lp(m);
    const auto b = solve_lp(read_lp_string(to_lp_string(m)));
    CHECK(a.status == b.status);
    if (a.has_solution()) CHECK(b.objective == Catch::Approx(a.objective).margin(1e-9));
  }
}

TEST_CASE("flow model round-trips through a file", "[lp]")
{
  auto ds = testing::xor_dataset();
  oct::OCTConfig cfg;
  cfg.depth = 1;
  Model m;
  oct::build_flow_model(m, ds, cfg);
  const auto path = std::filesystem::temp_directory_path() / "odt_test_flow.lp";
  write_lp_file(m, path);
  const auto back = read_lp_file(path);
  std::filesystem::remove(path);
  CHECK(back.num_variables() == m.num_variables());
  CHECK(back.num_constraints() == m.num_constraints());
  CHECK(solve_mip(back).objective == solve_mip(m).objective);
  CHECK_THROWS_AS(read_lp_file(path), IoError);
}
