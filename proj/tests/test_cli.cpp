/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "odt/cli.hpp"
#include "odt/tree/io.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using odt::cli::run;
using Json = nlohmann::ordered_json;

namespace {

const std::string kData = ODT_TEST_DATA;
const std::string kGolden = ODT_TEST_GOLDEN;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args)
{
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text)
{
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class TempDir {
 public:
  TempDir()
  {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("odt_cli_" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string xor_tree_file(const TempDir& dir)
{
  auto j = odt::tree::to_json(odt::testing::xor_plan());
  j["feature_names"] = {"x1", "x2"};
  j["label_names"] = {"0", "1"};
  const auto path = dir / "xor_tree.json";
  spit(path, j.dump(2));
  return path;
}

std::string constant_tree_file(const TempDir& dir, int depth, int label)
{
  auto j = odt::tree::to_json(odt::tree::TreePlan::constant(depth, label));
  j["label_names"] = {"0", "1"};
  const auto path = dir / "constant.json";
  spit(path, j.dump(2));
  return path;
}

std::vector<std::string> column(const std::string& csv)
{
  std::istringstream in(csv);
  std::vector<std::string> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("fit with the fairness example parameters", "[cli]")
{
  TempDir dir;
  const auto r = invoke({"fit", "--task", "fair", "--data", kData + "/fair_toy.csv", "--depth", "2", "--lambda", "0.01",
                         "--fairness-type", "SP", "--fairness-bound", "1", "--positive-class", "1", "--out",
                         dir.path().string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto manifest = Json::parse(slurp(dir.path() / "manifest.json"));
  CHECK(manifest["task"] == "fair");
  CHECK(manifest["config"]["depth"] == 2);
  CHECK(manifest["config"]["lambda"] == 0.01);
  CHECK(manifest["config"]["fairness_type"] == "SP");
  CHECK(manifest["config"]["fairness_bound"] == 1.0);
  CHECK(manifest["config"]["positive_class"] == "1");
  CHECK(manifest["result"]["status"] == "optimal");
  CHECK(fs::exists(dir.path() / "tree.json"));
  CHECK(fs::exists(dir.path() / "tree.dot"));

  // A bound of one is slack, so the classify objective is the same.
  TempDir plain;
  REQUIRE(invoke({"fit", "--task", "classify", "--data", kData + "/fair_toy.csv", "--depth", "2", "--lambda", "0.01",
                  "--protected", "protected", "--legit", "legit_factor", "--out", plain.path().string()})
              .code == 0);
  const auto other = Json::parse(slurp(plain.path() / "manifest.json"));
  CHECK(manifest["result"]["objective"].get<double>() ==
        Catch::Approx(other["result"]["objective"].get<double>()).margin(1e-6));
}

TEST_CASE("fit on xor reaches four", "[cli]")
{
  TempDir dir;
  const auto r = invoke({"fit", "--task", "classify", "--data", kData + "/xor.csv", "--depth", "2", "--lambda", "0",
                         "--out", dir.path().string()});
  REQUIRE(r.code == 0);
  const auto manifest = Json::parse(slurp(dir.path() / "manifest.json"));
  CHECK(manifest["result"]["objective"] == 4.0);
  CHECK(manifest["metrics"]["accuracy"] == 1.0);
  CHECK(Json::parse(r.out)["status"] == "optimal");
}

TEST_CASE("missing depth is a usage error", "[cli]")
{
  const auto r = invoke({"fit", "--data", kData + "/xor.csv"});
  CHECK(r.code == 64);
  CHECK(r.err.find("--depth") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(invoke({}).code == 64);
  CHECK(invoke({"frobnicate"}).code == 64);
  CHECK(invoke({"fit", "--data", "x.csv", "--depth", "two"}).code == 64);
  CHECK(invoke({"fit", "--data", "x.csv", "--depth", "2", "--task", "cluster"}).code == 64);
}

TEST_CASE("predict", "[cli]")
{
  TempDir dir;
  const auto xor_tree = xor_tree_file(dir);
  const auto r = invoke({"predict", "--tree", xor_tree, "--data", kData + "/xor.csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out == "prediction\n0\n1\n1\n0\n");

  const auto constant = constant_tree_file(dir, 2, 1);
  const auto c = invoke({"predict", "--tree", constant, "--data", kData + "/xor.csv"});
  REQUIRE(c.code == 0);
  CHECK(column(c.out) == std::vector<std::string>(4, "1"));

  odt::tree::TreePlan far(1);
  far.set(1, odt::tree::NodeRole::branch(9));
  far.set(2, odt::tree::NodeRole::predict(0));
  far.set(3, odt::tree::NodeRole::predict(1));
  spit(dir / "far.json", odt::tree::to_json(far).dump());
  CHECK(invoke({"predict", "--tree", dir / "far.json", "--data", kData + "/xor.csv"}).code == 65);

  const auto written = invoke({"predict", "--tree", xor_tree, "--data", kData + "/xor.csv", "--out", dir / "p.csv"});
  CHECK(written.code == 0);
  CHECK(slurp(dir.path() / "p.csv") == r.out);
}

TEST_CASE("visualize", "[cli]")
{
  TempDir dir;
  const auto r = invoke({"visualize", "--tree", xor_tree_file(dir)});
  REQUIRE(r.code == 0);
  CHECK(r.out == slurp(kGolden + "/xor_depth2.dot"));

  const auto leaf = odt::tree::TreePlan::constant(1, 0);
  spit(dir / "leaf.json", odt::tree::to_json(leaf).dump());
  const auto one = invoke({"visualize", "--tree", dir / "leaf.json"});
  REQUIRE(one.code == 0);
  CHECK(one.out.find("n1 [label=\"0\", shape=ellipse];") != std::string::npos);
  CHECK(one.out.find("->") == std::string::npos);

  const auto text = slurp(xor_tree_file(dir));
  spit(dir / "cut.json", text.substr(0, text.size() / 2));
  CHECK(invoke({"visualize", "--tree", dir / "cut.json"}).code == 65);
  CHECK(invoke({"visualize", "--tree", dir / "absent.json"}).code == 74);
}

TEST_CASE("evaluate", "[cli]")
{
  TempDir dir;
  const auto xor_tree = xor_tree_file(dir);
  const auto r = invoke({"evaluate", "--tree", xor_tree, "--data", kData + "/xor.csv"});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["accuracy"] == 1.0);

  const auto sp = invoke({"evaluate", "--task", "fair", "--tree", constant_tree_file(dir, 2, 1), "--data",
                          kData + "/fair_toy.csv", "--fairness-type", "SP"});
  INFO(sp.err);
  REQUIRE(sp.code == 0);
  CHECK(Json::parse(sp.out)["disparity"] == 0.0);

  const auto o = invoke({"evaluate", "--tree", xor_tree, "--data", kData + "/xor.csv", "--oracle"});
  REQUIRE(o.code == 0);
  const auto j = Json::parse(o.out);
  CHECK(j["oracle"]["matches"] == true);
  CHECK(j["oracle"]["value"] == 4.0);
  CHECK(j["oracle"]["plans_enumerated"] == 202);

  CHECK(invoke({"evaluate", "--tree", xor_tree, "--data", kData + "/xor.csv", "--oracle", "--depth", "4"}).code == 65);
}

TEST_CASE("fit artifacts reproduce the manifest predictions", "[cli][property]")
{
  for (const std::string task : {"classify", "fair", "policy"}) {
    TempDir dir;
    std::vector<std::string> args{"fit", "--task", task, "--depth", "2", "--out", dir.path().string()};
    if (task == "policy") {
      args.insert(args.end(), {"--data", kData + "/policy_toy.csv", "--method", "DR"});
    } else {
      args.insert(args.end(), {"--data", kData + "/fair_toy.csv", "--lambda", "0.01"});
    }
    if (task == "fair") args.insert(args.end(), {"--fairness-bound", "0.2"});
    INFO(task);
    REQUIRE(invoke(args).code == 0);
    const auto manifest = Json::parse(slurp(dir.path() / "manifest.json"));
    const auto p = invoke({"predict", "--task", task, "--tree", dir / "tree.json", "--data",
                           task == "policy" ? kData + "/policy_toy.csv" : kData + "/fair_toy.csv"});
    REQUIRE(p.code == 0);
    CHECK(column(p.out) == manifest["predictions"].get<std::vector<std::string>>());
    CHECK(invoke({"visualize", "--tree", dir / "tree.json"}).out == slurp(dir.path() / "tree.dot"));
  }
}

TEST_CASE("exit codes follow terminal status", "[cli]")
{
  TempDir dir;
  const auto out = dir.path().string();
  // Budgets that cover no sample are infeasible.
  CHECK(invoke({"fit", "--task", "policy", "--data", kData + "/policy_toy.csv", "--depth", "1", "--budget", "0=0",
                "--budget", "1=0", "--out", out})
            .code == 3);
  CHECK(invoke({"fit", "--data", kData + "/xor.csv", "--depth", "2", "--lambda", "1.5", "--out", out}).code == 65);
  CHECK(invoke({"fit", "--data", dir / "absent.csv", "--depth", "2", "--out", out}).code == 74);
  CHECK(invoke({"fit", "--data", kData + "/xor.csv", "--depth", "2", "--label", "nope", "--out", out}).code == 65);
  CHECK(invoke({"fit", "--data", kData + "/xor.csv", "--depth", "2", "--time-limit", "0", "--out", out}).code == 2);
}

TEST_CASE("the installed binary behaves like the in-process entry point", "[cli]")
{
  TempDir dir;
  const std::string bin = ODT_BINARY;
  const auto shell = [](const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(shell(bin + " --version > " + (dir / "v.txt")) == 0);
  CHECK(slurp(dir.path() / "v.txt").find(odt::cli::kVersion) != std::string::npos);
  CHECK(shell(bin + " fit --data " + kData + "/xor.csv 2> " + (dir / "e.txt")) == 64);
  CHECK(shell(bin + " predict --tree " + xor_tree_file(dir) + " --data " + kData + "/xor.csv > " + (dir / "p.csv")) == 0);
  CHECK(slurp(dir.path() / "p.csv") == "prediction\n0\n1\n1\n0\n");
}
