#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "care/commands.hpp"
#include "care/io.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "care");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return care::cli::main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string without_timestamps(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\"") == std::string::npos) out += line + '\n';
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("care_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("simulate then fit converges") {
  const fs::path dir = scratch("sim");
  REQUIRE(run_cli({"simulate", "--out", dir.string(), "--seed", "3"}) == 0);
  for (const char* f : {"comparisons.csv", "covariates.csv", "truth.csv", "truth.json"}) {
    CHECK(fs::exists(dir / f));
  }
  REQUIRE(run_cli({"fit", "--comparisons", (dir / "comparisons.csv").string(),
                   "--covariates", (dir / "covariates.csv").string(), "--out",
                   dir.string()}) == 0);
  const Json fit = Json::parse(slurp(dir / "fit.json"));
  CHECK(fit["converged"].get<bool>());
  CHECK(fit["alpha"].size() == 200);
  CHECK(fit["beta"].size() == 5);
  CHECK(fit["items"][0] == "item000");
  CHECK(fit["provenance"]["version"] == care::cli::kVersion);
}

TEST_CASE("rank and infer outputs") {
  const fs::path dir = scratch("rank");
  REQUIRE(run_cli({"simulate", "--out", dir.string(), "--n", "40", "--d", "2",
                   "--p", "0.4", "--L", "8"}) == 0);
  const std::vector<std::string> inputs{
      "--comparisons", (dir / "comparisons.csv").string(), "--covariates",
      (dir / "covariates.csv").string(), "--out", dir.string()};
  auto with = [&](const char* cmd) {
    std::vector<std::string> a{cmd};
    a.insert(a.end(), inputs.begin(), inputs.end());
    return a;
  };
  REQUIRE(run_cli(with("rank")) == 0);
  std::istringstream rank(slurp(dir / "ranking.csv"));
  std::string line;
  std::getline(rank, line);
  CHECK(line.rfind("# care", 0) == 0);
  std::getline(rank, line);
  CHECK(line == "item,score1,score2,tau,rank1,rank2");
  std::size_t rows = 0;
  while (std::getline(rank, line)) {
    ++rows;
    const auto cells = care::io::split_csv_line(line);
    REQUIRE(cells.size() == 6);
    for (std::size_t k = 1; k <= 3; ++k) {
      const double x = std::strtod(cells[k].c_str(), nullptr);
      CHECK(care::io::format_double(x) == cells[k]);
    }
  }
  CHECK(rows == 40);

  REQUIRE(run_cli(with("infer")) == 0);
  std::istringstream inf(slurp(dir / "inference.csv"));
  std::getline(inf, line);
  std::getline(inf, line);
  CHECK(line == "kind,index,name,estimate,std_error,z_stat,p_value,ci_low,ci_high,level");
  rows = 0;
  while (std::getline(inf, line)) ++rows;
  CHECK(rows == 42);
}

TEST_CASE("repeat runs are identical apart from timestamps") {
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  REQUIRE(run_cli({"simulate", "--out", a.string(), "--n", "30", "--d", "1"}) == 0);
  REQUIRE(run_cli({"simulate", "--out", b.string(), "--n", "30", "--d", "1"}) == 0);
  CHECK(slurp(a / "comparisons.csv") == slurp(b / "comparisons.csv"));
  CHECK(without_timestamps(slurp(a / "truth.json")) ==
        without_timestamps(slurp(b / "truth.json")));
  for (const fs::path& dir : {a, b}) {
    REQUIRE(run_cli({"rank", "--comparisons", (a / "comparisons.csv").string(),
                     "--covariates", (a / "covariates.csv").string(), "--out",
                     dir.string()}) == 0);
  }
  CHECK(slurp(a / "ranking.csv") == slurp(b / "ranking.csv"));
  CHECK(without_timestamps(slurp(a / "fit.json")) ==
        without_timestamps(slurp(b / "fit.json")));
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run_cli({"fit", "--comparisons", (dir / "missing.csv").string()}) ==
        care::cli::kExitConfig);
  CHECK(run_cli({"fit", "--bogus-flag"}) == care::cli::kExitConfig);
  CHECK(run_cli({"explode"}) == care::cli::kExitConfig);
  CHECK(run_cli({"--help"}) == care::cli::kExitOk);

  write(dir / "bad.csv", "item_i,item_j,trials,wins_j\na,b,2,5\n");
  CHECK(run_cli({"fit", "--comparisons", (dir / "bad.csv").string(), "--out",
                 dir.string()}) == care::cli::kExitParse);

  write(dir / "split.csv", "item_i,item_j,trials,wins_j\na,b,2,1\nc,d,2,1\n");
  CHECK(run_cli({"fit", "--comparisons", (dir / "split.csv").string(), "--out",
                 dir.string()}) == care::cli::kExitConnectivity);
  CHECK_FALSE(fs::exists(dir / "fit.json"));

  write(dir / "ok.csv",
        "item_i,item_j,trials,wins_j\na,b,5,1\nb,c,5,4\na,c,5,2\nc,d,5,3\nb,d,5,1\n");
  CHECK(run_cli({"fit", "--comparisons", (dir / "ok.csv").string(), "--out",
                 dir.string(), "--max-iters", "1"}) == care::cli::kExitConvergence);
  CHECK_FALSE(fs::exists(dir / "fit.json"));

  write(dir / "const.csv", "item,x\na,1\nb,1\nc,1\nd,1\n");
  CHECK(run_cli({"fit", "--comparisons", (dir / "ok.csv").string(), "--covariates",
                 (dir / "const.csv").string(), "--out", dir.string()}) ==
        care::cli::kExitData);
  CHECK(run_cli({"fit", "--comparisons", (dir / "ok.csv").string(), "--out",
                 dir.string(), "--level", "1.5"}) == care::cli::kExitConfig);
  CHECK(run_cli({"fit", "--comparisons", (dir / "ok.csv").string(), "--out",
                 dir.string()}) == care::cli::kExitOk);
}

TEST_CASE("config files sit between defaults and flags") {
  const fs::path dir = scratch("config");
  write(dir / "run.ini", "seed = 9\nn = 25\nd = 1\nout = " + (dir / "f").string() + "\n");
  REQUIRE(run_cli({"simulate", "--config", (dir / "run.ini").string()}) == 0);
  Json truth = Json::parse(slurp(dir / "f" / "truth.json"));
  CHECK(truth["provenance"]["seed"] == 9);
  CHECK(truth["n"] == 25);
  REQUIRE(run_cli({"simulate", "--config", (dir / "run.ini").string(), "--seed", "4"}) == 0);
  truth = Json::parse(slurp(dir / "f" / "truth.json"));
  CHECK(truth["provenance"]["seed"] == 4);
  CHECK(truth["n"] == 25);

  write(dir / "typo.ini", "sed = 9\n");
  CHECK(run_cli({"simulate", "--config", (dir / "typo.ini").string()}) ==
        care::cli::kExitConfig);
}

TEST_CASE("experiment outputs do not depend on threads") {
  const fs::path a = scratch("exp_a"), b = scratch("exp_b");
  const std::vector<std::string> common{"experiment", "--experiment", "distribution",
                                        "--n", "30", "--d", "1", "--replications", "6",
                                        "--pairs", "0.5:4,0.9:10"};
  auto with = [&](const fs::path& out, const char* threads) {
    auto args = common;
    args.insert(args.end(), {"--out", out.string(), "--threads", threads});
    return args;
  };
  REQUIRE(run_cli(with(a, "1")) == 0);
  REQUIRE(run_cli(with(b, "8")) == 0);
  for (const char* f : {"records.csv", "summary.csv", "histograms.csv", "qq.csv"}) {
    CHECK(slurp(a / "experiment" / f) == slurp(b / "experiment" / f));
  }
  CHECK(without_timestamps(slurp(a / "experiment" / "result.json")) ==
        without_timestamps(slurp(b / "experiment" / "result.json")));

  setenv("CARE_THREADS", "3", 1);
  const fs::path c = scratch("exp_c");
  auto args = common;
  args.insert(args.end(), {"--out", c.string()});
  CHECK(run_cli(args) == 0);
  unsetenv("CARE_THREADS");
  CHECK(slurp(a / "experiment" / "records.csv") == slurp(c / "experiment" / "records.csv"));

  CHECK(run_cli({"experiment", "--experiment", "nope", "--out", c.string()}) ==
        care::cli::kExitConfig);
  CHECK(run_cli({"experiment", "--pairs", "0.5", "--out", c.string()}) ==
        care::cli::kExitConfig);
  CHECK(run_cli({"experiment", "--statistics", "bogus", "--out", c.string()}) ==
        care::cli::kExitConfig);
}
