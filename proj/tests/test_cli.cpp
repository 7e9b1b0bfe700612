// CLI smoke tests: subcommand wiring, exit codes, and artifact determinism.
// AG_CLI_PATH is injected by the build.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "actiongraph/alphabet.hpp"
#include "actiongraph/graph.hpp"
#include "actiongraph/io.hpp"

namespace fs = std::filesystem;
using namespace ag;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "ag_cli_tests";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("simulate -> sessionize -> graph produces a row-stochastic dump") {
  TempDir dir;
  REQUIRE(run_cli("simulate " + (dir / "sim") + " --users 120 --seed 7") == 0);
  REQUIRE(run_cli("sessionize " + (dir / "sim") + "/events.jsonl " + (dir / "sessions.jsonl")) ==
          0);
  REQUIRE(run_cli("graph " + (dir / "sessions.jsonl") + " " + (dir / "graphs")) == 0);

  // Re-read the dump and verify per-user row sums over probabilities.
  std::ifstream in(dir / "graphs" + std::string("/graph_static.csv"));
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "user_id,src,dst,prob,count");
  std::map<std::pair<std::string, std::string>, double> row_sums;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    REQUIRE(cells.size() == 5);
    row_sums[{cells[0], cells[1]}] += std::stod(cells[3]);
  }
  CHECK(!row_sums.empty());
  for (const auto& [key, total] : row_sums) {
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("missing input exits with the data error code") {
  TempDir dir;
  CHECK(run_cli("sessionize " + (dir / "absent.jsonl") + " " + (dir / "out.jsonl")) == 2);
  CHECK(run_cli("graph " + (dir / "absent.jsonl") + " " + (dir / "g")) == 2);
}

TEST_CASE("bad flags exit with the usage error code") {
  TempDir dir;
  CHECK(run_cli("sessionize") != 0);
  {
    std::ofstream csv(dir / "x.csv");
    csv << "user_id,a\nu0,1\nu1,2\nu2,3\n";
  }
  CHECK(run_cli("cluster " + (dir / "x.csv") + " " + (dir / "c") + " --k notanumber") == 1);
}

TEST_CASE("train twice with the same seed writes identical report files") {
  TempDir dir;
  REQUIRE(run_cli("simulate " + (dir / "sim") + " --users 90 --seed 3") == 0);
  const std::string events = dir / "sim" + std::string("/events.jsonl");
  REQUIRE(run_cli("train " + events + " " + (dir / "t1") +
                  " --model temporal_gcn_lstm --task trend --epochs 2 --seed 11") == 0);
  REQUIRE(run_cli("train " + events + " " + (dir / "t2") +
                  " --model temporal_gcn_lstm --task trend --epochs 2 --seed 11") == 0);
  CHECK(slurp(dir / "t1" + std::string("/checkpoint.json")) ==
        slurp(dir / "t2" + std::string("/checkpoint.json")));
  CHECK(slurp(dir / "t1" + std::string("/curve.csv")) ==
        slurp(dir / "t2" + std::string("/curve.csv")));
  CHECK(slurp(dir / "t1" + std::string("/manifest.json")) ==
        slurp(dir / "t2" + std::string("/manifest.json")));

  // eval reloads the checkpoint and reproduces a metric deterministically.
  REQUIRE(run_cli("eval " + (dir / "t1") + "/checkpoint.json " + events + " " + (dir / "e1") +
                  " --seed 11") == 0);
  REQUIRE(run_cli("eval " + (dir / "t2") + "/checkpoint.json " + events + " " + (dir / "e2") +
                  " --seed 11") == 0);
  CHECK(slurp(dir / "e1" + std::string("/metrics.csv")) ==
        slurp(dir / "e2" + std::string("/metrics.csv")));
}
