// End-to-end checks of the fqr binary: exit codes, golden outputs and the
// determinism contract. The binary path arrives via FQR_BINARY.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fqr/dataset.hpp"
#include "fqr/simulation.hpp"

using namespace fqr;

namespace {

std::string binary_path() {
  const char* env = std::getenv("FQR_BINARY");
  REQUIRE(env != nullptr);
  return env;
}

int run(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = binary_path() + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file;
  cmd += " 2> /dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  std::string cov = "cli_cov.csv";
  std::string resp = "cli_resp.csv";
  ~Workspace() {
    std::remove(cov.c_str());
    std::remove(resp.c_str());
  }

  void write_seeded_dataset(double gamma, Index n, std::uint64_t seed) {
    SimConfig config;
    config.n = n;
    config.gamma = gamma;
    config.sigma = 1.0;
    config.seed = seed;
    GeneratedData gd = generate_dataset(config, 0);
    write_dataset(gd.data, cov, resp);
  }
};

}  // namespace

TEST_CASE("test command on a seeded null dataset reproduces the golden p-value") {
  Workspace ws;
  ws.write_seeded_dataset(0.0, 400, 515);
  int code = run("test --covariates " + ws.cov + " --responses " + ws.resp +
                     " --levels 0.1,0.2,0.3,0.4 --out cli_wald.json",
                 "cli_stdout.txt");
  CHECK(code == 0);
  std::string out = slurp("cli_stdout.txt");
  CHECK(out.find("p_value") != std::string::npos);
  std::string json = slurp("cli_wald.json");
  // golden value frozen from the first verified run of this seeded dataset
  CHECK(json.find("\"p_value\": 0.3004651046") != std::string::npos);
  CHECK(json.find("\"df\": 9") != std::string::npos);
  std::remove("cli_wald.json");
  std::remove("cli_stdout.txt");
}

TEST_CASE("test command rejects under a strong alternative") {
  Workspace ws;
  ws.write_seeded_dataset(1.5, 1000, 99);
  int code = run("test --covariates " + ws.cov + " --responses " + ws.resp +
                     " --levels 0.1,0.2,0.3,0.4 --out cli_wald2.json",
                 "cli_stdout2.txt");
  CHECK(code == 0);
  std::string json = slurp("cli_wald2.json");
  auto pos = json.find("\"p_value\": ");
  REQUIRE(pos != std::string::npos);
  double p = std::stod(json.substr(pos + 11));
  CHECK(p < 0.01);
  std::remove("cli_wald2.json");
  std::remove("cli_stdout2.txt");
}

TEST_CASE("missing files map to exit code 2") {
  CHECK(run("test --covariates nope.csv --responses nada.csv") == 2);
}

TEST_CASE("simulate runs are byte-identical across invocations and workers") {
  std::string base =
      "simulate type1 --n 120 --m 40 --sigma 1 --levels 0.2,0.4 --reps 6 --seed 11 ";
  CHECK(run(base + "--workers 1 --out cli_a.csv", "/dev/null") == 0);
  CHECK(run(base + "--workers 1 --out cli_b.csv", "/dev/null") == 0);
  CHECK(run(base + "--workers 8 --out cli_c.csv", "/dev/null") == 0);
  std::string a = slurp("cli_a.csv");
  CHECK(!a.empty());
  CHECK(a == slurp("cli_b.csv"));
  CHECK(a == slurp("cli_c.csv"));
  std::remove("cli_a.csv");
  std::remove("cli_b.csv");
  std::remove("cli_c.csv");
}

TEST_CASE("composite with one level matches the single-level fit") {
  Workspace ws;
  ws.write_seeded_dataset(0.0, 200, 77);
  CHECK(run("composite --covariates " + ws.cov + " --responses " + ws.resp +
                " --levels 0.5 --method qae --out cli_one.json",
            "/dev/null") == 0);
  std::string json = slurp("cli_one.json");
  CHECK(json.find("\"method\": \"rq\"") != std::string::npos);
  std::remove("cli_one.json");
}

TEST_CASE("invalid simulate config maps to exit code 2") {
  CHECK(run("simulate power --gamma 0 --n-list 100 --reps 2 --seed 1") == 2);
  CHECK(run("simulate type1 --n 50 --levels 0.9,0.1 --reps 2 --seed 1") == 2);
}
