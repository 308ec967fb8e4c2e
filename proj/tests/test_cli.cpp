// End-to-end checks of the command-line runner: exit codes, CSV shape,
// reproducibility, and the JSON sidecars.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string cli = DANE_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dane_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
  const int status = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("version subcommand") {
  CHECK(run_cli("version") == 0);
  CHECK(run_cli("") == 2);            // missing subcommand
  CHECK(run_cli("frobnicate") == 2);  // unknown subcommand
}

TEST_CASE("run writes a csv trace and a json sidecar") {
  TempDir tmp;
  const std::string out = (tmp.path / "trace").string();
  const int code = run_cli(
      "run --problem synthetic-ridge --algorithm dane --m 4 --n-total 1024 --d 10 --reg 0.01 "
      "--max-iters 30 --target-subopt 1e-9 --seed 3 --out " + out);
  CHECK(code == 0);

  const std::string csv = slurp(out + ".csv");
  std::istringstream lines(csv);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line.rfind("# config_hash=", 0) == 0);
  REQUIRE(std::getline(lines, line));
  CHECK(line == "iter,comm_rounds,objective,subopt,grad_norm,dist_to_opt,wall_ms");
  int rows = 0;
  long last_comm = -1;
  while (std::getline(lines, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string iter_s, comm_s;
    std::getline(fields, iter_s, ',');
    std::getline(fields, comm_s, ',');
    CHECK(std::stoi(iter_s) == rows - 1);
    last_comm = std::stol(comm_s);
    CHECK(line.find(';') == std::string::npos);  // '.' decimal separator, ',' delimiter
  }
  CHECK(rows >= 2);
  CHECK(last_comm == 2L * (rows - 1));  // DANE: two rounds per iteration

  json sidecar;
  std::ifstream jf(out + ".json");
  jf >> sidecar;
  CHECK(sidecar["config"]["algorithm"] == "dane");
  CHECK(sidecar["config"]["m"] == 4);
  CHECK(sidecar["converged"] == true);
  CHECK(sidecar["final_subopt"].get<double>() <= 1e-9);
  CHECK(sidecar.contains("contraction"));
  CHECK(sidecar["contraction"]["predicted"].get<double>() > 0.0);
  CHECK(sidecar["config_hash"].get<std::string>().size() > 0);
}

TEST_CASE("reruns are byte-identical") {
  TempDir tmp;
  const std::string a = (tmp.path / "a").string(), b = (tmp.path / "b").string();
  const std::string args =
      "run --problem synthetic-ridge --m 2 --n-total 256 --d 6 --max-iters 10 --seed 5 --out ";
  REQUIRE(run_cli(args + a) == 0);
  REQUIRE(run_cli(args + b) == 0);
  CHECK(slurp(a + ".csv") == slurp(b + ".csv"));
}

TEST_CASE("one-shot algorithms emit a single estimate with one round") {
  TempDir tmp;
  for (const std::string alg : {"osa", "osa-bc"}) {
    const std::string out = (tmp.path / alg).string();
    REQUIRE(run_cli("run --problem synthetic-ridge --algorithm " + alg +
                    " --m 4 --n-total 512 --d 8 --seed 2 --out " + out) == 0);
    json sidecar;
    std::ifstream jf(out + ".json");
    jf >> sidecar;
    CHECK(sidecar["comm_rounds"] == 1);
  }
}

TEST_CASE("config errors exit 2 without output") {
  TempDir tmp;
  const std::string out = (tmp.path / "bad").string();
  CHECK(run_cli("run --mu -1 --out " + out) == 2);
  CHECK(run_cli("run --algorithm warp --out " + out) == 2);
  CHECK(run_cli("run --problem mystery --out " + out) == 2);
  CHECK(run_cli("run --m 0 --out " + out) == 2);
  CHECK_FALSE(fs::exists(out + ".csv"));
}

TEST_CASE("missing data file exits 4") {
  TempDir tmp;
  CHECK(run_cli("run --problem libsvm --data " + (tmp.path / "nope.txt").string() + " --out " +
                (tmp.path / "x").string()) == 4);
}

TEST_CASE("divergence exits 3 but still writes the trace") {
  TempDir tmp;
  const std::string out = (tmp.path / "div").string();
  CHECK(run_cli("run --problem synthetic-ridge --algorithm dgd --stepsize 50 --m 2 --n-total 128 "
                "--d 5 --max-iters 50 --seed 7 --out " + out) == 3);
  CHECK(fs::exists(out + ".csv"));
  json sidecar;
  std::ifstream jf(out + ".json");
  jf >> sidecar;
  CHECK(sidecar["diverged"] == true);
}

TEST_CASE("config file plus flag overrides") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "exp.ini";
  {
    std::ofstream out(cfg);
    out << "[run]\nproblem=synthetic-ridge\nm=2\nn-total=256\nd=6\nmax-iters=5\nseed=9\n";
  }
  const std::string out1 = (tmp.path / "cfg1").string();
  REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out1) == 0);
  json s1;
  std::ifstream(out1 + ".json") >> s1;
  CHECK(s1["config"]["m"] == 2);
  // a flag on the command line wins over the file
  const std::string out2 = (tmp.path / "cfg2").string();
  REQUIRE(run_cli("run --config " + cfg.string() + " --m 4 --out " + out2) == 0);
  json s2;
  std::ifstream(out2 + ".json") >> s2;
  CHECK(s2["config"]["m"] == 4);
}

TEST_CASE("sweep writes per-value traces and a summary") {
  TempDir tmp;
  const std::string out = (tmp.path / "sw").string();
  REQUIRE(run_cli("sweep --axis n_total --values 256 512 --problem synthetic-ridge --m 2 --d 6 "
                  "--max-iters 20 --target-subopt 1e-8 --seed 4 --out " + out) == 0);
  CHECK(fs::exists(out + "_n_total_256.csv"));
  CHECK(fs::exists(out + "_n_total_512.json"));
  const std::string summary = slurp(out + "_summary.csv");
  CHECK(summary.find("value,iters_to_target,final_subopt,predicted_contraction") !=
        std::string::npos);
  CHECK(summary.find("\n256,") != std::string::npos);
  CHECK(summary.find("\n512,") != std::string::npos);
  CHECK(run_cli("sweep --axis bogus --values 1 --out " + out) == 2);
  CHECK(run_cli("sweep --axis m --out " + out) == 2);  // no values
}

TEST_CASE("lowbound reports the scalar study") {
  TempDir tmp;
  const std::string out = (tmp.path / "lb").string();
  REQUIRE(run_cli("lowbound --n 100 --m-values 1 4 --trials 200 --seed 1 --bias-corrected --out " +
                  out) == 0);
  const std::string csv = slurp(out + ".csv");
  CHECK(csv.find("mean_single_machine_erm") != std::string::npos);
  CHECK(csv.find("-0.5671432904") != std::string::npos);  // wstar column
  json j;
  std::ifstream(out + ".json") >> j;
  REQUIRE(j["reports"].size() == 2);
  CHECK(j["reports"][0]["m"] == 1);
  CHECK(j["reports"][0]["mean_single_machine_erm"].get<double>() < -1.0);
  CHECK(j.contains("bias_corrected"));
  CHECK(j["bias_corrected"]["mean_combined"].get<double>() < 0.0);
  CHECK(run_cli("lowbound --trials 10 --out " + out) == 2);
}

TEST_CASE("default output directory comes from the environment") {
  TempDir tmp;
  const std::string cmd = "DANE_OUT_DIR=" + tmp.path.string() + " " + cli +
                          " run --problem synthetic-ridge --m 2 --n-total 128 --d 4 --max-iters 3 "
                          "--seed 1 --out envtest >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(tmp.path / "envtest.csv"));
}
