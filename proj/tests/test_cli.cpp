#include <catch2/catch_amalgamated.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <conjlab/cli.hpp>

#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using conjlab::json;

namespace {

namespace fs = std::filesystem;

const fs::path& temp_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("conjlab-cli-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string fresh_path(const std::string& stem) {
  static int counter = 0;
  return (temp_dir() / (stem + "-" + std::to_string(counter++))).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Temporarily points a C stdio descriptor at a file so CLI output does not
// interleave with the test reporter.
class RedirectFd {
 public:
  RedirectFd(int fd, const std::string& path) : fd_(fd) {
    std::fflush(nullptr);
    saved_ = ::dup(fd_);
    int target = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    ::dup2(target, fd_);
    ::close(target);
  }
  ~RedirectFd() {
    std::fflush(nullptr);
    ::dup2(saved_, fd_);
    ::close(saved_);
  }

 private:
  int fd_;
  int saved_;
};

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "conjlab");
  std::string out_path = fresh_path("stdout");
  std::string err_path = fresh_path("stderr");
  int code;
  {
    RedirectFd out_guard(1, out_path);
    RedirectFd err_guard(2, err_path);
    code = conjlab::cli::run_cli(args);
  }
  return {code, read_file(out_path), read_file(err_path)};
}

}  // namespace

TEST_CASE("geometric preset reports the closed-form partition values") {
  std::string out = fresh_path("geom");
  RunResult r = run({"series", "--preset", "geom", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"status\":\"ok\"") != std::string::npos);
  CHECK(r.err.empty());

  json rep = json::parse(read_file(out));
  CHECK(rep["command"] == "series");
  CHECK_THAT(rep["log_partition"].get<double>(), WithinAbs(oracle::kLn2, 1e-12));
  CHECK_THAT(rep["mean_index"].get<double>(), WithinAbs(1.0, 1e-9));
  CHECK_THAT(rep["maximizer_head"][0].get<double>(), WithinAbs(0.5, 1e-12));
}

TEST_CASE("bare parameter objects run without a command wrapper") {
  std::string cfg = fresh_path("bare");
  write_file(cfg, R"({"N":2,"c":[0.0,0.0,0.0],"rho":0.5})");
  std::string out = fresh_path("bare-out");
  RunResult r = run({"series", "--config", cfg, "--out", out});
  REQUIRE(r.code == 0);
  json rep = json::parse(read_file(out));
  CHECK_THAT(rep["log_partition"].get<double>(), WithinAbs(std::log(1.75), 1e-12));
}

TEST_CASE("verification runs are reproducible per seed") {
  std::string cfg = fresh_path("verify");
  write_file(cfg, R"({"command":"verify","params":{"N":1,"c":[0.0,0.0],"phi":[-0.7],)"
                  R"("system":{"map":[0],"p":1,"states":1},)"
                  R"("options":{"gap_probes":20,"bruteforce_max_dim":0}}})");
  std::string a = fresh_path("seed-a");
  std::string b = fresh_path("seed-b");
  std::string c = fresh_path("seed-c");
  REQUIRE(run({"verify", "--config", cfg, "--seed", "5", "--out", a}).code == 0);
  REQUIRE(run({"verify", "--config", cfg, "--seed", "5", "--out", b}).code == 0);
  REQUIRE(run({"verify", "--config", cfg, "--seed", "6", "--out", c}).code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(a) != read_file(c));

  json rep = json::parse(read_file(a));
  CHECK(rep["fenchel_young_min_gap"].get<double>() >= -1e-8);
  CHECK(rep["bruteforce_max_discrepancy"].is_null());
  CHECK(rep["probes"].size() == 20);
}

TEST_CASE("a seed flag takes precedence over the config seed") {
  std::string cfg = fresh_path("seeded");
  write_file(cfg, R"({"command":"verify","params":{"N":1,"c":[0.0,0.0],"phi":[-0.7],)"
                  R"("system":{"map":[0],"p":1,"states":1},)"
                  R"("options":{"gap_probes":20,"bruteforce_max_dim":0}},"seed":11})");
  std::string a = fresh_path("prec-a");
  std::string b = fresh_path("prec-b");
  std::string c = fresh_path("prec-c");
  REQUIRE(run({"verify", "--config", cfg, "--out", a}).code == 0);
  REQUIRE(run({"verify", "--config", cfg, "--seed", "11", "--out", b}).code == 0);
  REQUIRE(run({"verify", "--config", cfg, "--seed", "12", "--out", c}).code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(a) != read_file(c));
}

TEST_CASE("config fallbacks supply the format and output path") {
  std::string out = fresh_path("fallback-out");
  std::string cfg = fresh_path("fallback");
  write_file(cfg, std::string(R"({"command":"series","params":{"N":2,"c":"zeros","rho":0.5},)") +
                      R"("format":"csv","output_path":")" + out + R"("})");
  RunResult r = run({"series", "--config", cfg});
  REQUIRE(r.code == 0);
  std::string body = read_file(out);
  REQUIRE(body.rfind("key,value\n", 0) == 0);
  CHECK(body.find("log_partition,") != std::string::npos);
  CHECK(body.find("mean_index,") != std::string::npos);
}

TEST_CASE("csv rendering round-trips the partition value") {
  std::string out = fresh_path("csv");
  REQUIRE(run({"series", "--preset", "geom", "--format", "csv", "--out", out}).code == 0);
  std::istringstream body(read_file(out));
  std::string line;
  REQUIRE(std::getline(body, line));
  REQUIRE(line == "key,value");
  double lp = conjlab::kPosInf;
  while (std::getline(body, line)) {
    if (line.rfind("log_partition,", 0) == 0)
      lp = conjlab::parse_real(line.substr(line.find(',') + 1));
  }
  CHECK_THAT(lp, WithinAbs(oracle::kLn2, 1e-12));
}

TEST_CASE("configuration mistakes exit with status one") {
  SECTION("command mismatch") {
    std::string cfg = fresh_path("mismatch");
    write_file(cfg, R"({"command":"entropy","params":{"op":"neg_entropy","t":[1.0]}})");
    RunResult r = run({"series", "--config", cfg});
    CHECK(r.code == 1);
    CHECK(r.err.find("does not match") != std::string::npos);
  }
  SECTION("nonpositive radius") {
    std::string cfg = fresh_path("badrho");
    write_file(cfg, R"({"command":"series","params":{"N":2,"c":"zeros","rho":-1.0}})");
    RunResult r = run({"series", "--config", cfg});
    CHECK(r.code == 1);
    CHECK(r.err.find("NonPositiveRho") != std::string::npos);
  }
  SECTION("unknown preset") {
    CHECK(run({"series", "--preset", "no-such-thing"}).code == 1);
  }
  SECTION("config and preset together") {
    std::string cfg = fresh_path("both");
    write_file(cfg, R"({"command":"series","params":{"N":2,"c":"zeros","rho":0.5}})");
    CHECK(run({"series", "--config", cfg, "--preset", "geom"}).code == 1);
  }
  SECTION("neither config nor preset") {
    RunResult r = run({"series"});
    CHECK(r.code == 1);
    CHECK(r.err.find("provide --config or --preset") != std::string::npos);
  }
  SECTION("unknown format") {
    CHECK(run({"series", "--preset", "geom", "--format", "xml"}).code == 1);
  }
  SECTION("thread count out of range") {
    CHECK(run({"series", "--preset", "geom", "--threads", "300"}).code == 1);
  }
  SECTION("malformed json") {
    std::string cfg = fresh_path("notjson");
    write_file(cfg, "{not json");
    RunResult r = run({"series", "--config", cfg});
    CHECK(r.code == 1);
    CHECK(r.err.find("not valid JSON") != std::string::npos);
  }
  SECTION("missing config file") {
    CHECK(run({"series", "--config", fresh_path("missing") + ".json"}).code == 1);
  }
  SECTION("unwritable output path") {
    std::string cfg = fresh_path("unwritable");
    write_file(cfg, R"({"command":"series","params":{"N":2,"c":"zeros","rho":0.5}})");
    RunResult r = run({"series", "--config", cfg, "--out",
                       (temp_dir() / "no-such-dir" / "report.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("cannot write") != std::string::npos);
  }
}

TEST_CASE("system validation points at the offending map entry") {
  std::string cfg = fresh_path("badmap");
  write_file(cfg, R"({"command":"dynsys","params":{"op":"spectral_exponent","phi":[0.0,0.0],)"
                  R"("system":{"map":[0,5],"p":1,"states":2}}})");
  RunResult r = run({"dynsys", "--config", cfg});
  CHECK(r.code == 1);
  CHECK(r.err.find("index 1") != std::string::npos);

  std::string cfg_p = fresh_path("badp");
  write_file(cfg_p, R"({"command":"dynsys","params":{"op":"spectral_exponent","phi":[0.0,0.0],)"
                    R"("system":{"map":[0,1],"p":0.5,"states":2}}})");
  CHECK(run({"dynsys", "--config", cfg_p}).code == 1);
}

TEST_CASE("domain errors exit with status two") {
  SECTION("vanishing spectral gap in verification") {
    std::string cfg = fresh_path("flatphi");
    write_file(cfg, R"({"command":"verify","params":{"N":2,"c":"zeros","phi":[0.0,0.0],)"
                    R"("system":{"map":[1,0],"p":1,"states":2}}})");
    RunResult r = run({"verify", "--config", cfg});
    CHECK(r.code == 2);
    CHECK(r.err.find("DomainViolation") != std::string::npos);
  }
  SECTION("critical operator series") {
    std::string cfg = fresh_path("critical");
    write_file(cfg, R"({"command":"dynsys","params":{"op":"operator_series","N":2,"c":"zeros",)"
                    R"("phi":[0.0,0.0],"system":{"map":[1,0],"p":1,"states":2}}})");
    RunResult r = run({"dynsys", "--config", cfg});
    CHECK(r.code == 2);
    CHECK(r.err.find("RadiusNotSubcritical") != std::string::npos);
  }
}

TEST_CASE("conjugate sweeps are identical across thread counts") {
  std::string cfg = fresh_path("threads");
  write_file(cfg,
             R"({"command":"conjugate","params":{)"
             R"("axes":[{"lo":-4,"hi":4,"count":41},{"lo":-4,"hi":4,"count":41}],)"
             R"("dual_axes":[{"lo":-1,"hi":1,"count":21},{"lo":-1,"hi":1,"count":21}],)"
             R"("f":{"builtin":"half_square"}}})");
  std::string one = fresh_path("one-thread");
  std::string four = fresh_path("four-threads");
  REQUIRE(run({"conjugate", "--config", cfg, "--threads", "1", "--out", one}).code == 0);
  REQUIRE(run({"conjugate", "--config", cfg, "--threads", "4", "--out", four}).code == 0);
  CHECK(read_file(one) == read_file(four));
}

TEST_CASE("bundled log-exponential scenario reproduces the entropy values") {
  std::string out = fresh_path("logexp");
  REQUIRE(run({"conjugate", "--preset", "logexp-remark", "--threads", "4", "--out", out}).code ==
          0);
  json rep = json::parse(read_file(out));
  REQUIRE(rep["header"]["axes"].size() == 2);
  REQUIRE(rep["header"]["axes"][0]["count"].get<std::size_t>() == 41);
  REQUIRE(rep["values"].size() == 41 * 41);
  double mid = rep["values"][20 * 41 + 20].get<double>();
  CHECK_THAT(mid, WithinAbs(-oracle::kLn2, 2e-2));
  double quarter = rep["values"][10 * 41 + 30].get<double>();
  CHECK_THAT(quarter, WithinAbs(oracle::kEntropyQuarter, 2e-2));
}

TEST_CASE("preset files mirror the built-in table byte for byte") {
  for (const auto& [name, text] : conjlab::cli::preset_table()) {
    std::string path = std::string(CONJLAB_PRESET_DIR) + "/" + name + ".json";
    INFO(path);
    CHECK(read_file(path) == text + "\n");
  }
}
