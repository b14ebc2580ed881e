#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "delayfactor/core.hpp"
#include "delayfactor/io.hpp"

#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using delayfactor::Rational;
using nlohmann::json;
namespace core = delayfactor::core;
namespace io = delayfactor::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("delayfactor-cli-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int next_id() {
  static int n = 0;
  return ++n;
}

/// Runs the binary with the given arguments, captures stdout+stderr into
/// `output`, and returns the exit code.
int run_cli(const std::string& args, std::string* output = nullptr) {
  fs::path out = scratch() / ("out-" + std::to_string(next_id()) + ".txt");
  std::string command =
      std::string(CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  int status = std::system(command.c_str());
  REQUIRE(status != -1);
  if (output) {
    std::ifstream in(out);
    std::stringstream buffer;
    buffer << in.rdbuf();
    *output = buffer.str();
  }
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& row) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : row) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

/// Unicast instance used across cases; generated once through the binary so
/// the gen path is exercised too.
fs::path unicast_instance() {
  static fs::path path = [] {
    fs::path p = scratch() / "uni.json";
    int code = run_cli("gen --profile unicast-random --seed 5 --count 6 --out " +
                       p.string());
    REQUIRE(code == 0);
    return p;
  }();
  return path;
}

/// Tiny broadcast instance with a known optimum of exactly 1.
fs::path broadcast_instance() {
  static fs::path path = [] {
    core::Instance inst;
    inst.mode = core::Mode::Broadcast;
    inst.machines = 1;
    inst.pages.lengths["p"] = 1;
    core::Request a, b;
    a.id = "a"; a.arrival = 0; a.deadline = 2; a.page = "p"; a.index = 0;
    b.id = "b"; b.arrival = 1; b.deadline = 3; b.page = "p"; b.index = 1;
    inst.requests = {a, b};
    fs::path p = scratch() / "bc.json";
    io::save_instance(inst, p.string());
    return p;
  }();
  return path;
}

}  // namespace

// ---------------------------------------------------------------------------
// gen

TEST_CASE("gen is deterministic and its output validates") {
  fs::path first = scratch() / "gen-a.json";
  fs::path second = scratch() / "gen-b.json";
  std::string args = "gen --profile broadcast-random --seed 77 --count 9 "
                     "--pages 3 --page-lengths 1,2 --out ";
  CHECK(run_cli(args + first.string()) == 0);
  CHECK(run_cli(args + second.string()) == 0);
  CHECK(slurp(first) == slurp(second));
  auto inst = io::load_instance(first.string());
  CHECK(core::validate(inst).empty());
}

TEST_CASE("gen rejects bad specs with a usage error") {
  std::string out;
  CHECK(run_cli("gen --profile no-such --out /dev/null", &out) == 1);
  CHECK(json::parse(out).at("error").at("kind") == json("usage"));
}

// ---------------------------------------------------------------------------
// run

TEST_CASE("run reports the exact delay factor of a trivial instance") {
  core::Instance inst;
  inst.mode = core::Mode::Unicast;
  inst.machines = 1;
  core::Request r;
  r.id = "only"; r.arrival = 0; r.deadline = 2; r.length = 1; r.index = 0;
  inst.requests = {r};
  fs::path p = scratch() / "trivial.json";
  io::save_instance(inst, p.string());

  std::string out;
  int code = run_cli("run --instance " + p.string() + " --scheduler ssf", &out);
  CHECK(code == 0);
  json report = json::parse(out);
  CHECK(report.at("overall") == json("1"));
  CHECK(report.at("per-request").size() == 1);
}

TEST_CASE("run writes a loadable trace that passes validation") {
  fs::path trace = scratch() / "uni-ssf.jsonl";
  fs::path report = scratch() / "uni-ssf-report.json";
  int code = run_cli("run --instance " + unicast_instance().string() +
                         " --scheduler ssf --speed 3/2 --trace " +
                         trace.string() + " --report " + report.string());
  CHECK(code == 0);
  auto inst = io::load_instance(unicast_instance().string());
  auto loaded = io::load_trace(trace.string());
  CHECK(loaded.scheduler == "ssf");
  CHECK(loaded.speed == Rational(3, 2));
  CHECK(core::validate_trace(inst, loaded).empty());
  json rep = json::parse(slurp(report));
  CHECK(rep.contains("overall"));
  CHECK(rep.contains("witness-id"));
}

TEST_CASE("run refuses a waiting scheduler without wait-c") {
  std::string out;
  int code = run_cli("run --instance " + broadcast_instance().string() +
                         " --scheduler ssfw",
                     &out);
  CHECK(code == 1);
  json err = json::parse(out);
  CHECK(err.at("error").at("kind") == json("usage"));
  CHECK(err.at("error").at("message").get<std::string>().find("--wait-c") !=
        std::string::npos);
}

TEST_CASE("run rejects unknown schedulers, naming the valid ones") {
  std::string out;
  int code = run_cli("run --instance " + unicast_instance().string() +
                         " --scheduler magic",
                     &out);
  CHECK(code == 1);
  std::string message =
      json::parse(out).at("error").at("message").get<std::string>();
  CHECK(message.find("valid names") != std::string::npos);
  CHECK(message.find("ssf-id") != std::string::npos);
}

TEST_CASE("run rejects a scheduler/mode mismatch") {
  std::string out;
  int code = run_cli("run --instance " + broadcast_instance().string() +
                         " --scheduler ssf",
                     &out);
  CHECK(code == 2);
  CHECK(json::parse(out).at("error").at("kind") == json("validation"));
}

// ---------------------------------------------------------------------------
// check

TEST_CASE("check accepts a clean waiting-scheduler trace") {
  fs::path trace = scratch() / "bc-ssfw.jsonl";
  CHECK(run_cli("run --instance " + broadcast_instance().string() +
                " --scheduler ssfw --wait-c 1/4 --run-to-completion --trace " +
                trace.string() + " --report /dev/null") == 0);
  std::string out;
  int code = run_cli("check --instance " + broadcast_instance().string() +
                         " --trace " + trace.string(),
                     &out);
  CHECK(code == 0);
  json verdict = json::parse(out);
  CHECK(verdict.at("scheduler") == json("ssfw"));
  CHECK(verdict.at("violations").empty());
}

TEST_CASE("check flags a tampered trace") {
  fs::path trace = scratch() / "uni-tamper.jsonl";
  CHECK(run_cli("run --instance " + unicast_instance().string() +
                " --scheduler ssf --trace " + trace.string() +
                " --report /dev/null") == 0);

  // Double the recorded work of the first segment line.
  auto rows = lines_of(slurp(trace));
  for (auto& row : rows) {
    json line = json::parse(row);
    if (line.at("kind") == json("segment")) {
      line["work"] = io::rational_to_json(
          io::rational_from_json(line.at("work")) * 2);
      row = line.dump();
      break;
    }
  }
  std::ofstream rewrite(trace);
  for (const auto& row : rows) rewrite << row << "\n";
  rewrite.close();

  std::string out;
  int code = run_cli("check --instance " + unicast_instance().string() +
                         " --trace " + trace.string(),
                     &out);
  CHECK(code == 2);
  CHECK(!json::parse(out).at("violations").empty());
}

TEST_CASE("check rejects a trace from the other mode") {
  fs::path trace = scratch() / "bc-fifo.jsonl";
  CHECK(run_cli("run --instance " + broadcast_instance().string() +
                " --scheduler fifo --trace " + trace.string() +
                " --report /dev/null") == 0);
  std::string out;
  int code = run_cli("check --instance " + unicast_instance().string() +
                         " --trace " + trace.string(),
                     &out);
  CHECK(code == 2);
  CHECK(json::parse(out).at("error").at("kind") == json("mode-mismatch"));
}

// ---------------------------------------------------------------------------
// compare

TEST_CASE("compare emits one bound-checked CSV row per combination") {
  fs::path csv = scratch() / "cmp.csv";
  int code = run_cli("compare --instances " + broadcast_instance().string() +
                     " --schedulers fifo,ssfw --speeds 1,5/2 --wait-c 1/4 "
                     "--out " + csv.string());
  CHECK(code == 0);
  auto rows = lines_of(slurp(csv));
  REQUIRE(rows.size() == 5);  // header + 2 schedulers x 2 speeds
  CHECK(rows[0] ==
        "instance,scheduler,speed,c,online_alpha,online_alpha_decimal,"
        "oracle_lo,oracle_hi,ratio,ratio_decimal,bound,pass");
  for (size_t i = 1; i < rows.size(); ++i)
    CHECK(split_csv(rows[i]).size() == 12);

  // fifo at speed 1 achieves the optimum on this instance.
  auto fifo_row = split_csv(rows[1]);
  CHECK(fifo_row[1] == "fifo");
  CHECK(fifo_row[2] == "1");
  CHECK(fifo_row[4] == "1");   // online alpha
  CHECK(fifo_row[6] == "1");   // oracle lo
  CHECK(fifo_row[10] == "inf");
  CHECK(fifo_row[11] == "true");

  // ssfw at speed 5/2 with c = 1/4: bound max{1/c^2, 1/(eps(1-c)-c)} = 16.
  auto ssfw_row = split_csv(rows[4]);
  CHECK(ssfw_row[1] == "ssfw");
  CHECK(ssfw_row[2] == "5/2");
  CHECK(ssfw_row[3] == "1/4");
  CHECK(ssfw_row[10] == "16");
  CHECK(ssfw_row[11] == "true");
}

// ---------------------------------------------------------------------------
// oracle

TEST_CASE("oracle prints an exact bracket for unicast instances") {
  std::string out;
  int code =
      run_cli("oracle --instance " + unicast_instance().string(), &out);
  CHECK(code == 0);
  json report = json::parse(out);
  CHECK(report.at("method") == json("edf-exact"));
  Rational lo = io::rational_from_json(report.at("lo"));
  Rational hi = io::rational_from_json(report.at("hi"));
  CHECK(lo >= 1);
  CHECK(lo <= hi);
  CHECK(hi - lo <= Rational(1, 1024));
  CHECK(!report.at("probes").empty());
}

TEST_CASE("oracle writes a witness trace that validates") {
  fs::path witness = scratch() / "witness.jsonl";
  int code = run_cli("oracle --instance " + broadcast_instance().string() +
                     " --witness " + witness.string());
  CHECK(code == 0);
  auto inst = io::load_instance(broadcast_instance().string());
  auto trace = io::load_trace(witness.string());
  CHECK(core::validate_trace(inst, trace).empty());
}

TEST_CASE("oracle guard trips on oversized broadcast searches") {
  fs::path big = scratch() / "big.json";
  CHECK(run_cli("gen --profile broadcast-random --seed 1 --count 64 "
                "--pages 3 --out " + big.string()) == 0);
  std::string out;
  int code = run_cli("oracle --instance " + big.string(), &out);
  CHECK(code == 4);
  CHECK(json::parse(out).at("error").at("kind") == json("oracle-guard"));
}

// ---------------------------------------------------------------------------
// sweep

TEST_CASE("sweep fills a grid deterministically and resumes without duplicates") {
  fs::path first = scratch() / "sweep-a.csv";
  fs::path second = scratch() / "sweep-b.csv";
  std::string args = "sweep --scheduler ssf --profile unicast-random "
                     "--eps 1/4,1/2,1 --seeds 1,2,3,4,5,6,7,8,9,10 "
                     "--count 8 --out ";
  CHECK(run_cli(args + first.string()) == 0);
  auto rows = lines_of(slurp(first));
  REQUIRE(rows.size() == 31);  // header + 3 eps x 10 seeds
  CHECK(rows[0] == std::string("key,") +
                       "instance,scheduler,speed,c,online_alpha,"
                       "online_alpha_decimal,oracle_lo,oracle_hi,ratio,"
                       "ratio_decimal,bound,pass");
  for (size_t i = 1; i < rows.size(); ++i) {
    auto fields = split_csv(rows[i]);
    REQUIRE(fields.size() == 13);
    CHECK(fields[2] == "ssf");
    CHECK(fields[12] != "");  // every row finished with a verdict
  }

  // Re-running against the same file adds nothing.
  std::string before = slurp(first);
  CHECK(run_cli(args + first.string()) == 0);
  CHECK(slurp(first) == before);

  // A fresh run from scratch produces byte-identical output.
  CHECK(run_cli(args + second.string()) == 0);
  CHECK(slurp(second) == before);
}

// ---------------------------------------------------------------------------
// adversary

TEST_CASE("adversary run against ssf certifies its lower bound") {
  std::string out;
  int code = run_cli(
      "adversary --kind unicast --param 1024 --scheduler ssf", &out);
  CHECK(code == 0);
  json report = json::parse(out);
  CHECK(report.at("branch") == json("type-1-unfinished"));
  CHECK(report.at("certificate-consistent") == json(true));
  CHECK(report.at("online-meets-lower-bound") == json(true));
  CHECK(report.at("measured-meets-threshold") == json(true));
}

TEST_CASE("broadcast adversary floors every speed-1 scheduler at n/4") {
  fs::path trace = scratch() / "adv-online.jsonl";
  fs::path cert = scratch() / "adv-cert.jsonl";
  std::string out;
  int code = run_cli("adversary --kind broadcast --param 8 --scheduler fifo "
                     "--trace " + trace.string() + " --certificate " +
                     cert.string(),
                     &out);
  CHECK(code == 0);
  json report = json::parse(out);
  CHECK(report.at("branch") == json("cyclic"));
  CHECK(report.at("claimed-ratio") == json("2"));
  CHECK(report.at("online-meets-lower-bound") == json(true));
  CHECK(report.at("certificate-consistent") == json(true));

  auto online = io::load_trace(trace.string());
  auto certificate = io::load_trace(cert.string());
  CHECK(!online.segments.empty());
  CHECK(!certificate.segments.empty());
}

TEST_CASE("adversary rejects a scheduler from the wrong mode") {
  std::string out;
  CHECK(run_cli("adversary --kind unicast --param 1024 --scheduler fifo",
                &out) == 1);
  CHECK(run_cli("adversary --kind broadcast --param 8 --scheduler ssf",
                &out) == 1);
}
