#include "delayfactor/adversaries.hpp"
#include "delayfactor/broadcast.hpp"
#include "delayfactor/engine.hpp"
#include "delayfactor/gen.hpp"
#include "delayfactor/io.hpp"
#include "delayfactor/oracles.hpp"
#include "delayfactor/unicast.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace {

using delayfactor::Rational;
using delayfactor::TimePoint;
using delayfactor::to_string;
using nlohmann::json;
namespace core = delayfactor::core;
namespace engine = delayfactor::engine;
namespace unicast = delayfactor::unicast;
namespace broadcast = delayfactor::broadcast;
namespace oracles = delayfactor::oracles;
namespace adversaries = delayfactor::adversaries;
namespace gen = delayfactor::gen;
namespace io = delayfactor::io;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidation = 2;
constexpr int kBoundViolation = 3;
constexpr int kOracleGuard = 4;

/// Carries a ready exit code upward; the payload was already printed.
struct Bail {
  int code;
};

void print_error(const std::string& kind, const std::string& message,
                 const std::vector<core::Violation>* violations = nullptr) {
  json err;
  err["error"]["kind"] = kind;
  err["error"]["message"] = message;
  if (violations) {
    json rows = json::array();
    for (const core::Violation& v : *violations)
      rows.push_back(
          {{"request-index", v.request_index}, {"message", v.message}});
    err["error"]["violations"] = std::move(rows);
  }
  std::cout << err.dump(2) << "\n";
}

[[noreturn]] void bail(int code, const std::string& kind,
                       const std::string& message,
                       const std::vector<core::Violation>* violations =
                           nullptr) {
  print_error(kind, message, violations);
  throw Bail{code};
}

Rational need_rational(const std::string& text, const std::string& flag) {
  auto parsed = delayfactor::parse_rational(text);
  if (!parsed)
    bail(kUsage, "usage",
         flag + " expects a rational like 3/2, 1.5, or 2: got \"" + text +
             "\"");
  return *parsed;
}

std::string approx(const Rational& r) {
  std::ostringstream out;
  out.precision(12);
  out << delayfactor::to_double(r);
  return out.str();
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

const std::vector<std::string> kSchedulerNames = {
    "ssf", "ssf-np", "ssf-id", "ssfw", "ssfw-varying", "fifo"};

bool unicast_scheduler(const std::string& name) {
  return name == "ssf" || name == "ssf-np" || name == "ssf-id";
}

bool needs_wait_c(const std::string& name) {
  return name == "ssfw" || name == "ssfw-varying";
}

std::string scheduler_name_list() {
  std::string all;
  for (const std::string& n : kSchedulerNames) {
    if (!all.empty()) all += ", ";
    all += n;
  }
  return all;
}

std::unique_ptr<engine::Scheduler> make_scheduler(
    const std::string& name, const std::optional<Rational>& c) {
  if (name == "ssf") return std::make_unique<unicast::SsfScheduler>();
  if (name == "ssf-np") return std::make_unique<unicast::SsfNpScheduler>();
  if (name == "ssf-id") return std::make_unique<unicast::SsfIdScheduler>();
  if (name == "fifo") return std::make_unique<broadcast::FifoScheduler>();
  if (needs_wait_c(name)) {
    if (!c)
      bail(kUsage, "usage",
           "scheduler " + name + " requires --wait-c in (0,1)");
    try {
      if (name == "ssfw")
        return std::make_unique<broadcast::SsfwUnitScheduler>(*c);
      return std::make_unique<broadcast::SsfwVaryingScheduler>(*c);
    } catch (const std::invalid_argument& e) {
      bail(kUsage, "usage", e.what());
    }
  }
  bail(kUsage, "usage",
       "unknown scheduler \"" + name + "\"; valid names: " +
           scheduler_name_list());
}

/// Theorem bound for the scheduler at the given speed; nullopt = unbounded.
/// ssf: 1/eps with eps = speed-1; ssf-np: 2/eps; ssf-id: max{16, 2/eps};
/// ssfw: max{1/c^2, 1/(eps-c*eps-c)} with eps = speed-2;
/// ssfw-varying: max{1/c^2, 2/(eps-c*eps-c)} with eps = speed-4.
std::optional<Rational> theorem_bound(const std::string& name,
                                      const Rational& speed,
                                      const std::optional<Rational>& c) {
  if (name == "ssf" || name == "ssf-np" || name == "ssf-id") {
    Rational eps = speed - 1;
    if (!(eps > 0)) return std::nullopt;
    Rational base = (name == "ssf" ? Rational(1) : Rational(2)) / eps;
    if (name == "ssf-id" && base < 16) base = 16;
    return base;
  }
  if (needs_wait_c(name)) {
    if (!c) return std::nullopt;
    Rational eps = speed - (name == "ssfw" ? 2 : 4);
    if (!(eps > 0)) return std::nullopt;
    Rational denom = eps - *c * eps - *c;
    if (!(denom > 0)) return std::nullopt;
    Rational waiting_term = Rational(1) / (*c * *c);
    Rational speed_term =
        (name == "ssfw" ? Rational(1) : Rational(2)) / denom;
    return waiting_term > speed_term ? waiting_term : speed_term;
  }
  return std::nullopt;  // fifo and anything else: no guarantee
}

core::Instance load_checked_instance(const std::string& path) {
  core::Instance inst;
  try {
    inst = io::load_instance(path);
  } catch (const io::IoError& e) {
    bail(kValidation, "parse", e.what());
  }
  std::vector<core::Violation> violations = core::validate(inst);
  if (!violations.empty())
    bail(kValidation, "validation", "instance " + path + " is not well formed",
         &violations);
  return inst;
}

/// Mode/machine compatibility shared by run and compare.
void check_compat(const core::Instance& inst, const std::string& scheduler) {
  if (std::find(kSchedulerNames.begin(), kSchedulerNames.end(), scheduler) ==
      kSchedulerNames.end())
    bail(kUsage, "usage",
         "unknown scheduler \"" + scheduler + "\"; valid names: " +
             scheduler_name_list());
  bool wants_unicast = unicast_scheduler(scheduler);
  bool is_unicast = inst.mode == core::Mode::Unicast;
  if (wants_unicast != is_unicast)
    bail(kValidation, "validation",
         "scheduler " + scheduler + " requires " +
             (wants_unicast ? "unicast" : "broadcast") + " mode");
  if ((scheduler == "ssf" || scheduler == "ssf-np") && inst.machines != 1)
    bail(kValidation, "validation",
         scheduler + " runs on a single machine; instance has " +
             std::to_string(inst.machines));
  if (!is_unicast && inst.machines != 1)
    bail(kValidation, "validation", "broadcast mode is single-machine");
  if (scheduler == "ssfw" && !inst.pages.unit())
    bail(kValidation, "validation",
         "ssfw handles unit pages only; use ssfw-varying for this catalog");
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::string instance_path;
  std::string scheduler;
  std::string speed = "1";
  std::string wait_c;
  std::string horizon;
  bool run_to_completion = false;
  std::string trace_path;
  std::string report_path;
};

int cmd_run(const RunOptions& opt) {
  Rational speed = need_rational(opt.speed, "--speed");
  if (!(speed > 0)) bail(kUsage, "usage", "--speed must be positive");
  std::optional<Rational> c;
  if (!opt.wait_c.empty()) c = need_rational(opt.wait_c, "--wait-c");
  core::Instance inst = load_checked_instance(opt.instance_path);
  check_compat(inst, opt.scheduler);
  std::unique_ptr<engine::Scheduler> scheduler =
      make_scheduler(opt.scheduler, c);

  engine::EngineConfig config;
  config.speed = speed;
  config.machines = inst.machines;
  if (!opt.horizon.empty())
    config.horizon = need_rational(opt.horizon, "--horizon");
  config.no_default_horizon = opt.run_to_completion;

  engine::StaticSource source(inst);
  engine::SimResult result;
  try {
    result = engine::simulate(source, *scheduler, config);
  } catch (const engine::EngineError& e) {
    bail(kValidation, "engine", e.what());
  }
  if (!opt.trace_path.empty()) io::save_trace(result.trace, opt.trace_path);

  core::DelayFactorReport report;
  try {
    report = core::delay_factor(result.realized, result.trace);
  } catch (const core::UnsatisfiedError& e) {
    bail(kValidation, "unsatisfied",
         std::string(e.what()) + " (trace truncated at the horizon?)");
  }
  json out = io::report_to_json(result.realized, report);
  if (opt.report_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::ofstream file(opt.report_path);
    if (!file)
      bail(kValidation, "io", "cannot write report: " + opt.report_path);
    file << out.dump(2) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// compare + sweep share row assembly

struct OracleOutcome {
  std::optional<oracles::OracleReport> report;  // empty when skipped
  std::string skip_reason;
};

OracleOutcome oracle_at_speed_one(const core::Instance& inst,
                                  const Rational& tolerance,
                                  const std::optional<TimePoint>& horizon,
                                  const std::optional<Rational>& slot) {
  OracleOutcome out;
  try {
    if (inst.mode == core::Mode::Unicast) {
      out.report = oracles::optimal_alpha_unicast(inst, Rational(1),
                                                  inst.machines, tolerance);
    } else {
      Rational width = slot ? *slot : oracles::default_slot(inst);
      TimePoint end = horizon
                          ? *horizon
                          : oracles::default_brute_horizon(inst, Rational(1),
                                                           width);
      out.report = oracles::optimal_alpha_broadcast_bruteforce(
          inst, Rational(1), end, width);
    }
  } catch (const oracles::OracleGuardError& e) {
    out.skip_reason = e.what();
  }
  return out;
}

std::string ratio_row(const std::string& instance_label,
                      const core::Instance& inst, const std::string& scheduler,
                      const Rational& speed, const std::optional<Rational>& c,
                      const OracleOutcome& oracle) {
  std::ostringstream row;
  row << csv_escape(instance_label) << "," << scheduler << ","
      << to_string(speed) << "," << (c ? to_string(*c) : "") << ",";
  std::unique_ptr<engine::Scheduler> policy = make_scheduler(scheduler, c);
  engine::EngineConfig config;
  config.speed = speed;
  config.machines = inst.machines;
  // Waiting schedulers stall on purpose; the static default horizon is a
  // work-conserving bound and would clip their tails.
  config.no_default_horizon = needs_wait_c(scheduler);
  engine::StaticSource source(inst);
  engine::SimResult result = engine::simulate(source, *policy, config);
  core::DelayFactorReport online = core::delay_factor(result.realized,
                                                      result.trace);
  row << to_string(online.overall) << "," << approx(online.overall) << ",";
  std::optional<Rational> bound = theorem_bound(scheduler, speed, c);
  std::string bound_text = bound ? to_string(*bound) : "inf";
  if (!oracle.report) {
    row << ",,,," << bound_text << ",oracle-skipped";
    return row.str();
  }
  Rational ratio = online.overall / oracle.report->lo;
  bool pass = !bound || ratio <= *bound;
  row << to_string(oracle.report->lo) << "," << to_string(oracle.report->hi)
      << "," << to_string(ratio) << "," << approx(ratio) << "," << bound_text
      << "," << (pass ? "true" : "false");
  return row.str();
}

constexpr const char* kRatioHeader =
    "instance,scheduler,speed,c,online_alpha,online_alpha_decimal,"
    "oracle_lo,oracle_hi,ratio,ratio_decimal,bound,pass";

struct CompareOptions {
  std::vector<std::string> instances;
  std::vector<std::string> schedulers;
  std::vector<std::string> speeds;
  std::string wait_c;
  std::string out;
  std::string tolerance = "1/1024";
  std::string brute_horizon;
  std::string brute_slot;
  bool strict = false;
};

int cmd_compare(const CompareOptions& opt) {
  Rational tolerance = need_rational(opt.tolerance, "--tolerance");
  std::optional<Rational> c;
  if (!opt.wait_c.empty()) c = need_rational(opt.wait_c, "--wait-c");
  std::optional<TimePoint> horizon;
  if (!opt.brute_horizon.empty())
    horizon = need_rational(opt.brute_horizon, "--brute-horizon");
  std::optional<Rational> slot;
  if (!opt.brute_slot.empty())
    slot = need_rational(opt.brute_slot, "--brute-slot");
  std::vector<Rational> speeds;
  for (const std::string& s : opt.speeds)
    speeds.push_back(need_rational(s, "--speeds"));

  std::vector<std::string> rows;
  bool any_fail = false;
  for (const std::string& path : opt.instances) {
    core::Instance inst = load_checked_instance(path);
    OracleOutcome oracle = oracle_at_speed_one(inst, tolerance, horizon, slot);
    for (const std::string& scheduler : opt.schedulers) {
      check_compat(inst, scheduler);
      std::optional<Rational> row_c =
          needs_wait_c(scheduler) ? c : std::nullopt;
      if (needs_wait_c(scheduler) && !row_c)
        bail(kUsage, "usage",
             "scheduler " + scheduler + " requires --wait-c");
      for (const Rational& speed : speeds) {
        std::string row =
            ratio_row(path, inst, scheduler, speed, row_c, oracle);
        if (row.size() >= 6 && row.compare(row.size() - 6, 6, ",false") == 0)
          any_fail = true;
        rows.push_back(std::move(row));
      }
    }
  }

  std::ostream* sink = &std::cout;
  std::ofstream file;
  if (!opt.out.empty()) {
    file.open(opt.out);
    if (!file) bail(kValidation, "io", "cannot write CSV: " + opt.out);
    sink = &file;
  }
  *sink << kRatioHeader << "\n";
  for (const std::string& row : rows) *sink << row << "\n";
  if (opt.strict && any_fail) return kBoundViolation;
  return kOk;
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  std::string profile = "unicast-random";
  std::uint64_t seed = 1;
  int count = 10;
  int pages = 4;
  int machines = 1;
  std::vector<long> page_lengths = {1};
  std::string out;
};

int cmd_gen(const GenOptions& opt) {
  gen::GenSpec spec;
  spec.profile = opt.profile;
  spec.seed = opt.seed;
  spec.count = opt.count;
  spec.pages = opt.pages;
  spec.machines = opt.machines;
  spec.page_length_choices = opt.page_lengths;
  core::Instance inst;
  try {
    inst = gen::generate(spec);
  } catch (const std::invalid_argument& e) {
    bail(kUsage, "usage", e.what());
  }
  if (opt.out.empty())
    std::cout << io::instance_to_json(inst).dump(2) << "\n";
  else
    io::save_instance(inst, opt.out);
  return kOk;
}

// ---------------------------------------------------------------------------
// check

struct CheckOptions {
  std::string instance_path;
  std::string trace_path;
};

int cmd_check(const CheckOptions& opt) {
  core::Instance inst = load_checked_instance(opt.instance_path);
  core::ScheduleTrace trace;
  try {
    trace = io::load_trace(opt.trace_path);
  } catch (const io::IoError& e) {
    bail(kValidation, "parse", e.what());
  }
  if (trace.mode != inst.mode)
    bail(kValidation, "mode-mismatch",
         std::string("trace mode is ") +
             (trace.mode == core::Mode::Unicast ? "unicast" : "broadcast") +
             " but the instance is " +
             (inst.mode == core::Mode::Unicast ? "unicast" : "broadcast"));

  std::vector<std::string> problems;
  for (const core::Violation& v : core::validate_trace(inst, trace))
    problems.push_back(v.message);

  const std::string& who = trace.scheduler;
  auto absorb = [&problems](std::vector<std::string> more) {
    for (std::string& m : more) problems.push_back(std::move(m));
  };
  if (who == "ssf") {
    absorb(unicast::check_ssf_witness_property(inst, trace));
  } else if (who == "ssf-id") {
    absorb(unicast::check_non_migratory(inst, trace));
    if (!trace.truncated) {
      for (const TimePoint& t : unicast::event_times(inst, trace))
        absorb(unicast::check_volume_balance(
            unicast::ledgers_from_trace(inst, trace, t)));
    }
  } else if (who == "ssfw" || who == "ssfw-varying") {
    absorb(broadcast::check_merge_window(inst, trace));
    if (trace.wait_c) {
      absorb(broadcast::check_waiting(inst, trace, *trace.wait_c));
      absorb(broadcast::check_busy(inst, trace, *trace.wait_c));
    } else {
      problems.push_back(
          "trace meta lacks wait-c; waiting and busy checks impossible");
    }
    absorb(broadcast::check_start_finish_order(inst, trace));
  } else if (who == "fifo") {
    absorb(broadcast::check_merge_window(inst, trace));
  }

  json out;
  out["scheduler"] = who;
  out["violations"] = problems;
  std::cout << out.dump(2) << "\n";
  return problems.empty() ? kOk : kValidation;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string scheduler;
  std::string profile;
  std::vector<std::string> eps_list;
  std::vector<std::string> wait_c_list;
  std::vector<std::uint64_t> seeds;
  int count = 10;
  int pages = 3;
  int machines = 1;
  std::vector<long> page_lengths = {1};
  std::string tolerance = "1/1024";
  std::string out;
};

std::size_t thread_cap() {
  if (const char* env = std::getenv("DELAYFACTOR_THREADS")) {
    long v = std::atol(env);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? std::min(hw, 4u) : 1;
}

Rational sweep_speed(const std::string& scheduler, const Rational& eps) {
  if (scheduler == "ssfw") return 2 + eps;
  if (scheduler == "ssfw-varying") return 4 + eps;
  return 1 + eps;
}

int cmd_sweep(const SweepOptions& opt) {
  Rational tolerance = need_rational(opt.tolerance, "--tolerance");
  bool broadcast_profile = opt.profile != "unicast-random";
  if (unicast_scheduler(opt.scheduler) == broadcast_profile)
    bail(kUsage, "usage",
         "scheduler " + opt.scheduler + " does not fit profile " +
             opt.profile);
  std::vector<Rational> eps_grid;
  for (const std::string& e : opt.eps_list)
    eps_grid.push_back(need_rational(e, "--eps"));
  std::vector<std::optional<Rational>> c_grid;
  if (needs_wait_c(opt.scheduler)) {
    for (const std::string& c : opt.wait_c_list)
      c_grid.push_back(need_rational(c, "--wait-c-grid"));
    if (c_grid.empty()) c_grid.push_back(std::nullopt);  // derive c = eps/2
  } else {
    c_grid.push_back(std::nullopt);
  }

  struct Job {
    std::string key;
    Rational eps;
    std::optional<Rational> c;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const Rational& eps : eps_grid)
    for (const std::optional<Rational>& c : c_grid)
      for (std::uint64_t seed : opt.seeds) {
        std::optional<Rational> row_c = c;
        if (needs_wait_c(opt.scheduler) && !row_c) row_c = eps / 2;
        std::ostringstream key;
        key << opt.profile << ":" << opt.count << ":" << seed << ":"
            << opt.scheduler << ":" << to_string(eps) << ":"
            << (row_c ? to_string(*row_c) : "-");
        jobs.push_back(Job{key.str(), eps, row_c, seed});
      }

  // Resume: drop jobs whose key is already present in the output file.
  std::set<std::string> done;
  bool have_header = false;
  {
    std::ifstream existing(opt.out);
    std::string line;
    while (existing && std::getline(existing, line)) {
      if (line.empty()) continue;
      have_header = true;
      std::size_t comma = line.find(',');
      if (comma != std::string::npos) done.insert(line.substr(0, comma));
    }
  }
  std::vector<Job> pending;
  for (Job& j : jobs)
    if (done.count(j.key) == 0) pending.push_back(std::move(j));

  std::ofstream sink(opt.out, std::ios::app);
  if (!sink) bail(kValidation, "io", "cannot write CSV: " + opt.out);
  if (!have_header) sink << "key," << kRatioHeader << "\n" << std::flush;

  std::vector<std::optional<std::string>> results(pending.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= pending.size()) return;
      const Job& job = pending[i];
      std::string row;
      try {
        gen::GenSpec spec;
        spec.profile = opt.profile;
        spec.seed = job.seed;
        spec.count = opt.count;
        spec.pages = opt.pages;
        spec.machines = opt.machines;
        spec.page_length_choices = opt.page_lengths;
        core::Instance inst = gen::generate(spec);
        OracleOutcome oracle =
            oracle_at_speed_one(inst, tolerance, std::nullopt, std::nullopt);
        std::ostringstream label;
        label << opt.profile << "-seed" << job.seed << "-n" << opt.count;
        row = job.key + "," +
              ratio_row(label.str(), inst, opt.scheduler,
                        sweep_speed(opt.scheduler, job.eps), job.c, oracle);
      } catch (const std::exception& e) {
        row = job.key + ",,,,,,,,,,,," + std::string("error: ") + e.what();
      }
      std::lock_guard<std::mutex> hold(mu);
      results[i] = std::move(row);
      cv.notify_all();
    }
  };
  std::size_t threads = std::min(thread_cap(), std::max<std::size_t>(
                                                   pending.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  // Ordered single appender: rows land in job order no matter who finishes
  // first, so resumes and re-runs produce identical files.
  {
    std::unique_lock<std::mutex> hold(mu);
    for (std::size_t i = 0; i < results.size(); ++i) {
      cv.wait(hold, [&] { return results[i].has_value(); });
      sink << *results[i] << "\n" << std::flush;
    }
  }
  for (std::thread& t : pool) t.join();
  return kOk;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleOptions {
  std::string instance_path;
  std::string speed = "1";
  std::string tolerance = "1/1024";
  std::string horizon;
  std::string slot;
  std::string witness_path;
  int machines = 0;  // 0 = use the instance's machine count
};

int cmd_oracle(const OracleOptions& opt) {
  Rational speed = need_rational(opt.speed, "--speed");
  if (!(speed > 0)) bail(kUsage, "usage", "--speed must be positive");
  Rational tolerance = need_rational(opt.tolerance, "--tolerance");
  core::Instance inst = load_checked_instance(opt.instance_path);
  int machines = opt.machines > 0 ? opt.machines : inst.machines;

  oracles::OracleReport report;
  try {
    if (inst.mode == core::Mode::Unicast) {
      report = oracles::optimal_alpha_unicast(inst, speed, machines,
                                              tolerance);
    } else {
      Rational width = opt.slot.empty()
                           ? oracles::default_slot(inst)
                           : need_rational(opt.slot, "--slot");
      TimePoint end = opt.horizon.empty()
                          ? oracles::default_brute_horizon(inst, speed, width)
                          : need_rational(opt.horizon, "--horizon");
      report = oracles::optimal_alpha_broadcast_bruteforce(inst, speed, end,
                                                           width);
    }
  } catch (const oracles::OracleGuardError& e) {
    bail(kOracleGuard, "oracle-guard", e.what());
  } catch (const oracles::OracleError& e) {
    bail(kValidation, "oracle", e.what());
  }

  if (!opt.witness_path.empty()) io::save_trace(report.witness, opt.witness_path);
  json out;
  out["method"] = report.method;
  out["lo"] = io::rational_to_json(report.lo);
  out["lo-approx"] = delayfactor::to_double(report.lo);
  out["hi"] = io::rational_to_json(report.hi);
  out["hi-approx"] = delayfactor::to_double(report.hi);
  json probes = json::array();
  for (const auto& [alpha, feasible] : report.probes)
    probes.push_back(
        {{"alpha", io::rational_to_json(alpha)}, {"feasible", feasible}});
  out["probes"] = std::move(probes);
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// adversary

struct AdversaryOptions {
  std::string kind;
  std::string param;
  std::string scheduler;
  std::string wait_c;
  std::string trace_path;
  std::string certificate_path;
};

int cmd_adversary(const AdversaryOptions& opt) {
  std::optional<Rational> c;
  if (!opt.wait_c.empty()) c = need_rational(opt.wait_c, "--wait-c");
  std::unique_ptr<engine::RequestSource> source;
  adversaries::UnicastStretchAdversary* stretch = nullptr;
  adversaries::BroadcastCyclicAdversary* cyclic = nullptr;
  try {
    if (opt.kind == "unicast") {
      if (!unicast_scheduler(opt.scheduler))
        bail(kUsage, "usage",
             "the unicast adversary drives ssf, ssf-np, or ssf-id");
      auto owned = std::make_unique<adversaries::UnicastStretchAdversary>(
          need_rational(opt.param, "--param"));
      stretch = owned.get();
      source = std::move(owned);
    } else if (opt.kind == "broadcast") {
      if (unicast_scheduler(opt.scheduler))
        bail(kUsage, "usage",
             "the broadcast adversary drives ssfw, ssfw-varying, or fifo");
      long n = std::atol(opt.param.c_str());
      auto owned =
          std::make_unique<adversaries::BroadcastCyclicAdversary>(
              static_cast<int>(n));
      cyclic = owned.get();
      source = std::move(owned);
    } else {
      bail(kUsage, "usage", "--kind must be unicast or broadcast");
    }
  } catch (const adversaries::AdversaryError& e) {
    bail(kValidation, "adversary", e.what());
  }

  std::unique_ptr<engine::Scheduler> policy = make_scheduler(opt.scheduler, c);
  engine::EngineConfig config;  // adversaries claim lower bounds at speed 1
  config.speed = 1;
  config.machines = 1;
  engine::SimResult result;
  adversaries::AdversaryTranscript transcript;
  try {
    result = engine::simulate(*source, *policy, config);
    transcript = stretch ? stretch->transcript() : cyclic->transcript();
  } catch (const std::exception& e) {
    bail(kValidation, "adversary", e.what());
  }

  core::DelayFactorReport online =
      core::delay_factor(result.realized, result.trace);
  core::DelayFactorReport certified =
      core::delay_factor(result.realized, transcript.certificate);
  Rational measured = online.overall / certified.overall;

  if (!opt.trace_path.empty()) io::save_trace(result.trace, opt.trace_path);
  if (!opt.certificate_path.empty())
    io::save_trace(transcript.certificate, opt.certificate_path);

  json out;
  out["kind"] = opt.kind;
  out["param"] = opt.param;
  out["scheduler"] = opt.scheduler;
  out["branch"] = transcript.branch;
  json emissions = json::array();
  for (const adversaries::EmissionRecord& e : transcript.emissions)
    emissions.push_back({{"id", e.request_id}, {"reason", e.reason}});
  out["emissions"] = std::move(emissions);
  out["online-lower-bound"] =
      io::rational_to_json(transcript.online_lower_bound);
  out["certificate-upper-bound"] =
      io::rational_to_json(transcript.certificate_upper_bound);
  out["claimed-ratio"] = io::rational_to_json(transcript.claimed_ratio);
  out["claimed-ratio-approx"] =
      delayfactor::to_double(transcript.claimed_ratio);
  out["ratio-threshold"] = io::rational_to_json(transcript.ratio_threshold);
  out["ratio-threshold-approx"] =
      delayfactor::to_double(transcript.ratio_threshold);
  out["online-report"] = io::report_to_json(result.realized, online);
  out["certificate-report"] = io::report_to_json(result.realized, certified);
  out["certificate-consistent"] =
      certified.overall == transcript.certificate_upper_bound;
  out["online-meets-lower-bound"] =
      online.overall >= transcript.online_lower_bound;
  out["measured-ratio"] = io::rational_to_json(measured);
  out["measured-ratio-approx"] = delayfactor::to_double(measured);
  out["measured-meets-threshold"] = measured >= transcript.ratio_threshold;
  std::cout << out.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "delayfactor: exact-rational simulation of online delay-factor "
      "scheduling, with offline oracles and adversarial lower bounds"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand(
      "run", "Simulate one scheduler on one instance; write trace + report");
  run->add_option("--instance", run_opt.instance_path, "Instance JSON path")
      ->required();
  run->add_option("--scheduler", run_opt.scheduler,
                  "One of: " + scheduler_name_list())
      ->required();
  run->add_option("--speed", run_opt.speed, "Machine speed (rational)")
      ->capture_default_str();
  run->add_option("--wait-c", run_opt.wait_c,
                  "Waiting parameter c in (0,1); required for ssfw schedulers");
  run->add_option("--horizon", run_opt.horizon,
                  "Hard stop time (rational); default 4*(last arrival + "
                  "total work/speed)");
  run->add_flag("--run-to-completion", run_opt.run_to_completion,
                "Ignore the default horizon and run until every request is "
                "satisfied (waiting schedulers outlast the default)");
  run->add_option("--trace", run_opt.trace_path, "Trace JSONL output path");
  run->add_option("--report", run_opt.report_path,
                  "Report JSON output path (default: stdout)");

  CompareOptions cmp_opt;
  CLI::App* cmp = app.add_subcommand(
      "compare",
      "Run schedulers against the speed-1 oracle; one CSV row per "
      "(instance, scheduler, speed)");
  cmp->add_option("--instances", cmp_opt.instances, "Instance JSON paths")
      ->required()
      ->delimiter(',');
  cmp->add_option("--schedulers", cmp_opt.schedulers,
                  "Comma-separated scheduler names")
      ->required()
      ->delimiter(',');
  cmp->add_option("--speeds", cmp_opt.speeds,
                  "Comma-separated rational speeds")
      ->required()
      ->delimiter(',');
  cmp->add_option("--wait-c", cmp_opt.wait_c,
                  "Waiting parameter for ssfw schedulers");
  cmp->add_option("--out", cmp_opt.out, "CSV output path (default: stdout)");
  cmp->add_option("--tolerance", cmp_opt.tolerance,
                  "Oracle bisection tolerance")
      ->capture_default_str();
  cmp->add_option("--brute-horizon", cmp_opt.brute_horizon,
                  "Broadcast oracle horizon override");
  cmp->add_option("--brute-slot", cmp_opt.brute_slot,
                  "Broadcast oracle slot override");
  cmp->add_flag("--strict", cmp_opt.strict,
                "Exit 3 when any ratio exceeds its theorem bound");

  GenOptions gen_opt;
  CLI::App* genc = app.add_subcommand(
      "gen",
      "Generate a random instance. Profiles: unicast-random (rational "
      "arrivals/lengths/slacks, denominators in {1,2,4}, slack >= length), "
      "broadcast-random (integer gaps 0..2, integer slacks 1..6, page "
      "lengths from --page-lengths), bursty-page (bursts of 2-4 same-page "
      "requests, so every touched page averages >= 2 requests)");
  genc->add_option("--profile", gen_opt.profile,
                   "unicast-random | broadcast-random | bursty-page")
      ->capture_default_str();
  genc->add_option("--seed", gen_opt.seed, "64-bit seed")
      ->capture_default_str();
  genc->add_option("--count", gen_opt.count, "Number of requests")
      ->capture_default_str();
  genc->add_option("--pages", gen_opt.pages, "Page count (broadcast profiles)")
      ->capture_default_str();
  genc->add_option("--machines", gen_opt.machines, "Machines (unicast)")
      ->capture_default_str();
  genc->add_option("--page-lengths", gen_opt.page_lengths,
                   "Integer page length choices (broadcast)")
      ->delimiter(',');
  genc->add_option("--out", gen_opt.out,
                   "Instance JSON output path (default: stdout)");

  CheckOptions chk_opt;
  CLI::App* chk = app.add_subcommand(
      "check", "Replay a trace against its instance and run every "
               "applicable invariant family");
  chk->add_option("--instance", chk_opt.instance_path, "Instance JSON path")
      ->required();
  chk->add_option("--trace", chk_opt.trace_path, "Trace JSONL path")
      ->required();

  SweepOptions swp_opt;
  CLI::App* swp = app.add_subcommand(
      "sweep",
      "Cross-product of compare runs over (eps, c, seeds) on generated "
      "instances; resumable by row key; DELAYFACTOR_THREADS caps workers");
  swp->add_option("--scheduler", swp_opt.scheduler, "Scheduler name")
      ->required();
  swp->add_option("--profile", swp_opt.profile,
                  "Generator profile matching the scheduler's mode")
      ->required();
  swp->add_option("--eps", swp_opt.eps_list,
                  "Comma-separated eps values; speed = base + eps (base 1 "
                  "unicast, 2 ssfw, 4 ssfw-varying)")
      ->required()
      ->delimiter(',');
  swp->add_option("--wait-c-grid", swp_opt.wait_c_list,
                  "Comma-separated c values (default: c = eps/2)")
      ->delimiter(',');
  swp->add_option("--seeds", swp_opt.seeds, "Comma-separated 64-bit seeds")
      ->required()
      ->delimiter(',');
  swp->add_option("--count", swp_opt.count, "Requests per instance")
      ->capture_default_str();
  swp->add_option("--pages", swp_opt.pages, "Pages per broadcast instance")
      ->capture_default_str();
  swp->add_option("--machines", swp_opt.machines, "Machines (unicast)")
      ->capture_default_str();
  swp->add_option("--page-lengths", swp_opt.page_lengths,
                  "Integer page length choices")
      ->delimiter(',');
  swp->add_option("--tolerance", swp_opt.tolerance,
                  "Oracle bisection tolerance")
      ->capture_default_str();
  swp->add_option("--out", swp_opt.out, "CSV output path (appended)")
      ->required();

  OracleOptions orc_opt;
  CLI::App* orc = app.add_subcommand(
      "oracle", "Bracket the offline optimal delay factor");
  orc->add_option("--instance", orc_opt.instance_path, "Instance JSON path")
      ->required();
  orc->add_option("--speed", orc_opt.speed, "Oracle speed")
      ->capture_default_str();
  orc->add_option("--machines", orc_opt.machines,
                  "Machine count override (unicast)");
  orc->add_option("--tolerance", orc_opt.tolerance, "Bisection tolerance")
      ->capture_default_str();
  orc->add_option("--horizon", orc_opt.horizon,
                  "Slotted search horizon (broadcast)");
  orc->add_option("--slot", orc_opt.slot, "Slot width (broadcast)");
  orc->add_option("--witness", orc_opt.witness_path,
                  "Write the witness schedule (trace JSONL) here");

  AdversaryOptions adv_opt;
  CLI::App* adv = app.add_subcommand(
      "adversary",
      "Drive a scheduler with an adaptive lower-bound source at speed 1; "
      "emit transcript, both delay-factor reports, and the measured ratio");
  adv->add_option("--kind", adv_opt.kind, "unicast | broadcast")->required();
  adv->add_option("--param", adv_opt.param,
                  "Size ratio P >= 16 (unicast) or even page count n >= 8 "
                  "(broadcast)")
      ->required();
  adv->add_option("--scheduler", adv_opt.scheduler, "Scheduler under test")
      ->required();
  adv->add_option("--wait-c", adv_opt.wait_c,
                  "Waiting parameter for ssfw schedulers");
  adv->add_option("--trace", adv_opt.trace_path, "Online trace output path");
  adv->add_option("--certificate", adv_opt.certificate_path,
                  "Certificate trace output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (cmp->parsed()) return cmd_compare(cmp_opt);
    if (genc->parsed()) return cmd_gen(gen_opt);
    if (chk->parsed()) return cmd_check(chk_opt);
    if (swp->parsed()) return cmd_sweep(swp_opt);
    if (orc->parsed()) return cmd_oracle(orc_opt);
    if (adv->parsed()) return cmd_adversary(adv_opt);
  } catch (const Bail& b) {
    return b.code;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kValidation;
  }
  return kUsage;
}
