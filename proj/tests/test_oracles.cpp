#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "delayfactor/broadcast.hpp"
#include "delayfactor/engine.hpp"
#include "delayfactor/gen.hpp"
#include "delayfactor/oracles.hpp"

#include "support/reference.hpp"

#include <string>
#include <vector>

using delayfactor::Rational;
using delayfactor::TimePoint;
namespace core = delayfactor::core;
namespace engine = delayfactor::engine;
namespace broadcast = delayfactor::broadcast;
namespace gen = delayfactor::gen;
namespace oracles = delayfactor::oracles;
namespace testsupport = delayfactor::testsupport;

namespace {

Rational rat(long num, long den) { return Rational(num, den); }

core::Instance unit_batch(int count, const Rational& deadline) {
  core::Instance inst;
  inst.mode = core::Mode::Unicast;
  inst.machines = 1;
  for (int i = 0; i < count; ++i) {
    core::Request r;
    r.id = "r" + std::to_string(i);
    r.arrival = 0;
    r.deadline = deadline;
    r.length = 1;
    r.index = i;
    inst.requests.push_back(r);
  }
  return inst;
}

const Rational kTol = rat(1, 1024);

}  // namespace

// ---------------------------------------------------------------------------
// EDF feasibility (m = 1)

TEST_CASE("edf_feasible decides the two-unit-request instance exactly") {
  auto inst = unit_batch(2, Rational(1));  // both need the whole slot

  auto yes = oracles::edf_feasible(inst, Rational(2), Rational(1));
  CHECK(yes.feasible);
  CHECK(core::validate_trace(inst, yes.schedule).empty());
  // The witness meets the virtual deadlines a + 2*S = 2.
  auto report = core::delay_factor(inst, yes.schedule);
  CHECK(report.overall <= Rational(2));

  auto no = oracles::edf_feasible(inst, Rational(2) - kTol, Rational(1));
  CHECK_FALSE(no.feasible);
}

TEST_CASE("edf_feasible respects speed") {
  auto inst = unit_batch(2, Rational(1));
  auto at2 = oracles::edf_feasible(inst, Rational(1), Rational(2));
  CHECK(at2.feasible);  // two units fit in [0,1) at double speed
}

// ---------------------------------------------------------------------------
// bisection bracket, m = 1

TEST_CASE("optimal_alpha_unicast brackets the two-request optimum") {
  auto inst = unit_batch(2, Rational(1));
  auto report = oracles::optimal_alpha_unicast(inst, Rational(1), 1, kTol);
  CHECK(report.method == "edf-exact");
  CHECK(report.hi - report.lo <= kTol);
  // alpha* = 2 exactly: the bracket must straddle it.
  CHECK(report.lo < Rational(2));
  CHECK(Rational(2) <= report.hi);
  CHECK(core::validate_trace(inst, report.witness).empty());
  CHECK(core::delay_factor(inst, report.witness).overall <= report.hi);
  // First probe is alpha = 1 and it fails here.
  REQUIRE_FALSE(report.probes.empty());
  CHECK(report.probes[0].first == Rational(1));
  CHECK_FALSE(report.probes[0].second);
}

TEST_CASE("feasible-at-one instances report the exact bracket [1,1]") {
  auto inst = unit_batch(1, Rational(2));
  auto report = oracles::optimal_alpha_unicast(inst, Rational(1), 1, kTol);
  CHECK(report.lo == Rational(1));
  CHECK(report.hi == Rational(1));
  CHECK(report.probes.size() == 1);
}

TEST_CASE("probes are monotone in alpha") {
  gen::GenSpec spec;
  spec.profile = "unicast-random";
  spec.seed = 4242;
  spec.count = 9;
  auto inst = gen::generate(spec);
  auto report = oracles::optimal_alpha_unicast(inst, Rational(1), 1, kTol);
  for (const auto& [a1, f1] : report.probes)
    for (const auto& [a2, f2] : report.probes)
      if (a1 < a2 && f1) CHECK(f2);
}

// ---------------------------------------------------------------------------
// flow feasibility, m >= 2

TEST_CASE("flow_feasible decides the three-unit two-machine instance") {
  auto inst = unit_batch(3, Rational(1));
  inst.machines = 2;

  CHECK(oracles::flow_feasible(inst, Rational(2), Rational(1), 2).feasible);
  CHECK_FALSE(oracles::flow_feasible(inst, Rational(1), Rational(1), 2).feasible);

  auto report = oracles::optimal_alpha_unicast(inst, Rational(1), 2, kTol);
  CHECK(report.method == "flow");
  // alpha* = 3/2: three units on two machines finish at 3/2.
  CHECK(report.lo < rat(3, 2));
  CHECK(rat(3, 2) <= report.hi);
  CHECK(core::validate_trace(inst, report.witness).empty());
  CHECK(core::delay_factor(inst, report.witness).overall <= report.hi);
}

TEST_CASE("flow witnesses stay valid on random multi-machine instances") {
  for (std::uint64_t seed = 60; seed < 66; ++seed) {
    gen::GenSpec spec;
    spec.profile = "unicast-random";
    spec.seed = seed;
    spec.count = 10;
    spec.machines = 3;
    auto inst = gen::generate(spec);
    auto report = oracles::optimal_alpha_unicast(inst, Rational(1), 3, kTol);
    CHECK(report.hi - report.lo <= kTol);
    CHECK(core::validate_trace(inst, report.witness).empty());
    CHECK(core::delay_factor(inst, report.witness).overall <= report.hi);
  }
}

TEST_CASE("edf and flow agree probe by probe on one machine") {
  for (std::uint64_t seed = 70; seed < 82; ++seed) {
    gen::GenSpec spec;
    spec.profile = "unicast-random";
    spec.seed = seed;
    spec.count = 7;
    auto inst = gen::generate(spec);
    auto report = oracles::optimal_alpha_unicast(inst, Rational(1), 1, kTol);
    for (const auto& [alpha, feasible] : report.probes) {
      auto flow = oracles::flow_feasible(inst, alpha, Rational(1), 1);
      CHECK(flow.feasible == feasible);
    }
  }
}

// ---------------------------------------------------------------------------
// the bracket contains the independently computed optimum

TEST_CASE("permutation reference lands inside the oracle bracket") {
  for (std::uint64_t seed = 90; seed < 105; ++seed) {
    gen::GenSpec spec;
    spec.profile = "unicast-random";
    spec.seed = seed;
    spec.count = 6;
    auto inst = gen::generate(spec);
    Rational best = testsupport::brute_optimal_preemptive_m1(inst);
    auto report = oracles::optimal_alpha_unicast(inst, Rational(1), 1, kTol);
    CHECK(report.lo <= best);
    CHECK(best <= report.hi);
  }
}

// ---------------------------------------------------------------------------
// broadcast brute force

TEST_CASE("brute force solves the two-request single-page instance exactly") {
  core::Instance inst;
  inst.mode = core::Mode::Broadcast;
  inst.machines = 1;
  inst.pages.lengths["p"] = 1;
  core::Request a, b;
  a.id = "a"; a.arrival = 0; a.deadline = 2; a.page = "p"; a.index = 0;
  b.id = "b"; b.arrival = 1; b.deadline = 3; b.page = "p"; b.index = 1;
  inst.requests = {a, b};

  Rational slot = oracles::default_slot(inst);
  CHECK(slot == Rational(1));
  TimePoint horizon = oracles::default_brute_horizon(inst, Rational(1), slot);
  CHECK(horizon == Rational(2));

  auto report =
      oracles::optimal_alpha_broadcast_bruteforce(inst, Rational(1), horizon, slot);
  CHECK(report.method == "brute-force");
  CHECK(report.lo == Rational(1));
  CHECK(report.hi == Rational(1));
  // Back-to-back transmissions at 0 and 1 give both requests factor 1/2;
  // the floor makes the optimum exactly 1.
  REQUIRE(report.witness.transmissions.size() == 2);
  CHECK(report.witness.transmissions[0].start == Rational(0));
  CHECK(report.witness.transmissions[1].start == Rational(1));
  CHECK(core::validate_trace(inst, report.witness).empty());
  CHECK(core::delay_factor(inst, report.witness).overall == Rational(1));
}

TEST_CASE("brute force merges when capacity is contended") {
  // Tight q/s requests pin the first two slots, so both p requests must be
  // served by the single later transmission. Serving p early instead would push
  // one of the tight requests to factor >= 2.
  core::Instance inst;
  inst.mode = core::Mode::Broadcast;
  inst.machines = 1;
  inst.pages.lengths["p"] = 1;
  inst.pages.lengths["q"] = 1;
  inst.pages.lengths["s"] = 1;
  auto add = [&](const char* id, const Rational& arrival,
                 const Rational& deadline, const char* page) {
    core::Request r;
    r.id = id;
    r.arrival = arrival;
    r.deadline = deadline;
    r.page = page;
    r.index = int(inst.requests.size());
    inst.requests.push_back(r);
  };
  add("a", Rational(0), Rational(8), "p");
  add("b", Rational(0), Rational(1), "q");
  add("c", Rational(1), Rational(2), "s");
  add("e", Rational(2), Rational(4), "p");

  auto report = oracles::optimal_alpha_broadcast_bruteforce(
      inst, Rational(1), Rational(4), Rational(1));
  CHECK(report.lo == Rational(1));
  CHECK(report.hi == Rational(1));
  CHECK(core::validate_trace(inst, report.witness).empty());
  CHECK(core::delay_factor(inst, report.witness).overall == report.lo);
  int p_count = 0;
  for (const auto& txn : report.witness.transmissions)
    if (txn.page == "p") ++p_count;
  CHECK(p_count == 1);
}

TEST_CASE("default_slot folds arrival gaps and page lengths") {
  core::Instance inst;
  inst.mode = core::Mode::Broadcast;
  inst.machines = 1;
  inst.pages.lengths["p"] = 2;
  auto add = [&](const char* id, const Rational& a) {
    core::Request r;
    r.id = id;
    r.arrival = a;
    r.deadline = a + 4;
    r.page = "p";
    r.index = int(inst.requests.size());
    inst.requests.push_back(r);
  };
  add("a", Rational(0));
  add("b", rat(3, 2));
  add("c", Rational(2));
  CHECK(oracles::default_slot(inst) == rat(1, 2));

  // The slot never shrinks below 1/4.
  core::Instance fine;
  fine.mode = core::Mode::Broadcast;
  fine.machines = 1;
  fine.pages.lengths["p"] = rat(1, 8);
  core::Request r;
  r.id = "a"; r.arrival = 0; r.deadline = 1; r.page = "p"; r.index = 0;
  fine.requests = {r};
  CHECK(oracles::default_slot(fine) == rat(1, 4));
}

TEST_CASE("brute-force guards reject oversized searches") {
  // 64 requests exceed the bitmask budget.
  core::Instance big;
  big.mode = core::Mode::Broadcast;
  big.machines = 1;
  big.pages.lengths["p"] = 1;
  for (int i = 0; i < 64; ++i) {
    core::Request r;
    r.id = "r" + std::to_string(i);
    r.arrival = i;
    r.deadline = Rational(i) + 2;
    r.page = "p";
    r.index = i;
    big.requests.push_back(r);
  }
  CHECK_THROWS_AS(oracles::optimal_alpha_broadcast_bruteforce(
                      big, Rational(1), Rational(100), Rational(1)),
                  oracles::OracleGuardError);

  // 4 pages over 64 slots blow the pages^slots cap.
  core::Instance wide;
  wide.mode = core::Mode::Broadcast;
  wide.machines = 1;
  for (const char* p : {"a", "b", "c", "d"}) wide.pages.lengths[p] = 1;
  core::Request r;
  r.id = "r0"; r.arrival = 0; r.deadline = 8; r.page = "a"; r.index = 0;
  wide.requests = {r};
  CHECK_THROWS_AS(oracles::optimal_alpha_broadcast_bruteforce(
                      wide, Rational(1), Rational(16), rat(1, 4)),
                  oracles::OracleGuardError);
}

TEST_CASE("brute force lower-bounds every online run") {
  for (std::uint64_t seed = 30; seed < 38; ++seed) {
    gen::GenSpec spec;
    spec.profile = "broadcast-random";
    spec.seed = seed;
    spec.count = 5;
    spec.pages = 3;
    auto inst = gen::generate(spec);

    Rational slot = oracles::default_slot(inst);
    TimePoint horizon = oracles::default_brute_horizon(inst, Rational(1), slot);
    oracles::OracleReport report;
    try {
      report = oracles::optimal_alpha_broadcast_bruteforce(inst, Rational(1),
                                                           horizon, slot);
    } catch (const oracles::OracleGuardError&) {
      continue;  // another seed will be small enough
    }
    CHECK(report.lo >= Rational(1));
    CHECK(core::validate_trace(inst, report.witness).empty());
    CHECK(core::delay_factor(inst, report.witness).overall == report.lo);

    engine::EngineConfig config;
    config.no_default_horizon = true;
    broadcast::FifoScheduler fifo;
    engine::StaticSource fifo_source(inst);
    auto fifo_run = engine::simulate(fifo_source, fifo, config);
    CHECK(core::delay_factor(fifo_run.realized, fifo_run.trace).overall >=
          report.lo);

    broadcast::SsfwUnitScheduler waity(rat(1, 4));
    engine::StaticSource waity_source(inst);
    auto waity_run = engine::simulate(waity_source, waity, config);
    CHECK(core::delay_factor(waity_run.realized, waity_run.trace).overall >=
          report.lo);
  }
}
