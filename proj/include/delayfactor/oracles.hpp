#pragma once

#include "delayfactor/core.hpp"

#include <stdexcept>
#include <utility>

namespace delayfactor::oracles {

struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

/// Instance too large for an exhaustive method; callers should shrink the
/// instance (or horizon) rather than retry.
struct OracleGuardError : OracleError {
  explicit OracleGuardError(const std::string& what) : OracleError(what) {}
};

struct FeasibilityResult {
  bool feasible = false;
  /// Meets every virtual deadline when feasible; best effort otherwise.
  core::ScheduleTrace schedule;
};

/// Preemptive earliest-deadline-first on one machine against the virtual
/// deadlines a_i + alpha * S_i. EDF is exactly the m=1 feasibility test:
/// it meets all deadlines iff some schedule does.
FeasibilityResult edf_feasible(const core::Instance& inst,
                               const Rational& alpha, const Rational& speed);

/// Max-flow feasibility for m identical machines against the same virtual
/// deadlines: jobs to atomic event intervals, per-job interval capacity
/// |I| * speed, interval total capacity m * |I| * speed; feasible iff the
/// max flow ships all work. On success the witness schedule is rebuilt
/// from the flow by wrap-around packing inside each interval.
FeasibilityResult flow_feasible(const core::Instance& inst,
                                const Rational& alpha, const Rational& speed,
                                int machines);

struct OracleReport {
  std::string method;  // edf-exact | flow | brute-force
  Rational lo{1};
  Rational hi{1};
  core::ScheduleTrace witness;  // achieves overall delay factor <= hi
  /// Every feasibility probe made, in order (empty for brute-force).
  std::vector<std::pair<Rational, bool>> probes;
};

/// Bracket the optimal delay factor by bisection on the monotone
/// feasibility predicate (EDF for one machine, max flow otherwise).
/// The bracket satisfies hi - lo <= tolerance, no schedule beats lo, and
/// the witness achieves <= hi. The initial upper bound is
/// 1 + max_i (T_end - a_i)/S_i with T_end = last arrival + total work /
/// speed; if it ever probes infeasible it is doubled, up to 64 times.
OracleReport optimal_alpha_unicast(const core::Instance& inst,
                                   const Rational& speed, int machines,
                                   const Rational& tolerance);

/// Default slot width for the brute-force broadcast oracle: the gcd of the
/// arrival gaps (including the gap from time 0 to the first arrival) and
/// the page lengths, never smaller than 1/4.
Rational default_slot(const core::Instance& inst);

/// A horizon that always admits an optimal slotted schedule: idle to the
/// first grid point at or after the last arrival, then every page once.
TimePoint default_brute_horizon(const core::Instance& inst,
                                const Rational& speed, const Rational& slot);

/// Exact optimum over slotted broadcast schedules: at each decision point
/// either idle one slot or transmit a page some arrived, unsatisfied
/// request wants (the transmission occupies [t, t + len/speed) and
/// satisfies the page's requests with arrival <= t). Memoized min-max
/// search over (time, satisfied-set); guard: pages^(horizon/slot) <= 10^7
/// and at most 63 requests, else OracleGuardError. Reports lo = hi =
/// alpha* with the replayed witness schedule.
OracleReport optimal_alpha_broadcast_bruteforce(const core::Instance& inst,
                                                const Rational& speed,
                                                const TimePoint& horizon,
                                                const Rational& slot);

}  // namespace delayfactor::oracles
