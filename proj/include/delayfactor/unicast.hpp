#pragma once

#include "delayfactor/engine.hpp"

#include <map>
#include <set>

namespace delayfactor::unicast {

/// The unique integer k with slack in [2^k, 2^{k+1}). Exact (no floating
/// logarithm); negative classes are allowed. Requires slack > 0.
int slack_class(const Rational& slack);

/// Index into `alive` of the request SSF runs next: minimum slack, ties by
/// (arrival, index). `mask` restricts the choice to entries it accepts
/// (empty mask = all). nullopt when nothing qualifies.
std::optional<int> ssf_pick(const std::vector<engine::AliveEntry>& alive,
                            const std::vector<bool>& mask = {});

/// Shortest-slack-first, preemptive, single machine. The newly arrived
/// smaller-slack request takes the machine at its arrival instant.
class SsfScheduler : public engine::Scheduler {
 public:
  std::string name() const override { return "ssf"; }
  std::vector<engine::Action> decide(const engine::StateView& view) override;
};

/// Shortest-slack-first, non-preemptive, single machine: the running
/// request always finishes before the next pick.
class SsfNpScheduler : public engine::Scheduler {
 public:
  std::string name() const override { return "ssf-np"; }
  std::vector<engine::Action> decide(const engine::StateView& view) override;
};

/// Per-machine, per-class volume accounting for SSF-ID.
struct ClassVolumes {
  Rational assigned{0};  // U: total volume ever dispatched to the machine
  Rational residual{0};  // R: dispatched volume not yet processed
  Rational processed() const { return assigned - residual; }  // P = U - R
};

struct MachineClassLedger {
  /// machines[x][k] = volumes of class k on machine x. Sparse: absent
  /// classes hold zero volume.
  std::vector<std::map<int, ClassVolumes>> machines;
};

/// argmin_x of the given per-machine assigned volumes (one class), ties by
/// lowest machine index.
int ssf_id_dispatch(const std::vector<Rational>& assigned_in_class);

/// The four balance families, for every machine pair x,y and every class k
/// present in the ledger:
///   |U^x_{=k}  - U^y_{=k}|  <= 2^{k+1}
///   |U^x_{<=k} - U^y_{<=k}| <= 2^{k+2}
///   |P^x_{<=k} - P^y_{<=k}| <= 2^{k+2}
///   |R^x_{<=k} - R^y_{<=k}| <= 2^{k+3}
/// Bounds at absent classes follow from the next present class below, so
/// checking present classes suffices. Returns human-readable violations.
std::vector<std::string> check_volume_balance(const MachineClassLedger& ledger);

/// SSF with immediate dispatch: an arriving request of class k goes to the
/// machine with the least assigned class-k volume (ties: lowest index) and
/// never migrates; each machine runs SSF on its own queue.
class SsfIdScheduler : public engine::Scheduler {
 public:
  std::string name() const override { return "ssf-id"; }
  void on_arrival(const engine::StateView& view, int alive_index) override;
  std::vector<engine::Action> decide(const engine::StateView& view) override;

  /// Machine each request was dispatched to (request index -> machine).
  const std::map<int, int>& assignment() const { return machine_of_; }
  /// Live ledger: U from dispatch totals, R from the alive view.
  MachineClassLedger ledger(const engine::StateView& view) const;

 private:
  std::vector<std::map<int, Rational>> assigned_;  // per machine: class -> U
  std::map<int, int> machine_of_;
};

/// Witness-interval property of plain SSF traces: no segment overlapping
/// (a_w, f_w) runs a request with slack > S_w, where w is the max-factor
/// witness. Skipped (empty) on truncated traces.
std::vector<std::string> check_ssf_witness_property(
    const core::Instance& inst, const core::ScheduleTrace& trace);

/// Immediate-dispatch shape of a trace: every request's segments live on
/// one machine only. (Dispatch time itself is not observable in a trace;
/// assignment is the machine where the request ran.)
std::vector<std::string> check_non_migratory(const core::Instance& inst,
                                             const core::ScheduleTrace& trace);

/// All instants where ledgers can change: arrivals and segment boundaries,
/// sorted and deduplicated.
std::vector<TimePoint> event_times(const core::Instance& inst,
                                   const core::ScheduleTrace& trace);

/// Rebuilds the dispatch ledgers at time t from a completed trace:
/// U counts requests with arrival <= t on the machine where they ran;
/// R subtracts the work their segments performed up to t. Throws
/// std::invalid_argument on truncated traces or unprocessed requests.
MachineClassLedger ledgers_from_trace(const core::Instance& inst,
                                      const core::ScheduleTrace& trace,
                                      const TimePoint& t);

}  // namespace delayfactor::unicast
