#pragma once

#include "delayfactor/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace delayfactor::engine {

struct EngineError : std::runtime_error {
  explicit EngineError(const std::string& what) : std::runtime_error(what) {}
};

struct EngineConfig {
  Rational speed{1};
  int machines = 1;
  /// Hard stop. Defaults to 4 * (last arrival + total work / speed) for
  /// static sources; adaptive bounded sources may run without one.
  std::optional<TimePoint> horizon;
  /// Drop the source's default horizon and run a bounded source to
  /// completion. Waiting schedulers legitimately outlast the static
  /// default (an eligibility wait of c * alpha * S is not work), so ratio
  /// experiments set this instead of guessing a larger cap.
  bool no_default_horizon = false;
};

/// Event kinds in processing order at an equal time point: completions are
/// settled first, then arrivals, then eligibility crossings, then
/// preemption checks; the horizon cut comes last.
enum class EventKind {
  Completion = 0,
  Arrival = 1,
  EligibilityCrossing = 2,
  PreemptionCheck = 3,
  Horizon = 4,
};

struct SimEvent {
  TimePoint time{0};
  EventKind kind = EventKind::PreemptionCheck;

  friend bool operator<(const SimEvent& a, const SimEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  }
};

/// One arrived, not-yet-satisfied request as the scheduler sees it.
struct AliveEntry {
  int request_index = -1;       // into the realized instance
  const core::Request* request = nullptr;
  Rational remaining{0};        // unicast: work left
  bool started = false;         // broadcast: some transmission was started
                                // for this request as trigger (and not
                                // superseded by satisfaction)
};

/// In-flight broadcast transmission state.
struct TxnState {
  int record_index = -1;        // into trace.transmissions
  core::PageId page;
  int trigger_index = -1;
  Duration trigger_slack{0};
  TimePoint start{0};
  Rational progress{0};
  Rational length{0};
};

struct MachineView {
  /// Subject currently assigned: alive index (unicast) or active
  /// transmission index (broadcast); nullopt when idle.
  std::optional<int> running;
};

/// Snapshot handed to schedulers at each settled event instant. Only
/// already-arrived, unsatisfied requests are visible (online-ness).
struct StateView {
  TimePoint now{0};
  Rational speed{1};
  Rational alpha_t{1};    // max(1, finished factors, alive ages)
  Rational alpha_fin{1};  // max(1, finished factors)
  const std::vector<AliveEntry>* alive = nullptr;
  const std::vector<TxnState>* transmissions = nullptr;  // active only
  std::vector<MachineView> machines;
};

/// Per-machine decision.
struct Action {
  enum class Type {
    Idle,
    Work,      // unicast: run alive[subject]
    Resume,    // broadcast: continue transmissions[subject]
    Start,     // broadcast: new transmission triggered by alive[subject]
  };
  Type type = Type::Idle;
  int subject = -1;

  static Action idle() { return {}; }
  static Action work(int alive_index) { return {Type::Work, alive_index}; }
  static Action resume(int txn_index) { return {Type::Resume, txn_index}; }
  static Action start(int alive_index) { return {Type::Start, alive_index}; }
};

/// Scheduling policy. decide() is called exactly once per settled event
/// instant and must be a deterministic function of the view (plus state the
/// policy accumulated through its hooks). It must never reference requests
/// that have not arrived — the view only contains arrived ones.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Action> decide(const StateView& view) = 0;
  /// Called once per arrival, after it joins the alive set.
  virtual void on_arrival(const StateView& view, int alive_index) {
    (void)view; (void)alive_index;
  }
  /// Next instant strictly after view.now at which the policy wants to be
  /// woken even if no arrival or completion occurs (eligibility crossings).
  virtual std::optional<TimePoint> next_wakeup(const StateView& view) {
    (void)view;
    return std::nullopt;
  }
  /// Waiting parameter, when the policy has one (ssfw schedulers).
  virtual std::optional<Rational> wait_c() const { return std::nullopt; }
};

/// Where requests come from. Static sources replay an instance; adaptive
/// sources may inspect the trace built so far (never beyond `now`).
class RequestSource {
 public:
  virtual ~RequestSource() = default;
  virtual core::Mode mode() const = 0;
  virtual core::PageCatalog pages() const { return {}; }
  /// Earliest time >= now at which this source may emit next. nullopt when
  /// exhausted. May move earlier after new trace events, never earlier
  /// than now.
  virtual std::optional<TimePoint> peek(const core::ScheduleTrace& trace,
                                        const TimePoint& now) = 0;
  /// Requests arriving exactly at t (arrival fields must equal t). May be
  /// empty if the tentative emission evaporated.
  virtual std::vector<core::Request> take(const core::ScheduleTrace& trace,
                                          const TimePoint& t) = 0;
  /// True when the total number of emissions is a priori finite.
  virtual bool bounded() const = 0;
  /// Horizon applied when the config does not set one. Static sources get a
  /// generous default; adaptive sources default to none (bounded ones simply
  /// run to exhaustion, unbounded ones then require an explicit horizon).
  virtual std::optional<TimePoint> default_horizon(const Rational& speed) const {
    (void)speed;
    return std::nullopt;
  }
};

/// Replays a validated instance.
class StaticSource : public RequestSource {
 public:
  explicit StaticSource(const core::Instance& inst) : inst_(inst) {}
  core::Mode mode() const override { return inst_.mode; }
  core::PageCatalog pages() const override { return inst_.pages; }
  std::optional<TimePoint> peek(const core::ScheduleTrace&,
                                const TimePoint&) override;
  std::vector<core::Request> take(const core::ScheduleTrace&,
                                  const TimePoint& t) override;
  bool bounded() const override { return true; }
  std::optional<TimePoint> default_horizon(const Rational& speed) const override {
    return 4 * (inst_.last_arrival() + inst_.total_work() / speed);
  }
  const core::Instance& instance() const { return inst_; }

 private:
  core::Instance inst_;
  size_t next_ = 0;
};

struct SimResult {
  core::Instance realized;   // the requests that actually arrived
  core::ScheduleTrace trace;
};

/// Observer called at the end of every settled event instant (after the
/// scheduler's decisions were applied).
using Observer = std::function<void(const StateView&)>;

/// Runs the simulation to completion (all satisfied and source exhausted)
/// or to the horizon. Deterministic: identical inputs yield identical
/// traces. Throws EngineError for contract breaches (actions on unknown
/// subjects, same-page restarts without strictly smaller slack, adaptive
/// unbounded sources without a horizon, stalls without a horizon).
SimResult simulate(RequestSource& source, Scheduler& scheduler,
                   const EngineConfig& config, const Observer& observer = {});

/// Earliest t* > t at which some candidate (ineligible) request i starts to
/// satisfy t* - a_i >= c * alpha(t*) * S_i, where
/// alpha(u) = max(alpha_floor, max_j (u - a_j)/S_j) over the alive set.
/// alpha_floor must already include the constant 1 and all finished factors.
/// Candidate crossing times are solved per linear piece of alpha and
/// verified by direct evaluation; nullopt when no candidate crosses.
/// The alive set is assumed fixed after t, so callers must clamp the result
/// by the next arrival/completion.
struct AgeTerm {
  TimePoint arrival{0};
  Duration slack{0};
};
std::optional<TimePoint> next_eligibility_crossing(
    const std::vector<AgeTerm>& candidates, const std::vector<AgeTerm>& alive,
    const Rational& alpha_floor, const Rational& c, const TimePoint& t);

}  // namespace delayfactor::engine
