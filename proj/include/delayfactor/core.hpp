#pragma once

#include "delayfactor/rational.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace delayfactor::core {

using RequestId = std::string;
using PageId = std::string;

enum class Mode { Unicast, Broadcast };

/// A client request. In unicast mode `length` is the processing demand and
/// `page` is empty; in broadcast mode `page` names a catalog entry whose
/// length is the transmission demand. The slack deadline - arrival is the
/// denominator of the request's delay factor and never changes.
struct Request {
  RequestId id;
  TimePoint arrival{0};
  TimePoint deadline{0};
  Rational length{0};            // unicast only
  std::optional<PageId> page;    // broadcast only
  int index = -1;                // position in the instance (file order)

  Duration slack() const { return deadline - arrival; }
};

/// Slack of a request: deadline - arrival. Positive for valid requests.
inline Duration slack(const Request& r) { return r.slack(); }

struct PageCatalog {
  // Ordered by page id for deterministic iteration.
  std::map<PageId, Rational> lengths;

  bool has(const PageId& p) const { return lengths.count(p) != 0; }
  const Rational& length(const PageId& p) const { return lengths.at(p); }
  bool unit() const {
    for (const auto& [id, len] : lengths)
      if (len != 1) return false;
    return true;
  }
};

struct Instance {
  Mode mode = Mode::Unicast;
  int machines = 1;
  PageCatalog pages;                 // broadcast only
  std::vector<Request> requests;     // sorted by (arrival, index)

  /// Demand of one request: its own length (unicast) or its page's (broadcast).
  const Rational& demand(const Request& r) const {
    return mode == Mode::Unicast ? r.length : pages.length(*r.page);
  }
  /// Sum of per-request demands (a broadcast upper bound: every request
  /// served by its own transmission).
  Rational total_work() const;
  /// Latest arrival (0 when empty).
  TimePoint last_arrival() const;
  /// max slack / min slack. Requires at least one request.
  Rational delta() const;
};

struct Violation {
  int request_index = -1;  // -1 for instance-level problems
  std::string message;
};

/// Structural validation. Returns all violations, ordered by
/// (request index, discovery order); empty means the instance is well formed.
std::vector<Violation> validate(const Instance& inst);

/// One contiguous stretch of machine time spent on one subject.
/// `subject` is "req:<id>" in unicast mode and "<page>#<ordinal>" in
/// broadcast mode. work == speed * (end - start) always holds.
struct Segment {
  int machine = 0;
  std::string subject;
  TimePoint start{0};
  TimePoint end{0};
  Rational work{0};
};

/// Lifetime record of one broadcast transmission. A transmission is created
/// by a trigger request, may be paused/resumed (cross-page preemption), and
/// either completes — satisfying every outstanding request for the page that
/// arrived at or before `start` — or is abandoned by a strictly
/// smaller-slack restart of the same page, discarding its progress.
struct TransmissionRecord {
  PageId page;
  int ordinal = 0;            // per-page counter, 1-based
  int trigger_index = -1;     // request that started it
  TimePoint start{0};
  std::optional<TimePoint> completion;
  std::optional<TimePoint> abandoned_at;
  Rational discarded_work{0};

  std::string subject() const {
    return page + "#" + std::to_string(ordinal);
  }
};

struct SatisfactionRecord {
  int request_index = -1;
  TimePoint time{0};
};

/// Full result of a run: what each machine did and when each request was
/// satisfied. Exact; serializes bit-identically for identical inputs.
struct ScheduleTrace {
  Mode mode = Mode::Unicast;
  int machines = 1;
  Rational speed{1};
  std::string scheduler;                      // informational
  std::optional<Rational> wait_c;             // ssfw schedulers only
  std::vector<Segment> segments;              // in close order
  std::vector<TransmissionRecord> transmissions;  // broadcast only
  std::vector<SatisfactionRecord> satisfactions;  // in satisfaction order
  bool truncated = false;                     // hit the horizon
  std::optional<TimePoint> horizon;

  std::optional<TimePoint> satisfaction_time(int request_index) const;
};

struct DelayFactorReport {
  Rational overall{1};
  std::vector<Rational> per_request;  // indexed like instance.requests
  int witness_index = -1;             // -1 when there are no requests
  RequestId witness_id;
};

struct UnsatisfiedError : std::runtime_error {
  explicit UnsatisfiedError(const std::string& what) : std::runtime_error(what) {}
};

/// Delay factor of every request plus the overall factor
/// max(1, max_i (f_i - a_i) / S_i). Throws UnsatisfiedError naming the first
/// unsatisfied request if the trace does not satisfy the whole instance.
/// Witness ties break toward the smallest (arrival, index).
DelayFactorReport delay_factor(const Instance& inst, const ScheduleTrace& trace);

/// The running maximum alpha_t at time t: max over 1, the factors of
/// requests satisfied by t, and (t - a)/S over requests arrived and still
/// unsatisfied at t. alpha_0 = 1; nondecreasing in t.
Rational current_alpha(const Instance& inst, const ScheduleTrace& trace,
                       const TimePoint& t);

/// Replays a trace against its instance and reports every violated trace
/// invariant: segment overlap, work accounting, satisfaction-rule breaches,
/// missing or duplicated satisfaction records, subjects that run before
/// their arrival. Used by the `check` tool and the test suites.
std::vector<Violation> validate_trace(const Instance& inst,
                                      const ScheduleTrace& trace);

}  // namespace delayfactor::core
