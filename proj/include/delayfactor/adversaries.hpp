#pragma once

#include "delayfactor/engine.hpp"

#include <set>

namespace delayfactor::adversaries {

struct AdversaryError : std::runtime_error {
  explicit AdversaryError(const std::string& what) : std::runtime_error(what) {}
};

struct EmissionRecord {
  core::RequestId request_id;
  std::string reason;  // type-1 | type-2 | type-3 | phase-1 | phase-2 | phase-3
};

/// What the adversary did and what it proves: the emitted requests, an
/// offline speed-1 certificate schedule covering all of them, and the
/// recomputed claims (every value derived from the rounded emission
/// parameters, nothing quoted).
struct AdversaryTranscript {
  std::vector<EmissionRecord> emissions;
  std::string branch;  // type-1-unfinished | type-3-stream | cyclic
  core::ScheduleTrace certificate;
  /// Claimed floor on the delay factor of the scheduler class under test
  /// (work-conserving at speed 1 for the stretch adversary; any at speed 1
  /// for the cyclic one).
  Rational online_lower_bound{0};
  /// Exact delay factor of the certificate schedule.
  Rational certificate_upper_bound{1};
  Rational claimed_ratio{0};    // online_lower_bound / certificate_upper_bound
  Rational ratio_threshold{0};  // theorem threshold from emitted quantities
};

/// Adaptive unicast source with three request waves: one long request at
/// time 0 (length = slack = P), a train of medium requests (length = slack
/// = ~P^0.6) saturating [P - P^0.6, D), and — only if the long request was
/// finished by the decision instant D — a stream of ~P^1.2 unit requests
/// with slack 1. D is ~P^1.16 aligned up to the train's grid; irrational
/// powers are rounded once onto the 2^-20 grid and every claim is
/// recomputed from the rounded values. Construction throws when the
/// required inequalities lose their slack (P ≥ 16 is necessary, not
/// always sufficient — the error names the failing inequality).
class UnicastStretchAdversary : public engine::RequestSource {
 public:
  explicit UnicastStretchAdversary(const Rational& size_ratio);

  core::Mode mode() const override { return core::Mode::Unicast; }
  std::optional<TimePoint> peek(const core::ScheduleTrace& trace,
                                const TimePoint& now) override;
  std::vector<core::Request> take(const core::ScheduleTrace& trace,
                                  const TimePoint& t) override;
  bool bounded() const override { return true; }

  const Rational& size_ratio() const { return p_; }
  const Rational& medium_length() const { return p6_; }       // rounded P^0.6
  const Rational& grid() const { return slot_; }              // 2^-20
  const TimePoint& decision_time() const { return d_; }       // aligned P^1.16
  long medium_count() const { return k_ + 1; }
  long unit_count() const { return n3_; }
  /// 0 before the decision instant, then 1 (long request unfinished) or 3.
  int branch() const { return branch_; }

  /// Available once the decision instant has passed in the driving run.
  AdversaryTranscript transcript() const;

 private:
  core::Request make_type3(long i, const TimePoint& arrival) const;

  Rational p_;       // P
  Rational slot_;    // rounding grid, 2^-20
  Rational p6_;      // P^0.6 on the grid (nearest)
  Rational p116_;    // P^1.16 on the grid (nearest)
  Rational p12_;     // P^1.2 on the grid (nearest)
  long k_ = 0;       // D = P + k * p6, smallest k with D >= p116
  TimePoint d_{0};
  long n3_ = 0;      // unit-request count, round(p12 - p6)
  Rational lb1_{0}, lb3_{0};      // online lower bounds per branch
  Rational cert3_{0};             // certificate factor on the unit branch
  Rational thr1_{0}, thr3_{0};    // theorem thresholds per branch

  std::vector<core::Request> statics_;  // long request + medium train
  size_t cursor_ = 0;
  int branch_ = 0;
  long t3_emitted_ = 0;
  std::vector<EmissionRecord> emissions_;
};

/// Adaptive broadcast source over n unit pages: at time 0 it requests
/// pages 1..n/2 with deadline n/2; through (0, n/4] it re-requests any of
/// those pages immediately when a transmission of it completes (deadline
/// still the absolute n/2); from time n/2 it cycles slack-1 requests for
/// pages n/2+1..n (page n/2+i at j*(n/2)+i-1, j = 1..n). The certificate
/// serves never-re-requested pages first and re-requested pages in the
/// final slots before n/2, then every cyclic request on arrival — delay
/// factor exactly 1.
class BroadcastCyclicAdversary : public engine::RequestSource {
 public:
  explicit BroadcastCyclicAdversary(int n);

  core::Mode mode() const override { return core::Mode::Broadcast; }
  core::PageCatalog pages() const override { return catalog_; }
  std::optional<TimePoint> peek(const core::ScheduleTrace& trace,
                                const TimePoint& now) override;
  std::vector<core::Request> take(const core::ScheduleTrace& trace,
                                  const TimePoint& t) override;
  bool bounded() const override { return true; }

  int n() const { return n_; }
  core::PageId page_id(int number) const;  // 1-based

  AdversaryTranscript transcript() const;

 private:
  bool mirrors(const core::PageId& page) const;

  int n_ = 0;
  Rational half_{0};     // n/2
  Rational quarter_{0};  // n/4
  core::PageCatalog catalog_;
  std::vector<core::Request> statics_;  // phase 1 and phase 3
  size_t cursor_ = 0;
  std::set<size_t> spawned_;  // positions into trace.transmissions
  long spawn_count_ = 0;
  /// Every emitted request in admission order (phase 2 interleaved).
  std::vector<core::Request> emitted_;
  std::vector<EmissionRecord> emissions_;
};

}  // namespace delayfactor::adversaries
