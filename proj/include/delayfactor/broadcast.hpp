#pragma once

#include "delayfactor/engine.hpp"

#include <set>

namespace delayfactor::broadcast {

/// Indices into view.alive (ascending) of the unsatisfied, un-started
/// requests whose waiting time meets the threshold right now:
/// now - a >= c * alpha_t * S.
std::vector<int> ssfw_eligible(const engine::StateView& view, const Rational& c);

/// Shortest-slack-first with waiting, unit pages, non-preemptive: once a
/// transmission starts it runs to completion. Eligibility is sticky — a
/// request that ever met the waiting threshold stays eligible even when
/// alpha_t later rises. Requires c in (0,1).
class SsfwUnitScheduler : public engine::Scheduler {
 public:
  explicit SsfwUnitScheduler(const Rational& c);
  std::string name() const override { return "ssfw"; }
  std::vector<engine::Action> decide(const engine::StateView& view) override;
  std::optional<TimePoint> next_wakeup(const engine::StateView& view) override;
  std::optional<Rational> wait_c() const override { return c_; }

 private:
  void refreeze(const engine::StateView& view);

  Rational c_;
  std::set<int> frozen_;  // request indices whose eligibility is locked in
};

/// Shortest-slack-first with waiting for varying page sizes, preemptive.
/// Candidates are the in-flight transmissions (keyed by their trigger's
/// slack; exempt from further waiting) and the eligible un-started requests
/// (keyed by their own slack). A new start for a page with an in-flight
/// transmission is considered only when its slack is strictly smaller than
/// the transmission trigger's — such a start abandons the old transmission
/// and discards its progress; cross-page preemption retains progress.
/// Requires c in (0,1).
class SsfwVaryingScheduler : public engine::Scheduler {
 public:
  explicit SsfwVaryingScheduler(const Rational& c);
  std::string name() const override { return "ssfw-varying"; }
  std::vector<engine::Action> decide(const engine::StateView& view) override;
  std::optional<TimePoint> next_wakeup(const engine::StateView& view) override;
  std::optional<Rational> wait_c() const override { return c_; }

 private:
  void refreeze(const engine::StateView& view);

  Rational c_;
  std::set<int> frozen_;
};

/// Baseline: transmit the page of the earliest-arrived unsatisfied request,
/// non-preemptively. Ties by (page id, request index). No waiting.
class FifoScheduler : public engine::Scheduler {
 public:
  std::string name() const override { return "fifo"; }
  std::vector<engine::Action> decide(const engine::StateView& view) override;
};

/// Trace checkers. Each returns human-readable violation strings; empty
/// means the property holds.

/// A completed transmission of page p starting at t1 satisfies exactly the
/// requests for p, outstanding at t1, with arrival <= t1; requests arriving
/// later stay unsatisfied until a later transmission.
std::vector<std::string> check_merge_window(const core::Instance& inst,
                                            const core::ScheduleTrace& trace);

/// Every transmission's trigger met the waiting threshold at some instant
/// t_e <= start: t_e - a >= c * alpha(t_e) * S, with alpha reconstructed
/// from the trace (eligibility is sticky, so any earlier crossing counts).
std::vector<std::string> check_waiting(const core::Instance& inst,
                                       const core::ScheduleTrace& trace,
                                       const Rational& c);

/// Busy window of the witness w (maximum delay factor, ties by earliest
/// finish then arrival/index): from t' = a_w + c * max(f_w - a_w, S_w) to
/// f_w the machine is never idle, and every transmission STARTED in that
/// window has trigger slack <= S_w. (Transmissions started earlier may
/// still be running inside the window; they are exempt.) Skipped for
/// truncated traces.
std::vector<std::string> check_busy(const core::Instance& inst,
                                    const core::ScheduleTrace& trace,
                                    const Rational& c);

/// Among completed transmissions whose triggers have EQUAL slack,
/// completion order equals start order.
std::vector<std::string> check_start_finish_order(
    const core::Instance& inst, const core::ScheduleTrace& trace);

}  // namespace delayfactor::broadcast
