#include "delayfactor/broadcast.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

namespace delayfactor::broadcast {

std::vector<int> ssfw_eligible(const engine::StateView& view, const Rational& c) {
  std::vector<int> out;
  for (size_t i = 0; i < view.alive->size(); ++i) {
    const engine::AliveEntry& e = (*view.alive)[i];
    if (e.started) continue;
    const core::Request& r = *e.request;
    if (view.now - r.arrival >= c * view.alpha_t * r.slack())
      out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

Rational checked_c(const Rational& c, const char* who) {
  if (!(c > 0 && c < 1))
    throw std::invalid_argument(std::string(who) + ": c must lie in (0,1)");
  return c;
}

void freeze_eligible(const engine::StateView& view, const Rational& c,
                     std::set<int>& frozen) {
  for (int i : ssfw_eligible(view, c))
    frozen.insert((*view.alive)[i].request_index);
}

/// Earliest instant > now at which an un-started, not-yet-frozen request
/// meets the waiting threshold, assuming no arrival/completion intervenes
/// (the engine re-asks after every event).
std::optional<TimePoint> crossing_wakeup(const engine::StateView& view,
                                         const Rational& c,
                                         const std::set<int>& frozen) {
  std::vector<engine::AgeTerm> candidates;
  std::vector<engine::AgeTerm> ages;
  for (const engine::AliveEntry& e : *view.alive) {
    engine::AgeTerm term{e.request->arrival, e.request->slack()};
    ages.push_back(term);
    if (!e.started && !frozen.count(e.request_index)) candidates.push_back(term);
  }
  if (candidates.empty()) return std::nullopt;
  return engine::next_eligibility_crossing(candidates, ages, view.alpha_fin, c,
                                           view.now);
}

}  // namespace

SsfwUnitScheduler::SsfwUnitScheduler(const Rational& c)
    : c_(checked_c(c, "ssfw")) {}

void SsfwUnitScheduler::refreeze(const engine::StateView& view) {
  freeze_eligible(view, c_, frozen_);
}

std::vector<engine::Action> SsfwUnitScheduler::decide(
    const engine::StateView& view) {
  if (view.machines.size() != 1)
    throw engine::EngineError("ssfw runs on a single machine");
  refreeze(view);
  if (view.machines[0].running)
    return {engine::Action::resume(*view.machines[0].running)};
  using Key = std::tuple<Rational, TimePoint, core::PageId, int>;
  std::optional<Key> best_key;
  int best = -1;
  for (size_t i = 0; i < view.alive->size(); ++i) {
    const engine::AliveEntry& e = (*view.alive)[i];
    if (e.started || !frozen_.count(e.request_index)) continue;
    const core::Request& r = *e.request;
    Key key{r.slack(), r.arrival, *r.page, r.index};
    if (!best_key || key < *best_key) {
      best_key = std::move(key);
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return {engine::Action::idle()};
  return {engine::Action::start(best)};
}

std::optional<TimePoint> SsfwUnitScheduler::next_wakeup(
    const engine::StateView& view) {
  return crossing_wakeup(view, c_, frozen_);
}

SsfwVaryingScheduler::SsfwVaryingScheduler(const Rational& c)
    : c_(checked_c(c, "ssfw-varying")) {}

void SsfwVaryingScheduler::refreeze(const engine::StateView& view) {
  freeze_eligible(view, c_, frozen_);
}

std::vector<engine::Action> SsfwVaryingScheduler::decide(
    const engine::StateView& view) {
  if (view.machines.size() != 1)
    throw engine::EngineError("ssfw-varying runs on a single machine");
  refreeze(view);
  // Slack of the trigger of the (unique) in-flight transmission per page;
  // a new same-page start must undercut it strictly.
  std::map<core::PageId, Rational> active_slack;
  for (const engine::TxnState& tx : *view.transmissions)
    active_slack[tx.page] = tx.trigger_slack;
  // Key: (slack, tier, time, page, index). Tier 0 = in-flight transmission
  // (time = its start), tier 1 = fresh start (time = request arrival), so
  // an in-flight transmission wins slack ties against a fresh start.
  using Key = std::tuple<Rational, int, TimePoint, core::PageId, int>;
  std::optional<Key> best_key;
  engine::Action best = engine::Action::idle();
  auto consider = [&](Key key, engine::Action action) {
    if (!best_key || key < *best_key) {
      best_key = std::move(key);
      best = action;
    }
  };
  for (size_t j = 0; j < view.transmissions->size(); ++j) {
    const engine::TxnState& tx = (*view.transmissions)[j];
    consider({tx.trigger_slack, 0, tx.start, tx.page, static_cast<int>(j)},
             engine::Action::resume(static_cast<int>(j)));
  }
  for (size_t i = 0; i < view.alive->size(); ++i) {
    const engine::AliveEntry& e = (*view.alive)[i];
    if (e.started || !frozen_.count(e.request_index)) continue;
    const core::Request& r = *e.request;
    auto it = active_slack.find(*r.page);
    if (it != active_slack.end() && !(r.slack() < it->second)) continue;
    consider({r.slack(), 1, r.arrival, *r.page, r.index},
             engine::Action::start(static_cast<int>(i)));
  }
  return {best};
}

std::optional<TimePoint> SsfwVaryingScheduler::next_wakeup(
    const engine::StateView& view) {
  return crossing_wakeup(view, c_, frozen_);
}

std::vector<engine::Action> FifoScheduler::decide(const engine::StateView& view) {
  if (view.machines.size() != 1)
    throw engine::EngineError("fifo runs on a single machine");
  if (view.machines[0].running)
    return {engine::Action::resume(*view.machines[0].running)};
  using Key = std::tuple<TimePoint, core::PageId, int>;
  std::optional<Key> best_key;
  int best = -1;
  for (size_t i = 0; i < view.alive->size(); ++i) {
    const core::Request& r = *(*view.alive)[i].request;
    Key key{r.arrival, *r.page, r.index};
    if (!best_key || key < *best_key) {
      best_key = std::move(key);
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return {engine::Action::idle()};
  return {engine::Action::start(best)};
}

namespace {

std::map<int, TimePoint> satisfaction_times(const core::ScheduleTrace& trace) {
  std::map<int, TimePoint> sat;
  for (const core::SatisfactionRecord& s : trace.satisfactions)
    sat.emplace(s.request_index, s.time);
  return sat;
}

}  // namespace

std::vector<std::string> check_merge_window(const core::Instance& inst,
                                            const core::ScheduleTrace& trace) {
  std::vector<std::string> out;
  std::map<int, TimePoint> sat = satisfaction_times(trace);
  std::vector<const core::TransmissionRecord*> done;
  for (const core::TransmissionRecord& t : trace.transmissions)
    if (t.completion) done.push_back(&t);
  std::sort(done.begin(), done.end(),
            [](const core::TransmissionRecord* a,
               const core::TransmissionRecord* b) {
              return *a->completion < *b->completion;
            });

  // Every satisfaction must coincide with the completion of a same-page
  // transmission that started at or after the request's arrival.
  std::map<std::pair<core::PageId, TimePoint>, const core::TransmissionRecord*>
      by_completion;
  for (const core::TransmissionRecord* t : done)
    by_completion[{t->page, *t->completion}] = t;
  for (const auto& [idx, time] : sat) {
    const core::Request& r = inst.requests[idx];
    auto it = by_completion.find({*r.page, time});
    if (it == by_completion.end()) {
      out.push_back("request '" + r.id + "' satisfied at " + to_string(time) +
                    " with no transmission of " + *r.page +
                    " completing then");
    } else if (r.arrival > it->second->start) {
      out.push_back("request '" + r.id + "' arrived at " +
                    to_string(r.arrival) +
                    ", after the start of the transmission satisfying it (" +
                    to_string(it->second->start) + ")");
    }
  }

  // Every completed transmission must sweep up ALL outstanding same-page
  // requests that arrived at or before its start.
  for (const core::TransmissionRecord* t : done) {
    for (const core::Request& r : inst.requests) {
      if (!r.page || *r.page != t->page) continue;
      if (r.arrival > t->start) continue;
      auto it = sat.find(r.index);
      if (it != sat.end() && it->second < *t->completion) continue;  // earlier
      if (it == sat.end() || it->second != *t->completion)
        out.push_back("request '" + r.id + "' (arrival " +
                      to_string(r.arrival) +
                      ") was outstanding but not satisfied by the " + t->page +
                      " transmission [" + to_string(t->start) + "," +
                      to_string(*t->completion) + ")");
    }
  }
  return out;
}

std::vector<std::string> check_waiting(const core::Instance& inst,
                                       const core::ScheduleTrace& trace,
                                       const Rational& c) {
  std::vector<std::string> out;
  std::map<int, TimePoint> sat = satisfaction_times(trace);
  std::set<TimePoint> breaks;
  for (const core::Request& r : inst.requests) breaks.insert(r.arrival);
  for (const core::SatisfactionRecord& s : trace.satisfactions)
    breaks.insert(s.time);

  // True iff w met the waiting threshold at some instant in [a_w, t1].
  auto crossed_by = [&](const core::Request& w, const TimePoint& t1) -> bool {
    std::vector<TimePoint> grid{w.arrival};
    for (const TimePoint& b : breaks)
      if (b > w.arrival && b < t1) grid.push_back(b);
    grid.push_back(t1);
    for (size_t k = 0; k < grid.size(); ++k) {
      const TimePoint& u1 = grid[k];
      Rational alpha_fin{1};
      std::vector<engine::AgeTerm> ages;
      for (const core::Request& r : inst.requests) {
        if (r.arrival > u1) continue;
        auto it = sat.find(r.index);
        if (it != sat.end() && it->second <= u1) {
          Rational f = (it->second - r.arrival) / r.slack();
          if (f > alpha_fin) alpha_fin = f;
        } else {
          ages.push_back({r.arrival, r.slack()});
        }
      }
      Rational alpha = alpha_fin;
      for (const engine::AgeTerm& a : ages) {
        Rational g = (u1 - a.arrival) / a.slack;
        if (g > alpha) alpha = g;
      }
      if (u1 - w.arrival >= c * alpha * w.slack()) return true;
      if (k + 1 < grid.size()) {
        auto cross = engine::next_eligibility_crossing(
            {{w.arrival, w.slack()}}, ages, alpha_fin, c, u1);
        if (cross && *cross <= grid[k + 1]) return true;
      }
    }
    return false;
  };

  for (const core::TransmissionRecord& t : trace.transmissions) {
    const core::Request& w = inst.requests[t.trigger_index];
    if (!crossed_by(w, t.start))
      out.push_back("transmission " + t.subject() + " started at " +
                    to_string(t.start) + " before its trigger '" + w.id +
                    "' met the waiting threshold");
  }
  return out;
}

std::vector<std::string> check_busy(const core::Instance& inst,
                                    const core::ScheduleTrace& trace,
                                    const Rational& c) {
  std::vector<std::string> out;
  if (trace.truncated || inst.requests.empty()) return out;
  std::map<int, TimePoint> sat = satisfaction_times(trace);

  const core::Request* w = nullptr;
  TimePoint fw{0};
  Rational best{-1};
  for (const core::Request& r : inst.requests) {
    auto it = sat.find(r.index);
    if (it == sat.end()) {
      out.push_back("request '" + r.id + "' has no satisfaction record");
      return out;
    }
    Rational f = (it->second - r.arrival) / r.slack();
    bool take = false;
    if (f > best) {
      take = true;
    } else if (f == best && w) {
      if (it->second != fw)
        take = it->second < fw;
      else
        take = std::tie(r.arrival, r.index) < std::tie(w->arrival, w->index);
    }
    if (take) {
      best = f;
      w = &r;
      fw = it->second;
    }
  }

  Rational span = fw - w->arrival;
  Rational floor_span = w->slack();
  Rational reach = span > floor_span ? span : floor_span;
  TimePoint tprime = w->arrival + c * reach;
  if (!(tprime < fw)) return out;  // empty window: nothing to enforce

  // No idle time in [tprime, fw).
  std::vector<std::pair<TimePoint, TimePoint>> spans;
  for (const core::Segment& s : trace.segments) spans.push_back({s.start, s.end});
  std::sort(spans.begin(), spans.end());
  TimePoint covered = tprime;
  for (const auto& [b, e] : spans) {
    if (e <= covered) continue;
    if (b > covered) {
      TimePoint gap_end = b < fw ? b : fw;
      if (covered < gap_end)
        out.push_back("machine idle in [" + to_string(covered) + "," +
                      to_string(gap_end) + ") inside the busy window [" +
                      to_string(tprime) + "," + to_string(fw) + ") of '" +
                      w->id + "'");
    }
    if (e > covered) covered = e;
    if (covered >= fw) break;
  }
  if (covered < fw)
    out.push_back("machine idle in [" + to_string(covered) + "," +
                  to_string(fw) + ") inside the busy window [" +
                  to_string(tprime) + "," + to_string(fw) + ") of '" + w->id +
                  "'");

  // Transmissions started inside the window carry slack <= S_w.
  for (const core::TransmissionRecord& t : trace.transmissions) {
    if (t.start < tprime || t.start >= fw) continue;
    const core::Request& x = inst.requests[t.trigger_index];
    if (x.slack() > w->slack())
      out.push_back("transmission " + t.subject() + " started at " +
                    to_string(t.start) + " with trigger slack " +
                    to_string(x.slack()) + " > witness slack " +
                    to_string(w->slack()));
  }
  return out;
}

std::vector<std::string> check_start_finish_order(
    const core::Instance& inst, const core::ScheduleTrace& trace) {
  std::vector<std::string> out;
  struct Row {
    TimePoint start;
    TimePoint completion;
    std::string subject;
  };
  std::map<Rational, std::vector<Row>> by_slack;
  for (const core::TransmissionRecord& t : trace.transmissions) {
    if (!t.completion) continue;
    const core::Request& x = inst.requests[t.trigger_index];
    by_slack[x.slack()].push_back({t.start, *t.completion, t.subject()});
  }
  for (auto& [slack, rows] : by_slack) {
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.start < b.start; });
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].completion < rows[i - 1].completion)
        out.push_back("equal-slack transmissions " + rows[i - 1].subject +
                      " and " + rows[i].subject +
                      " finish out of start order");
    }
  }
  return out;
}

}  // namespace delayfactor::broadcast
