#include "delayfactor/unicast.hpp"

#include <algorithm>
#include <stdexcept>

namespace delayfactor::unicast {

int slack_class(const Rational& slack) {
  if (slack <= 0) throw std::invalid_argument("slack_class: slack must be positive");
  return floor_log2(slack);
}

std::optional<int> ssf_pick(const std::vector<engine::AliveEntry>& alive,
                            const std::vector<bool>& mask) {
  std::optional<int> best;
  for (size_t i = 0; i < alive.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (!best) {
      best = static_cast<int>(i);
      continue;
    }
    const core::Request& a = *alive[i].request;
    const core::Request& b = *alive[*best].request;
    if (a.slack() != b.slack()) {
      if (a.slack() < b.slack()) best = static_cast<int>(i);
    } else if (a.arrival != b.arrival) {
      if (a.arrival < b.arrival) best = static_cast<int>(i);
    } else if (a.index < b.index) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<engine::Action> SsfScheduler::decide(const engine::StateView& view) {
  if (view.machines.size() != 1)
    throw engine::EngineError("ssf runs on a single machine");
  auto pick = ssf_pick(*view.alive);
  if (!pick) return {engine::Action::idle()};
  return {engine::Action::work(*pick)};
}

std::vector<engine::Action> SsfNpScheduler::decide(const engine::StateView& view) {
  if (view.machines.size() != 1)
    throw engine::EngineError("ssf-np runs on a single machine");
  if (view.machines[0].running)
    return {engine::Action::work(*view.machines[0].running)};
  auto pick = ssf_pick(*view.alive);
  if (!pick) return {engine::Action::idle()};
  return {engine::Action::work(*pick)};
}

int ssf_id_dispatch(const std::vector<Rational>& assigned_in_class) {
  if (assigned_in_class.empty())
    throw std::invalid_argument("ssf_id_dispatch: no machines");
  int best = 0;
  for (size_t x = 1; x < assigned_in_class.size(); ++x)
    if (assigned_in_class[x] < assigned_in_class[best]) best = static_cast<int>(x);
  return best;
}

void SsfIdScheduler::on_arrival(const engine::StateView& view, int alive_index) {
  const engine::AliveEntry& e = (*view.alive)[alive_index];
  if (assigned_.size() != view.machines.size())
    assigned_.resize(view.machines.size());
  int k = slack_class(e.request->slack());
  std::vector<Rational> in_class(assigned_.size());
  for (size_t x = 0; x < assigned_.size(); ++x) {
    auto it = assigned_[x].find(k);
    if (it != assigned_[x].end()) in_class[x] = it->second;
  }
  int x = ssf_id_dispatch(in_class);
  assigned_[x][k] += e.request->length;
  machine_of_[e.request_index] = x;
}

std::vector<engine::Action> SsfIdScheduler::decide(const engine::StateView& view) {
  std::vector<engine::Action> actions;
  actions.reserve(view.machines.size());
  for (size_t x = 0; x < view.machines.size(); ++x) {
    std::vector<bool> mine(view.alive->size(), false);
    for (size_t i = 0; i < view.alive->size(); ++i) {
      auto it = machine_of_.find((*view.alive)[i].request_index);
      mine[i] = it != machine_of_.end() && it->second == static_cast<int>(x);
    }
    auto pick = ssf_pick(*view.alive, mine);
    actions.push_back(pick ? engine::Action::work(*pick) : engine::Action::idle());
  }
  return actions;
}

MachineClassLedger SsfIdScheduler::ledger(const engine::StateView& view) const {
  MachineClassLedger led;
  led.machines.resize(std::max(assigned_.size(), view.machines.size()));
  for (size_t x = 0; x < assigned_.size(); ++x)
    for (const auto& [k, u] : assigned_[x]) led.machines[x][k].assigned = u;
  for (const engine::AliveEntry& e : *view.alive) {
    int x = machine_of_.at(e.request_index);
    int k = slack_class(e.request->slack());
    led.machines[x][k].residual += e.remaining;
  }
  return led;
}

namespace {

/// Union of the class keys present on any machine, ascending.
std::vector<int> present_classes(const MachineClassLedger& led) {
  std::set<int> ks;
  for (const auto& m : led.machines)
    for (const auto& [k, v] : m) ks.insert(k);
  return {ks.begin(), ks.end()};
}

Rational volume_at(const MachineClassLedger& led, size_t x, int k,
                   Rational ClassVolumes::*field) {
  auto it = led.machines[x].find(k);
  if (it == led.machines[x].end()) return 0;
  return it->second.*field;
}

}  // namespace

std::vector<std::string> check_volume_balance(const MachineClassLedger& led) {
  std::vector<std::string> out;
  size_t m = led.machines.size();
  if (m < 2) return out;
  std::vector<int> classes = present_classes(led);
  // Prefix volumes per machine, aligned with `classes`.
  struct Prefix {
    Rational u{0}, p{0}, r{0};
  };
  std::vector<Prefix> acc(m);
  for (int k : classes) {
    for (size_t x = 0; x < m; ++x) {
      Rational u = volume_at(led, x, k, &ClassVolumes::assigned);
      Rational r = volume_at(led, x, k, &ClassVolumes::residual);
      acc[x].u += u;
      acc[x].r += r;
      acc[x].p += u - r;
    }
    for (size_t x = 0; x < m; ++x) {
      for (size_t y = x + 1; y < m; ++y) {
        Rational du = volume_at(led, x, k, &ClassVolumes::assigned) -
                      volume_at(led, y, k, &ClassVolumes::assigned);
        if (abs(du) > pow2(k + 1))
          out.push_back("class " + std::to_string(k) + ": |U=k| gap " +
                        to_string(abs(du)) + " exceeds 2^" + std::to_string(k + 1) +
                        " (machines " + std::to_string(x) + "," + std::to_string(y) + ")");
        if (abs(acc[x].u - acc[y].u) > pow2(k + 2))
          out.push_back("class " + std::to_string(k) + ": |U<=k| gap " +
                        to_string(abs(acc[x].u - acc[y].u)) + " exceeds 2^" +
                        std::to_string(k + 2) + " (machines " + std::to_string(x) +
                        "," + std::to_string(y) + ")");
        if (abs(acc[x].p - acc[y].p) > pow2(k + 2))
          out.push_back("class " + std::to_string(k) + ": |P<=k| gap " +
                        to_string(abs(acc[x].p - acc[y].p)) + " exceeds 2^" +
                        std::to_string(k + 2) + " (machines " + std::to_string(x) +
                        "," + std::to_string(y) + ")");
        if (abs(acc[x].r - acc[y].r) > pow2(k + 3))
          out.push_back("class " + std::to_string(k) + ": |R<=k| gap " +
                        to_string(abs(acc[x].r - acc[y].r)) + " exceeds 2^" +
                        std::to_string(k + 3) + " (machines " + std::to_string(x) +
                        "," + std::to_string(y) + ")");
      }
    }
  }
  return out;
}

namespace {

/// subject "req:<id>" -> request index; -1 for transmission subjects.
std::map<std::string, int> subject_index(const core::Instance& inst) {
  std::map<std::string, int> m;
  for (const core::Request& r : inst.requests) m["req:" + r.id] = r.index;
  return m;
}

}  // namespace

std::vector<std::string> check_ssf_witness_property(
    const core::Instance& inst, const core::ScheduleTrace& trace) {
  if (trace.truncated || inst.requests.empty()) return {};
  core::DelayFactorReport rep = core::delay_factor(inst, trace);
  const core::Request& w = inst.requests[rep.witness_index];
  TimePoint f = *trace.satisfaction_time(w.index);
  std::map<std::string, int> subj = subject_index(inst);
  std::vector<std::string> out;
  for (const core::Segment& s : trace.segments) {
    if (!(s.start < f && s.end > w.arrival)) continue;
    auto it = subj.find(s.subject);
    if (it == subj.end()) continue;
    const core::Request& r = inst.requests[it->second];
    if (r.slack() > w.slack())
      out.push_back("segment [" + to_string(s.start) + "," + to_string(s.end) +
                    ") runs '" + r.id + "' (slack " + to_string(r.slack()) +
                    ") inside the witness window of '" + w.id + "' (slack " +
                    to_string(w.slack()) + ")");
  }
  return out;
}

std::vector<std::string> check_non_migratory(const core::Instance& inst,
                                             const core::ScheduleTrace& trace) {
  std::map<std::string, int> subj = subject_index(inst);
  std::map<int, int> machine_of;
  std::vector<std::string> out;
  for (const core::Segment& s : trace.segments) {
    auto it = subj.find(s.subject);
    if (it == subj.end()) continue;
    auto [pos, fresh] = machine_of.emplace(it->second, s.machine);
    if (!fresh && pos->second != s.machine)
      out.push_back("request '" + inst.requests[it->second].id +
                    "' ran on machines " + std::to_string(pos->second) + " and " +
                    std::to_string(s.machine));
  }
  return out;
}

std::vector<TimePoint> event_times(const core::Instance& inst,
                                   const core::ScheduleTrace& trace) {
  std::set<TimePoint> ts;
  for (const core::Request& r : inst.requests) ts.insert(r.arrival);
  for (const core::Segment& s : trace.segments) {
    ts.insert(s.start);
    ts.insert(s.end);
  }
  return {ts.begin(), ts.end()};
}

MachineClassLedger ledgers_from_trace(const core::Instance& inst,
                                      const core::ScheduleTrace& trace,
                                      const TimePoint& t) {
  if (trace.truncated)
    throw std::invalid_argument("ledgers_from_trace: trace is truncated");
  std::map<std::string, int> subj = subject_index(inst);
  std::map<int, int> machine_of;
  std::map<int, Rational> done_by_t;
  for (const core::Segment& s : trace.segments) {
    auto it = subj.find(s.subject);
    if (it == subj.end()) continue;
    machine_of.emplace(it->second, s.machine);
    if (s.start < t) {
      TimePoint upto = std::min(s.end, t);
      done_by_t[it->second] += trace.speed * (upto - s.start);
    }
  }
  MachineClassLedger led;
  led.machines.resize(trace.machines);
  for (const core::Request& r : inst.requests) {
    if (r.arrival > t) continue;
    auto it = machine_of.find(r.index);
    if (it == machine_of.end())
      throw std::invalid_argument("ledgers_from_trace: request '" + r.id +
                                  "' never ran");
    int k = slack_class(r.slack());
    ClassVolumes& v = led.machines[it->second][k];
    v.assigned += r.length;
    Rational done = done_by_t.count(r.index) ? done_by_t[r.index] : Rational(0);
    v.residual += r.length - done;
  }
  return led;
}

}  // namespace delayfactor::unicast
