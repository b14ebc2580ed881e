#include "delayfactor/core.hpp"

#include <algorithm>
#include <set>

namespace delayfactor::core {

Rational Instance::total_work() const {
  Rational w = 0;
  for (const auto& r : requests) w += demand(r);
  return w;
}

TimePoint Instance::last_arrival() const {
  TimePoint t = 0;
  for (const auto& r : requests) t = std::max(t, r.arrival);
  return t;
}

Rational Instance::delta() const {
  Rational lo = requests.front().slack(), hi = lo;
  for (const auto& r : requests) {
    lo = std::min(lo, r.slack());
    hi = std::max(hi, r.slack());
  }
  return hi / lo;
}

std::vector<Violation> validate(const Instance& inst) {
  std::vector<Violation> out;
  auto flag = [&](int idx, std::string msg) {
    out.push_back({idx, std::move(msg)});
  };

  if (inst.machines < 1)
    flag(-1, "machines must be >= 1");
  if (inst.mode == Mode::Broadcast && inst.machines != 1)
    flag(-1, "broadcast instances use machines=1; model extra machines as speed");
  if (inst.mode == Mode::Unicast && !inst.pages.lengths.empty())
    flag(-1, "page catalog present in unicast mode");
  for (const auto& [id, len] : inst.pages.lengths) {
    if (id.empty()) flag(-1, "empty page id");
    if (len <= 0) flag(-1, "page " + id + ": length must be positive");
  }

  std::set<RequestId> seen;
  for (size_t i = 0; i < inst.requests.size(); ++i) {
    const Request& r = inst.requests[i];
    const int idx = static_cast<int>(i);
    if (r.id.empty()) flag(idx, "empty request id");
    if (!seen.insert(r.id).second)
      flag(idx, "duplicate request id '" + r.id + "'");
    if (r.slack() <= 0)
      flag(idx, "deadline must be after arrival");
    if (i > 0 && r.arrival < inst.requests[i - 1].arrival)
      flag(idx, "requests out of arrival order");
    if (inst.mode == Mode::Unicast) {
      if (r.page) flag(idx, "page field is broadcast-only");
      if (r.length <= 0) flag(idx, "length must be positive");
      else if (r.slack() > 0 && r.slack() < r.length)
        flag(idx, "slack < length");
    } else {
      if (!r.page) flag(idx, "broadcast request needs a page");
      else if (!inst.pages.has(*r.page))
        flag(idx, "unknown page '" + *r.page + "'");
      if (r.length != 0)
        flag(idx, "length field is unicast-only (page catalog provides it)");
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.request_index < b.request_index;
                   });
  return out;
}

std::optional<TimePoint> ScheduleTrace::satisfaction_time(int request_index) const {
  for (const auto& s : satisfactions)
    if (s.request_index == request_index) return s.time;
  return std::nullopt;
}

DelayFactorReport delay_factor(const Instance& inst, const ScheduleTrace& trace) {
  DelayFactorReport rep;
  rep.per_request.assign(inst.requests.size(), Rational(0));
  std::vector<std::optional<TimePoint>> finish(inst.requests.size());
  for (const auto& s : trace.satisfactions) {
    if (s.request_index < 0 ||
        s.request_index >= static_cast<int>(inst.requests.size()))
      throw UnsatisfiedError("satisfaction record for unknown request index " +
                             std::to_string(s.request_index));
    finish[s.request_index] = s.time;
  }
  for (size_t i = 0; i < inst.requests.size(); ++i) {
    if (!finish[i])
      throw UnsatisfiedError("request '" + inst.requests[i].id +
                             "' is not satisfied by the trace");
    rep.per_request[i] = (*finish[i] - inst.requests[i].arrival) /
                         inst.requests[i].slack();
  }
  // Witness: maximizer of the factor; ties toward smallest (arrival, index),
  // which is the order requests already appear in.
  for (size_t i = 0; i < inst.requests.size(); ++i) {
    if (rep.witness_index < 0 ||
        rep.per_request[i] > rep.per_request[rep.witness_index]) {
      rep.witness_index = static_cast<int>(i);
    }
  }
  if (rep.witness_index >= 0) {
    rep.overall = std::max(Rational(1), rep.per_request[rep.witness_index]);
    rep.witness_id = inst.requests[rep.witness_index].id;
  }
  return rep;
}

Rational current_alpha(const Instance& inst, const ScheduleTrace& trace,
                       const TimePoint& t) {
  Rational alpha = 1;
  std::vector<std::optional<TimePoint>> finish(inst.requests.size());
  for (const auto& s : trace.satisfactions) finish[s.request_index] = s.time;
  for (size_t i = 0; i < inst.requests.size(); ++i) {
    const Request& r = inst.requests[i];
    if (finish[i] && *finish[i] <= t) {
      alpha = std::max(alpha, (*finish[i] - r.arrival) / r.slack());
    } else if (r.arrival <= t) {
      alpha = std::max(alpha, (t - r.arrival) / r.slack());
    }
  }
  return alpha;
}

namespace {

struct ParsedSubject {
  bool is_request = false;
  int request_index = -1;    // unicast
  int transmission = -1;     // index into trace.transmissions
};

}  // namespace

std::vector<Violation> validate_trace(const Instance& inst,
                                      const ScheduleTrace& trace) {
  std::vector<Violation> out;
  auto flag = [&](int idx, std::string msg) {
    out.push_back({idx, std::move(msg)});
  };

  // Subject resolution tables.
  std::map<std::string, int> request_by_subject;
  for (size_t i = 0; i < inst.requests.size(); ++i)
    request_by_subject["req:" + inst.requests[i].id] = static_cast<int>(i);
  std::map<std::string, int> txn_by_subject;
  for (size_t i = 0; i < trace.transmissions.size(); ++i)
    txn_by_subject[trace.transmissions[i].subject()] = static_cast<int>(i);

  // Per-machine segments must be chronologically disjoint; work exact.
  std::vector<std::vector<const Segment*>> per_machine(
      std::max(1, trace.machines));
  for (const auto& seg : trace.segments) {
    if (seg.machine < 0 || seg.machine >= trace.machines) {
      flag(-1, "segment on unknown machine " + std::to_string(seg.machine));
      continue;
    }
    if (seg.end <= seg.start)
      flag(-1, "empty or reversed segment on subject " + seg.subject);
    if (seg.work != trace.speed * (seg.end - seg.start))
      flag(-1, "segment work != speed * duration on subject " + seg.subject);
    per_machine[seg.machine].push_back(&seg);
  }
  for (auto& segs : per_machine) {
    std::sort(segs.begin(), segs.end(),
              [](const Segment* a, const Segment* b) { return a->start < b->start; });
    for (size_t i = 1; i < segs.size(); ++i)
      if (segs[i]->start < segs[i - 1]->end)
        flag(-1, "overlapping segments on machine " +
                     std::to_string(segs[i]->machine));
  }

  // Per-subject accounting.
  std::vector<Rational> work_of_request(inst.requests.size(), Rational(0));
  std::vector<Rational> work_of_txn(trace.transmissions.size(), Rational(0));
  for (const auto& seg : trace.segments) {
    if (auto it = request_by_subject.find(seg.subject);
        it != request_by_subject.end()) {
      const Request& r = inst.requests[it->second];
      if (seg.start < r.arrival)
        flag(it->second, "request runs before its arrival");
      work_of_request[it->second] += seg.work;
    } else if (auto jt = txn_by_subject.find(seg.subject);
               jt != txn_by_subject.end()) {
      work_of_txn[jt->second] += seg.work;
    } else {
      flag(-1, "segment on unknown subject " + seg.subject);
    }
  }

  // Satisfaction records: exactly one per request unless truncated.
  std::vector<std::optional<TimePoint>> finish(inst.requests.size());
  for (const auto& s : trace.satisfactions) {
    if (s.request_index < 0 ||
        s.request_index >= static_cast<int>(inst.requests.size())) {
      flag(-1, "satisfaction for unknown request index");
      continue;
    }
    if (finish[s.request_index])
      flag(s.request_index, "duplicate satisfaction record");
    finish[s.request_index] = s.time;
  }
  if (!trace.truncated) {
    for (size_t i = 0; i < inst.requests.size(); ++i)
      if (!finish[i]) flag(static_cast<int>(i), "request never satisfied");
  }

  if (inst.mode == Mode::Unicast) {
    for (size_t i = 0; i < inst.requests.size(); ++i) {
      if (finish[i] && work_of_request[i] != inst.requests[i].length)
        flag(static_cast<int>(i), "satisfied request's recorded work != length");
      if (finish[i] && *finish[i] < inst.requests[i].arrival)
        flag(static_cast<int>(i), "satisfied before arrival");
    }
  } else {
    // Transmission accounting and the satisfaction rule: a completion of a
    // transmission of page p started at t1 satisfies exactly the
    // then-unsatisfied requests for p with arrival <= t1.
    for (size_t j = 0; j < trace.transmissions.size(); ++j) {
      const auto& tx = trace.transmissions[j];
      if (!inst.pages.has(tx.page)) {
        flag(-1, "transmission of unknown page " + tx.page);
        continue;
      }
      if (tx.completion && work_of_txn[j] != inst.pages.length(tx.page))
        flag(-1, "completed transmission " + tx.subject() +
                     " work != page length");
      if (tx.completion && tx.abandoned_at)
        flag(-1, "transmission both completed and abandoned: " + tx.subject());
      if (tx.trigger_index >= 0 &&
          tx.trigger_index < static_cast<int>(inst.requests.size())) {
        if (inst.requests[tx.trigger_index].arrival > tx.start)
          flag(tx.trigger_index, "transmission starts before trigger arrival");
      }
    }
    // Replay completions in time order and check the satisfied sets.
    std::vector<int> order(trace.transmissions.size());
    for (size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto& ta = trace.transmissions[a];
      const auto& tb = trace.transmissions[b];
      TimePoint ca = ta.completion ? *ta.completion : TimePoint(-1);
      TimePoint cb = tb.completion ? *tb.completion : TimePoint(-1);
      return ca < cb;
    });
    std::vector<bool> sat(inst.requests.size(), false);
    for (int j : order) {
      const auto& tx = trace.transmissions[j];
      if (!tx.completion) continue;
      for (size_t i = 0; i < inst.requests.size(); ++i) {
        const Request& r = inst.requests[i];
        if (sat[i] || !r.page || *r.page != tx.page) continue;
        if (r.arrival <= tx.start) {
          // Must be satisfied exactly now.
          if (!finish[i] || *finish[i] != *tx.completion)
            flag(static_cast<int>(i),
                 "request not satisfied at the completion of " + tx.subject());
          sat[i] = true;
        } else if (finish[i] && *finish[i] == *tx.completion) {
          flag(static_cast<int>(i),
               "request satisfied by a transmission it arrived after (start)");
          sat[i] = true;  // avoid cascading reports
        }
      }
    }
    for (size_t i = 0; i < inst.requests.size(); ++i)
      if (finish[i] && !sat[i])
        flag(static_cast<int>(i),
             "satisfaction time matches no completed transmission of its page");
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.request_index < b.request_index;
                   });
  return out;
}

}  // namespace delayfactor::core
