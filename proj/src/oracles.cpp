#include "delayfactor/oracles.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace delayfactor::oracles {

namespace {

void require_unicast(const core::Instance& inst, const char* who) {
  if (inst.mode != core::Mode::Unicast)
    throw OracleError(std::string(who) + " handles unicast instances only");
}

void require_positive_speed(const Rational& speed) {
  if (!(speed > 0)) throw OracleError("speed must be positive");
}

void append_segment(std::vector<core::Segment>& segments, int machine,
                    const std::string& subject, const TimePoint& start,
                    const TimePoint& end, const Rational& speed) {
  if (!(end > start)) return;
  if (!segments.empty()) {
    core::Segment& last = segments.back();
    if (last.machine == machine && last.subject == subject &&
        last.end == start) {
      last.end = end;
      last.work += speed * (end - start);
      return;
    }
  }
  segments.push_back({machine, subject, start, end, speed * (end - start)});
}

}  // namespace

FeasibilityResult edf_feasible(const core::Instance& inst,
                               const Rational& alpha, const Rational& speed) {
  require_unicast(inst, "edf_feasible");
  require_positive_speed(speed);

  struct Job {
    int index;
    TimePoint arrival{0};
    TimePoint vdeadline{0};
    Rational remaining{0};
    std::string subject;
  };
  std::vector<Job> jobs;
  jobs.reserve(inst.requests.size());
  for (const core::Request& r : inst.requests)
    jobs.push_back({r.index, r.arrival, r.arrival + alpha * r.slack(), r.length,
                    "req:" + r.id});

  FeasibilityResult result;
  core::ScheduleTrace& trace = result.schedule;
  trace.mode = core::Mode::Unicast;
  trace.machines = 1;
  trace.speed = speed;
  trace.scheduler = "edf";

  // (virtual deadline, arrival, index) -> position in jobs
  std::map<std::tuple<TimePoint, TimePoint, int>, size_t> active;
  size_t next = 0;
  std::vector<std::optional<TimePoint>> finish(jobs.size());
  TimePoint now = jobs.empty() ? TimePoint(0) : jobs.front().arrival;
  while (next < jobs.size() || !active.empty()) {
    if (active.empty() && jobs[next].arrival > now) now = jobs[next].arrival;
    while (next < jobs.size() && jobs[next].arrival <= now) {
      const Job& j = jobs[next];
      active.emplace(std::make_tuple(j.vdeadline, j.arrival, j.index), next);
      ++next;
    }
    size_t at = active.begin()->second;
    Job& j = jobs[at];
    TimePoint done_at = now + j.remaining / speed;
    TimePoint step_end = done_at;
    if (next < jobs.size() && jobs[next].arrival < step_end)
      step_end = jobs[next].arrival;
    append_segment(trace.segments, 0, j.subject, now, step_end, speed);
    j.remaining -= speed * (step_end - now);
    if (j.remaining == 0) {
      finish[at] = step_end;
      active.erase(active.begin());
    }
    now = step_end;
  }

  result.feasible = true;
  std::vector<std::pair<TimePoint, int>> order;
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (*finish[i] > jobs[i].vdeadline) result.feasible = false;
    order.push_back({*finish[i], jobs[i].index});
  }
  std::sort(order.begin(), order.end());
  for (const auto& [time, index] : order)
    trace.satisfactions.push_back({index, time});
  return result;
}

namespace {

/// Max flow with exact rational capacities (Dinic). Termination does not
/// depend on capacity magnitudes: each phase's blocking flow saturates at
/// least one edge per augmentation and phases strictly increase the level
/// of the sink.
class Dinic {
 public:
  explicit Dinic(int n) : graph_(n), level_(n), iter_(n) {}

  void add_edge(int from, int to, const Rational& cap) {
    graph_[from].push_back({to, cap, static_cast<int>(graph_[to].size())});
    graph_[to].push_back({from, Rational(0),
                          static_cast<int>(graph_[from].size()) - 1});
  }

  Rational max_flow(int source, int sink) {
    Rational total{0};
    while (bfs(source, sink)) {
      std::fill(iter_.begin(), iter_.end(), 0);
      while (true) {
        Rational pushed = dfs(source, sink, std::nullopt);
        if (pushed == 0) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Flow shipped over the k-th edge added from `from` (skipping residual
  /// back-edges), recovered from the back edge's accumulated capacity.
  Rational flow_on(int from, int edge_pos) const {
    const Edge& e = graph_[from][edge_pos];
    return graph_[e.to][e.rev].cap;
  }

 private:
  struct Edge {
    int to;
    Rational cap;
    int rev;
  };

  bool bfs(int source, int sink) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> queue{source};
    level_[source] = 0;
    for (size_t h = 0; h < queue.size(); ++h) {
      int v = queue[h];
      for (const Edge& e : graph_[v]) {
        if (e.cap > 0 && level_[e.to] < 0) {
          level_[e.to] = level_[v] + 1;
          queue.push_back(e.to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  Rational dfs(int v, int sink, std::optional<Rational> limit) {
    if (v == sink) return *limit;
    for (int& i = iter_[v]; i < static_cast<int>(graph_[v].size()); ++i) {
      Edge& e = graph_[v][i];
      if (e.cap <= 0 || level_[e.to] != level_[v] + 1) continue;
      std::optional<Rational> pass = e.cap;
      if (limit && *limit < *pass) pass = limit;
      Rational got = dfs(e.to, sink, pass);
      if (got > 0) {
        e.cap -= got;
        graph_[e.to][e.rev].cap += got;
        return got;
      }
    }
    return Rational(0);
  }

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace

FeasibilityResult flow_feasible(const core::Instance& inst,
                                const Rational& alpha, const Rational& speed,
                                int machines) {
  require_unicast(inst, "flow_feasible");
  require_positive_speed(speed);
  if (machines < 1) throw OracleError("machines must be >= 1");

  const int n = static_cast<int>(inst.requests.size());
  std::vector<TimePoint> vdeadline(n);
  std::set<TimePoint> event_set;
  Rational total_work{0};
  for (const core::Request& r : inst.requests) {
    vdeadline[r.index] = r.arrival + alpha * r.slack();
    event_set.insert(r.arrival);
    event_set.insert(vdeadline[r.index]);
    total_work += r.length;
  }
  std::vector<TimePoint> events(event_set.begin(), event_set.end());
  const int intervals =
      events.empty() ? 0 : static_cast<int>(events.size()) - 1;

  // Nodes: 0 = source, 1..n jobs, n+1..n+intervals, n+intervals+1 = sink.
  const int source = 0, sink = n + intervals + 1;
  Dinic net(sink + 1);
  for (const core::Request& r : inst.requests)
    net.add_edge(source, 1 + r.index, r.length);
  // job -> interval edge positions, for flow recovery
  std::vector<std::vector<std::pair<int, int>>> job_edges(n);  // (interval k, pos)
  for (int k = 0; k < intervals; ++k) {
    Rational cap = (events[k + 1] - events[k]) * speed;
    for (const core::Request& r : inst.requests) {
      if (r.arrival <= events[k] && events[k + 1] <= vdeadline[r.index]) {
        job_edges[r.index].push_back(
            {k, static_cast<int>(0)});  // pos fixed up below
        net.add_edge(1 + r.index, 1 + n + k, cap);
        job_edges[r.index].back().second = -1;  // placeholder
      }
    }
    net.add_edge(1 + n + k, sink, machines * cap);
  }
  // Recompute edge positions deterministically: edges from a job node were
  // added in ascending interval order, after the single residual back-edge
  // to the source.
  for (int i = 0; i < n; ++i)
    for (size_t pos = 0; pos < job_edges[i].size(); ++pos)
      job_edges[i][pos].second = static_cast<int>(pos) + 1;

  Rational shipped = net.max_flow(source, sink);

  FeasibilityResult result;
  result.feasible = shipped == total_work;
  core::ScheduleTrace& trace = result.schedule;
  trace.mode = core::Mode::Unicast;
  trace.machines = machines;
  trace.speed = speed;
  trace.scheduler = "flow";
  if (!result.feasible) return result;

  // Wrap-around packing: inside each interval lay the jobs' shipped work
  // end to end across machines; per-job flow <= |I| * speed keeps any job
  // from overlapping itself across the wrap.
  std::vector<TimePoint> finish(n, TimePoint(0));
  std::vector<core::Segment> segments;
  for (int k = 0; k < intervals; ++k) {
    const TimePoint& lo = events[k];
    const TimePoint& hi = events[k + 1];
    int machine = 0;
    TimePoint cursor = lo;
    for (int i = 0; i < n; ++i) {
      Rational x{0};
      for (const auto& [interval, pos] : job_edges[i])
        if (interval == k) x = net.flow_on(1 + i, pos);
      if (x == 0) continue;
      Rational duration = x / speed;
      const std::string subject = "req:" + inst.requests[i].id;
      while (duration > 0) {
        Rational room = hi - cursor;
        Rational take = duration < room ? duration : room;
        segments.push_back(
            {machine, subject, cursor, cursor + take, take * speed});
        if (cursor + take > finish[i]) finish[i] = cursor + take;
        duration -= take;
        cursor += take;
        if (cursor == hi) {
          ++machine;
          cursor = lo;
        }
      }
    }
  }
  std::sort(segments.begin(), segments.end(),
            [](const core::Segment& a, const core::Segment& b) {
              return std::tie(a.machine, a.start) < std::tie(b.machine, b.start);
            });
  for (const core::Segment& s : segments)
    append_segment(trace.segments, s.machine, s.subject, s.start, s.end,
                   speed);
  std::vector<std::pair<TimePoint, int>> order;
  for (int i = 0; i < n; ++i) order.push_back({finish[i], i});
  std::sort(order.begin(), order.end());
  for (const auto& [time, index] : order)
    trace.satisfactions.push_back({index, time});
  return result;
}

OracleReport optimal_alpha_unicast(const core::Instance& inst,
                                   const Rational& speed, int machines,
                                   const Rational& tolerance) {
  require_unicast(inst, "optimal_alpha_unicast");
  require_positive_speed(speed);
  if (machines < 1) throw OracleError("machines must be >= 1");
  if (!(tolerance > 0)) throw OracleError("tolerance must be positive");

  OracleReport report;
  report.method = machines == 1 ? "edf-exact" : "flow";

  Rational max_infeasible{0};
  std::optional<Rational> min_feasible;
  auto probe = [&](const Rational& alpha) -> FeasibilityResult {
    FeasibilityResult r = machines == 1
                              ? edf_feasible(inst, alpha, speed)
                              : flow_feasible(inst, alpha, speed, machines);
    report.probes.push_back({alpha, r.feasible});
    if (r.feasible) {
      if (!min_feasible || alpha < *min_feasible) min_feasible = alpha;
    } else if (alpha > max_infeasible) {
      max_infeasible = alpha;
    }
    if (min_feasible && max_infeasible >= *min_feasible)
      throw OracleError("feasibility is not monotone in alpha");
    return r;
  };

  if (inst.requests.empty()) {
    report.lo = report.hi = 1;
    report.witness.mode = core::Mode::Unicast;
    report.witness.machines = machines;
    report.witness.speed = speed;
    report.witness.scheduler = machines == 1 ? "edf" : "flow";
    return report;
  }

  FeasibilityResult at_one = probe(1);
  if (at_one.feasible) {
    report.lo = report.hi = 1;
    report.witness = std::move(at_one.schedule);
    return report;
  }

  TimePoint t_end = inst.last_arrival() + inst.total_work() / speed;
  Rational hi{0};
  for (const core::Request& r : inst.requests) {
    Rational bound = (t_end - r.arrival) / r.slack();
    if (bound > hi) hi = bound;
  }
  hi += 1;

  FeasibilityResult witness = probe(hi);
  int doublings = 0;
  while (!witness.feasible) {
    if (++doublings > 64)
      throw OracleError("no feasible upper bound after 64 doublings");
    hi *= 2;
    witness = probe(hi);
  }

  Rational lo{1};
  while (hi - lo > tolerance) {
    Rational mid = (lo + hi) / 2;
    FeasibilityResult r = probe(mid);
    if (r.feasible) {
      hi = mid;
      witness = std::move(r);
    } else {
      lo = mid;
    }
  }
  report.lo = lo;
  report.hi = hi;
  report.witness = std::move(witness.schedule);
  return report;
}

Rational default_slot(const core::Instance& inst) {
  Rational g{0};
  auto fold = [&g](const Rational& value) {
    if (value <= 0) return;
    g = g == 0 ? value : rational_gcd(g, value);
  };
  std::set<TimePoint> arrivals;
  for (const core::Request& r : inst.requests) arrivals.insert(r.arrival);
  TimePoint prev{0};
  for (const TimePoint& a : arrivals) {
    fold(a - prev);
    prev = a;
  }
  for (const auto& [page, length] : inst.pages.lengths) fold(length);
  Rational quarter(1, 4);
  return g < quarter ? quarter : g;
}

TimePoint default_brute_horizon(const core::Instance& inst,
                                const Rational& speed, const Rational& slot) {
  require_positive_speed(speed);
  if (!(slot > 0)) throw OracleError("slot must be positive");
  TimePoint last = inst.last_arrival();
  // First grid point at or after the last arrival.
  Rational steps = last / slot;
  Int whole = numerator(steps) / denominator(steps);
  TimePoint aligned = Rational(whole) * slot;
  if (aligned < last) aligned += slot;
  TimePoint horizon = aligned;
  for (const auto& [page, length] : inst.pages.lengths)
    horizon += length / speed;
  return horizon;
}

OracleReport optimal_alpha_broadcast_bruteforce(const core::Instance& inst,
                                                const Rational& speed,
                                                const TimePoint& horizon,
                                                const Rational& slot) {
  if (inst.mode != core::Mode::Broadcast)
    throw OracleError("the brute-force oracle handles broadcast instances only");
  require_positive_speed(speed);
  if (!(slot > 0)) throw OracleError("slot must be positive");
  const size_t n = inst.requests.size();
  if (n > 63)
    throw OracleGuardError("brute-force oracle supports at most 63 requests");

  // Guard: pages^(number of slots) <= 10^7.
  Rational ratio = horizon / slot;
  Int slots = numerator(ratio) / denominator(ratio);
  if (Rational(slots) * slot < horizon) slots += 1;
  const Int npages = static_cast<long>(inst.pages.lengths.size());
  const Int guard_cap = 10000000;
  Int space = 1;
  for (Int s = 0; s < slots && npages > 1; ++s) {
    space *= npages;
    if (space > guard_cap)
      throw OracleGuardError(
          "slotted search space pages^slots exceeds 10^7; shrink the "
          "instance, the horizon, or enlarge the slot");
  }

  struct PageInfo {
    core::PageId id;
    Rational duration;
    uint64_t members = 0;  // requests for this page, as a bitmask
  };
  std::vector<PageInfo> pages;
  for (const auto& [id, length] : inst.pages.lengths)
    pages.push_back({id, length / speed, 0});
  for (const core::Request& r : inst.requests) {
    for (PageInfo& p : pages)
      if (p.id == *r.page) p.members |= uint64_t(1) << r.index;
  }

  const uint64_t full = n == 0 ? 0 : (uint64_t(1) << n) - 1;
  struct Entry {
    std::optional<Rational> value;
    int choice = -2;  // index into pages, or -1 for idle
  };
  std::map<std::pair<TimePoint, uint64_t>, Entry> memo;

  // Bitmask of this page's requests that have arrived by t and are not yet
  // satisfied under `mask`.
  auto arrived_unsatisfied = [&](const PageInfo& p, const TimePoint& t,
                                 uint64_t mask) -> uint64_t {
    uint64_t got = 0;
    uint64_t candidates = p.members & ~mask;
    for (const core::Request& r : inst.requests) {
      uint64_t bit = uint64_t(1) << r.index;
      if ((candidates & bit) && r.arrival <= t) got |= bit;
    }
    return got;
  };

  std::function<std::optional<Rational>(const TimePoint&, uint64_t)> rec =
      [&](const TimePoint& t, uint64_t mask) -> std::optional<Rational> {
    if (mask == full) return Rational(0);
    if (t >= horizon) return std::nullopt;
    auto key = std::make_pair(t, mask);
    auto found = memo.find(key);
    if (found != memo.end()) return found->second.value;

    Entry entry;
    for (size_t pi = 0; pi < pages.size(); ++pi) {
      const PageInfo& p = pages[pi];
      TimePoint done = t + p.duration;
      if (done > horizon) continue;
      uint64_t newly = arrived_unsatisfied(p, t, mask);
      if (newly == 0) continue;
      Rational reached{0};
      for (const core::Request& r : inst.requests) {
        if (!(newly & (uint64_t(1) << r.index))) continue;
        Rational f = (done - r.arrival) / r.slack();
        if (f > reached) reached = f;
      }
      std::optional<Rational> rest = rec(done, mask | newly);
      if (!rest) continue;
      Rational value = *rest > reached ? *rest : reached;
      if (!entry.value || value < *entry.value) {
        entry.value = value;
        entry.choice = static_cast<int>(pi);
      }
    }
    std::optional<Rational> idled = rec(t + slot, mask);
    if (idled && (!entry.value || *idled < *entry.value)) {
      entry.value = idled;
      entry.choice = -1;
    }
    memo.emplace(std::move(key), entry);
    return entry.value;
  };

  std::optional<Rational> root = rec(TimePoint(0), 0);
  if (!root)
    throw OracleError(
        "no slotted schedule satisfies every request within the horizon; "
        "enlarge the horizon");

  OracleReport report;
  report.method = "brute-force";
  Rational alpha_star = *root > 1 ? *root : Rational(1);
  report.lo = report.hi = alpha_star;

  core::ScheduleTrace& trace = report.witness;
  trace.mode = core::Mode::Broadcast;
  trace.machines = 1;
  trace.speed = speed;
  trace.scheduler = "brute-force";
  std::map<core::PageId, int> ordinal;
  TimePoint t{0};
  uint64_t mask = 0;
  while (mask != full) {
    const Entry& entry = memo.at({t, mask});
    if (entry.choice < 0) {
      t += slot;
      continue;
    }
    const PageInfo& p = pages[entry.choice];
    TimePoint done = t + p.duration;
    uint64_t newly = arrived_unsatisfied(p, t, mask);
    int trigger = -1;
    for (const core::Request& r : inst.requests) {
      if (!(newly & (uint64_t(1) << r.index))) continue;
      if (trigger < 0 ||
          std::tie(r.arrival, r.index) <
              std::tie(inst.requests[trigger].arrival,
                       inst.requests[trigger].index))
        trigger = r.index;
    }
    core::TransmissionRecord record;
    record.page = p.id;
    record.ordinal = ++ordinal[p.id];
    record.trigger_index = trigger;
    record.start = t;
    record.completion = done;
    trace.segments.push_back(
        {0, record.subject(), t, done, speed * p.duration});
    trace.transmissions.push_back(record);
    for (const core::Request& r : inst.requests)
      if (newly & (uint64_t(1) << r.index))
        trace.satisfactions.push_back({r.index, done});
    mask |= newly;
    t = done;
  }
  return report;
}

}  // namespace delayfactor::oracles
