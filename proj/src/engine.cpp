#include "delayfactor/engine.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace delayfactor::engine {

std::optional<TimePoint> StaticSource::peek(const core::ScheduleTrace&,
                                            const TimePoint&) {
  if (next_ >= inst_.requests.size()) return std::nullopt;
  return inst_.requests[next_].arrival;
}

std::vector<core::Request> StaticSource::take(const core::ScheduleTrace&,
                                              const TimePoint& t) {
  std::vector<core::Request> out;
  while (next_ < inst_.requests.size() && inst_.requests[next_].arrival == t)
    out.push_back(inst_.requests[next_++]);
  return out;
}

namespace {

struct Mach {
  enum class Kind { Idle, Req, Txn } kind = Kind::Idle;
  int stable = -1;  // request index (Req) or transmission record index (Txn)
  TimePoint seg_start{0};
};

class Sim {
 public:
  Sim(RequestSource& source, Scheduler& sched, const EngineConfig& cfg,
      const Observer& observer)
      : source_(source), sched_(sched), cfg_(cfg), observer_(observer) {
    if (cfg_.speed <= 0) throw EngineError("speed must be positive");
    if (cfg_.machines < 1) throw EngineError("machines must be >= 1");
    mode_ = source_.mode();
    pages_ = source_.pages();
    if (mode_ == core::Mode::Broadcast && cfg_.machines != 1)
      throw EngineError("broadcast runs use machines=1 (model extra machines as speed)");
    machs_.resize(cfg_.machines);
    trace_.mode = mode_;
    trace_.machines = cfg_.machines;
    trace_.speed = cfg_.speed;
    trace_.scheduler = sched_.name();
    trace_.wait_c = sched_.wait_c();
    horizon_ = cfg_.horizon             ? cfg_.horizon
               : cfg_.no_default_horizon ? std::nullopt
                                         : source_.default_horizon(cfg_.speed);
    if (!horizon_ && !source_.bounded())
      throw EngineError("horizon-required: adaptive unbounded source needs an explicit horizon");
    trace_.horizon = horizon_;
  }

  SimResult run() {
    while (true) {
      settle_completions();
      settle_arrivals();
      if (horizon_ && now_ == *horizon_) {
        truncate();
        break;
      }
      StateView view = make_view();
      std::vector<Action> actions = sched_.decide(view);
      if (actions.size() != static_cast<size_t>(cfg_.machines))
        throw EngineError("scheduler returned " + std::to_string(actions.size()) +
                          " actions for " + std::to_string(cfg_.machines) +
                          " machines");
      apply(actions);
      StateView after = make_view();
      if (observer_) observer_(after);
      std::optional<TimePoint> tn = next_time(after);
      if (!tn) {
        if (alive_.empty() && !source_.peek(trace_, now_)) break;
        throw EngineError("stalled: alive requests but no future event and no horizon");
      }
      advance(*tn - now_);
      now_ = *tn;
    }
    SimResult res;
    res.realized.mode = mode_;
    res.realized.machines = cfg_.machines;
    res.realized.pages = pages_;
    res.realized.requests.assign(store_.begin(), store_.end());
    res.trace = std::move(trace_);
    return res;
  }

 private:
  // ---- settle phases -------------------------------------------------

  void settle_completions() {
    for (int m = 0; m < cfg_.machines; ++m) {
      Mach& mach = machs_[m];
      if (mach.kind == Mach::Kind::Req) {
        AliveEntry& e = alive_ref(mach.stable);
        if (e.remaining == 0) {
          close_segment(m);
          satisfy(mach.stable);
          mach.kind = Mach::Kind::Idle;
          mach.stable = -1;
        }
      } else if (mach.kind == Mach::Kind::Txn) {
        TxnState& tx = txn_ref(mach.stable);
        if (tx.progress == tx.length) {
          close_segment(m);
          complete_txn(tx);
          mach.kind = Mach::Kind::Idle;
          mach.stable = -1;
        }
      }
    }
  }

  void settle_arrivals() {
    while (auto p = source_.peek(trace_, now_)) {
      if (*p < now_) throw EngineError("source emitted into the past");
      if (*p > now_) break;
      std::vector<core::Request> batch = source_.take(trace_, now_);
      if (batch.empty()) {
        auto p2 = source_.peek(trace_, now_);
        if (p2 && *p2 == now_)
          throw EngineError("source stalled at t=" + to_string(now_));
        continue;
      }
      for (core::Request& r : batch) admit(std::move(r));
    }
  }

  void admit(core::Request&& r) {
    if (r.arrival != now_)
      throw EngineError("request '" + r.id + "' emitted with arrival != now");
    if (!ids_.insert(r.id).second)
      throw EngineError("duplicate request id '" + r.id + "'");
    if (r.slack() <= 0)
      throw EngineError("request '" + r.id + "': deadline must be after arrival");
    if (mode_ == core::Mode::Unicast) {
      if (r.page) throw EngineError("request '" + r.id + "': page in unicast mode");
      if (r.length <= 0)
        throw EngineError("request '" + r.id + "': length must be positive");
    } else {
      if (!r.page || !pages_.has(*r.page))
        throw EngineError("request '" + r.id + "': unknown page");
    }
    r.index = static_cast<int>(store_.size());
    store_.push_back(std::move(r));  // deque: stable addresses
    const core::Request& stored = store_.back();
    AliveEntry e;
    e.request_index = stored.index;
    e.request = &stored;
    e.remaining = mode_ == core::Mode::Unicast ? stored.length : Rational(0);
    alive_.push_back(e);
    StateView view = make_view();
    sched_.on_arrival(view, static_cast<int>(alive_.size()) - 1);
  }

  void truncate() {
    for (int m = 0; m < cfg_.machines; ++m) {
      close_segment(m);
      machs_[m].kind = Mach::Kind::Idle;
      machs_[m].stable = -1;
    }
    trace_.truncated =
        !alive_.empty() || source_.peek(trace_, now_).has_value();
  }

  // ---- decisions ------------------------------------------------------

  void apply(const std::vector<Action>& actions) {
    std::set<int> claimed_requests;
    for (int m = 0; m < cfg_.machines; ++m) {
      const Action& a = actions[m];
      Mach::Kind kind = Mach::Kind::Idle;
      int stable = -1;
      switch (a.type) {
        case Action::Type::Idle:
          break;
        case Action::Type::Work: {
          if (mode_ != core::Mode::Unicast)
            throw EngineError("Work action in broadcast mode");
          const AliveEntry& e = alive_at(a.subject);
          if (!claimed_requests.insert(e.request_index).second)
            throw EngineError("request assigned to two machines");
          kind = Mach::Kind::Req;
          stable = e.request_index;
          break;
        }
        case Action::Type::Resume: {
          if (mode_ != core::Mode::Broadcast)
            throw EngineError("Resume action in unicast mode");
          if (a.subject < 0 || a.subject >= static_cast<int>(active_.size()))
            throw EngineError("Resume on unknown transmission");
          kind = Mach::Kind::Txn;
          stable = active_[a.subject].record_index;
          break;
        }
        case Action::Type::Start: {
          if (mode_ != core::Mode::Broadcast)
            throw EngineError("Start action in unicast mode");
          const AliveEntry& e = alive_at(a.subject);
          stable = start_txn(e, m);
          kind = Mach::Kind::Txn;
          break;
        }
      }
      Mach& mach = machs_[m];
      if (mach.kind == kind && mach.stable == stable) continue;  // no switch
      close_segment(m);
      mach.kind = kind;
      mach.stable = stable;
      mach.seg_start = now_;
    }
  }

  /// Creates a transmission for the page of trigger `e`, abandoning an
  /// in-flight transmission of the same page (allowed only with a strictly
  /// smaller-slack trigger). Returns the new record index.
  int start_txn(const AliveEntry& e, int machine) {
    const core::PageId& page = *e.request->page;
    for (size_t j = 0; j < active_.size(); ++j) {
      if (active_[j].page != page) continue;
      if (!(e.request->slack() < active_[j].trigger_slack))
        throw EngineError("same-page restart without strictly smaller slack (page " +
                          page + ")");
      abandon_txn(static_cast<int>(j));
      break;  // at most one unabandoned transmission per page
    }
    core::TransmissionRecord rec;
    rec.page = page;
    rec.ordinal = ++txn_count_[page];
    rec.trigger_index = e.request_index;
    rec.start = now_;
    trace_.transmissions.push_back(rec);
    TxnState tx;
    tx.record_index = static_cast<int>(trace_.transmissions.size()) - 1;
    tx.page = page;
    tx.trigger_index = e.request_index;
    tx.trigger_slack = e.request->slack();
    tx.start = now_;
    tx.progress = 0;
    tx.length = pages_.length(page);
    active_.push_back(tx);
    alive_mut(e.request_index).started = true;
    (void)machine;
    return tx.record_index;
  }

  void abandon_txn(int active_index) {
    TxnState tx = active_[active_index];
    for (int m = 0; m < cfg_.machines; ++m) {
      if (machs_[m].kind == Mach::Kind::Txn && machs_[m].stable == tx.record_index) {
        close_segment(m);
        machs_[m].kind = Mach::Kind::Idle;
        machs_[m].stable = -1;
      }
    }
    auto& rec = trace_.transmissions[tx.record_index];
    rec.abandoned_at = now_;
    rec.discarded_work = tx.progress;
    active_.erase(active_.begin() + active_index);
  }

  // ---- progress & events ----------------------------------------------

  void advance(const Duration& dt) {
    for (Mach& mach : machs_) {
      if (mach.kind == Mach::Kind::Req)
        alive_ref(mach.stable).remaining -= cfg_.speed * dt;
      else if (mach.kind == Mach::Kind::Txn)
        txn_ref(mach.stable).progress += cfg_.speed * dt;
    }
  }

  std::optional<TimePoint> next_time(const StateView& view) {
    std::optional<TimePoint> tn;
    auto offer = [&](const TimePoint& c) {
      if (!tn || c < *tn) tn = c;
    };
    for (const Mach& mach : machs_) {
      if (mach.kind == Mach::Kind::Req)
        offer(now_ + alive_ref(mach.stable).remaining / cfg_.speed);
      else if (mach.kind == Mach::Kind::Txn) {
        const TxnState& tx = txn_ref(mach.stable);
        offer(now_ + (tx.length - tx.progress) / cfg_.speed);
      }
    }
    if (auto p = source_.peek(trace_, now_)) {
      if (*p == now_)
        throw EngineError("source stalled at t=" + to_string(now_));
      offer(*p);
    }
    if (auto w = sched_.next_wakeup(view)) {
      if (*w <= now_)
        throw EngineError("scheduler wakeup not in the future");
      offer(*w);
    }
    if (horizon_ && *horizon_ > now_) offer(*horizon_);
    return tn;
  }

  // ---- bookkeeping ----------------------------------------------------

  void close_segment(int m) {
    Mach& mach = machs_[m];
    if (mach.kind == Mach::Kind::Idle || mach.seg_start == now_) return;
    core::Segment seg;
    seg.machine = m;
    seg.start = mach.seg_start;
    seg.end = now_;
    seg.work = cfg_.speed * (now_ - mach.seg_start);
    seg.subject = mach.kind == Mach::Kind::Req
                      ? "req:" + store_[mach.stable].id
                      : trace_.transmissions[mach.stable].subject();
    trace_.segments.push_back(std::move(seg));
    mach.seg_start = now_;
  }

  void satisfy(int request_index) {
    const core::Request& r = store_[request_index];
    trace_.satisfactions.push_back({request_index, now_});
    alpha_fin_ = std::max(alpha_fin_, (now_ - r.arrival) / r.slack());
    for (size_t i = 0; i < alive_.size(); ++i) {
      if (alive_[i].request_index == request_index) {
        alive_.erase(alive_.begin() + i);
        break;
      }
    }
  }

  void complete_txn(TxnState& tx) {
    trace_.transmissions[tx.record_index].completion = now_;
    // Satisfy every outstanding request for the page that arrived at or
    // before the transmission start, in (arrival, index) order.
    std::vector<int> beneficiaries;
    for (const AliveEntry& e : alive_)
      if (e.request->page && *e.request->page == tx.page &&
          e.request->arrival <= tx.start)
        beneficiaries.push_back(e.request_index);
    const int record = tx.record_index;
    for (int idx : beneficiaries) satisfy(idx);
    for (size_t j = 0; j < active_.size(); ++j) {
      if (active_[j].record_index == record) {
        active_.erase(active_.begin() + j);
        break;
      }
    }
  }

  AliveEntry& alive_ref(int request_index) {
    for (AliveEntry& e : alive_)
      if (e.request_index == request_index) return e;
    throw EngineError("internal: request not alive");
  }
  AliveEntry& alive_mut(int request_index) { return alive_ref(request_index); }

  const AliveEntry& alive_at(int view_index) const {
    if (view_index < 0 || view_index >= static_cast<int>(alive_.size()))
      throw EngineError("action on unknown or not-yet-arrived request");
    return alive_[view_index];
  }

  TxnState& txn_ref(int record_index) {
    for (TxnState& tx : active_)
      if (tx.record_index == record_index) return tx;
    throw EngineError("internal: transmission not active");
  }

  StateView make_view() {
    StateView v;
    v.now = now_;
    v.speed = cfg_.speed;
    v.alpha_fin = alpha_fin_;
    v.alpha_t = alpha_fin_;
    for (const AliveEntry& e : alive_)
      v.alpha_t = std::max(
          v.alpha_t, (now_ - e.request->arrival) / e.request->slack());
    v.alive = &alive_;
    v.transmissions = &active_;
    v.machines.resize(cfg_.machines);
    for (int m = 0; m < cfg_.machines; ++m) {
      const Mach& mach = machs_[m];
      if (mach.kind == Mach::Kind::Req) {
        for (size_t i = 0; i < alive_.size(); ++i)
          if (alive_[i].request_index == mach.stable)
            v.machines[m].running = static_cast<int>(i);
      } else if (mach.kind == Mach::Kind::Txn) {
        for (size_t j = 0; j < active_.size(); ++j)
          if (active_[j].record_index == mach.stable)
            v.machines[m].running = static_cast<int>(j);
      }
    }
    return v;
  }

  RequestSource& source_;
  Scheduler& sched_;
  EngineConfig cfg_;
  const Observer& observer_;
  core::Mode mode_ = core::Mode::Unicast;
  core::PageCatalog pages_;
  core::ScheduleTrace trace_;
  std::deque<core::Request> store_;
  std::vector<AliveEntry> alive_;
  std::vector<TxnState> active_;
  std::vector<Mach> machs_;
  std::map<core::PageId, int> txn_count_;
  std::set<core::RequestId> ids_;
  std::optional<TimePoint> horizon_;
  Rational alpha_fin_{1};
  TimePoint now_{0};
};

}  // namespace

SimResult simulate(RequestSource& source, Scheduler& scheduler,
                   const EngineConfig& config, const Observer& observer) {
  Sim sim(source, scheduler, config, observer);
  return sim.run();
}

std::optional<TimePoint> next_eligibility_crossing(
    const std::vector<AgeTerm>& candidates, const std::vector<AgeTerm>& alive,
    const Rational& alpha_floor, const Rational& c, const TimePoint& t) {
  auto alpha_at = [&](const TimePoint& u) {
    Rational a = alpha_floor;
    for (const AgeTerm& j : alive)
      if (j.arrival <= u) a = std::max(a, Rational((u - j.arrival) / j.slack));
    return a;
  };
  std::optional<TimePoint> best;
  auto consider = [&](const AgeTerm& i, const TimePoint& u) {
    if (u <= t) return;
    if (best && *best <= u) return;
    if (u - i.arrival >= c * alpha_at(u) * i.slack) best = u;
  };
  for (const AgeTerm& i : candidates) {
    // Piece where alpha is the constant floor.
    consider(i, i.arrival + c * alpha_floor * i.slack);
    // Pieces driven by an alive request's age. Solve
    //   u - a_i = c * S_i * (u - a_j) / S_j
    // which only yields a forward crossing when the piece grows slower
    // than the waiting time (slope < 1).
    for (const AgeTerm& j : alive) {
      Rational slope = c * i.slack / j.slack;
      if (slope >= 1) continue;
      TimePoint u = (i.arrival - slope * j.arrival) / (1 - slope);
      consider(i, u);
    }
  }
  return best;
}

}  // namespace delayfactor::engine
