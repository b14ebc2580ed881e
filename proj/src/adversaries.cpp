#include "delayfactor/adversaries.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace delayfactor::adversaries {

namespace {

std::string zero_pad(long value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width)
    digits.insert(digits.begin(), width - static_cast<int>(digits.size()), '0');
  return digits;
}

int width_of(long max_value) {
  return static_cast<int>(std::to_string(max_value).size());
}

Int floor_to_int(const Rational& r) {
  Int quotient = numerator(r) / denominator(r);
  if (r < 0 && Rational(quotient) != r) --quotient;
  return quotient;
}

long ceil_to_long(const Rational& r) {
  Int f = floor_to_int(r);
  if (Rational(f) != r) ++f;
  return f.convert_to<long>();
}

long round_half_up(const Rational& r) {
  return floor_to_int(r + Rational(1, 2)).convert_to<long>();
}

core::Segment unit_speed_segment(std::string subject, const TimePoint& start,
                                 const TimePoint& end) {
  return core::Segment{0, std::move(subject), start, end, end - start};
}

void sort_satisfactions(std::vector<core::SatisfactionRecord>& sats) {
  std::sort(sats.begin(), sats.end(),
            [](const core::SatisfactionRecord& a,
               const core::SatisfactionRecord& b) {
              if (a.time != b.time) return a.time < b.time;
              return a.request_index < b.request_index;
            });
}

}  // namespace

UnicastStretchAdversary::UnicastStretchAdversary(const Rational& size_ratio)
    : p_(size_ratio), slot_(pow2(-20)) {
  if (p_ < 16) throw AdversaryError("size ratio must satisfy P >= 16");
  p6_ = approx_pow(p_, 3, 5, 20, true);
  p116_ = approx_pow(p_, 29, 25, 20, true);
  p12_ = approx_pow(p_, 6, 5, 20, true);
  if (!(p116_ - p6_ > p_))
    throw AdversaryError(
        "construction needs P^1.16 - P^0.6 > P after rounding; this P is too "
        "small");
  k_ = ceil_to_long((p116_ - p_) / p6_);
  if (k_ < 1) k_ = 1;
  d_ = p_ + Rational(k_) * p6_;
  n3_ = round_half_up(p12_ - p6_);
  if (n3_ < 1)
    throw AdversaryError(
        "construction needs P^1.2 - P^0.6 >= 1 after rounding, so at least "
        "one unit request exists");

  lb1_ = d_ / p_;
  thr1_ = approx_pow(p_ / p6_, 2, 5, 20, false) / 2;
  if (!(lb1_ / 2 >= thr1_))
    throw AdversaryError(
        "long-request branch claim (D/P)/2 falls below its threshold "
        "(P/P^0.6)^0.4/2; this P is too small");

  Rational stream_cap = p6_ + 1 - slot_;
  Rational drain_cap = (Rational(n3_) + 2 * p6_) / p6_;
  lb3_ = stream_cap < drain_cap ? stream_cap : drain_cap;
  cert3_ = (d_ + slot_ + Rational(n3_) + p6_) / p_;
  thr3_ = approx_pow(p_, 2, 5, 20, false) / 2;
  if (!(lb3_ / cert3_ >= thr3_))
    throw AdversaryError(
        "unit-stream branch claim falls below its threshold P^0.4/2; this P "
        "is too small");

  statics_.push_back(
      core::Request{"t1", TimePoint{0}, p_, p_, std::nullopt, -1});
  const int width = width_of(k_);
  for (long j = 0; j <= k_; ++j) {
    TimePoint arrival = p_ - p6_ + Rational(j) * p6_;
    statics_.push_back(core::Request{"t2-" + zero_pad(j, width), arrival,
                                     arrival + p6_, p6_, std::nullopt, -1});
  }
}

core::Request UnicastStretchAdversary::make_type3(
    long i, const TimePoint& arrival) const {
  return core::Request{"t3-" + zero_pad(i, width_of(n3_ - 1)), arrival,
                       arrival + 1, Rational{1}, std::nullopt, -1};
}

std::optional<TimePoint> UnicastStretchAdversary::peek(
    const core::ScheduleTrace&, const TimePoint&) {
  if (cursor_ < statics_.size()) return statics_[cursor_].arrival;
  if (branch_ == 0) return d_ + slot_;
  if (branch_ == 3 && t3_emitted_ < n3_)
    return d_ + slot_ + Rational(t3_emitted_);
  return std::nullopt;
}

std::vector<core::Request> UnicastStretchAdversary::take(
    const core::ScheduleTrace& trace, const TimePoint& t) {
  std::vector<core::Request> batch;
  while (cursor_ < statics_.size() && statics_[cursor_].arrival == t) {
    emissions_.push_back(
        {statics_[cursor_].id, cursor_ == 0 ? "type-1" : "type-2"});
    batch.push_back(statics_[cursor_]);
    ++cursor_;
  }
  if (!batch.empty()) return batch;
  if (branch_ == 0 && cursor_ == statics_.size() && t == d_ + slot_) {
    // The long request has index 0: it was emitted first.
    auto finish = trace.satisfaction_time(0);
    branch_ = (finish && *finish <= d_) ? 3 : 1;
  }
  if (branch_ == 3 && t3_emitted_ < n3_ &&
      t == d_ + slot_ + Rational(t3_emitted_)) {
    core::Request next = make_type3(t3_emitted_, t);
    emissions_.push_back({next.id, "type-3"});
    batch.push_back(std::move(next));
    ++t3_emitted_;
  }
  return batch;
}

AdversaryTranscript UnicastStretchAdversary::transcript() const {
  if (branch_ == 0)
    throw AdversaryError(
        "transcript is available only after the decision instant");
  AdversaryTranscript out;
  out.emissions = emissions_;
  core::ScheduleTrace& cert = out.certificate;
  cert.mode = core::Mode::Unicast;
  cert.machines = 1;
  cert.speed = 1;
  cert.scheduler = "certificate";
  std::vector<core::SatisfactionRecord> sats;
  if (branch_ == 1) {
    // Long request first, then the medium train back to back from P: every
    // medium request waits one extra train slot, delay factor exactly 2.
    out.branch = "type-1-unfinished";
    cert.segments.push_back(unit_speed_segment("req:t1", TimePoint{0}, p_));
    sats.push_back({0, p_});
    for (long j = 0; j <= k_; ++j) {
      TimePoint start = p_ + Rational(j) * p6_;
      cert.segments.push_back(unit_speed_segment(
          "req:" + statics_[static_cast<size_t>(j) + 1].id, start,
          start + p6_));
      sats.push_back({static_cast<int>(j) + 1, start + p6_});
    }
    out.online_lower_bound = lb1_;
    out.certificate_upper_bound = 2;
    out.ratio_threshold = thr1_;
  } else {
    // Medium train and unit stream exactly on time; the long request cedes
    // its last P^0.6 of work to the very end.
    out.branch = "type-3-stream";
    cert.segments.push_back(
        unit_speed_segment("req:t1", TimePoint{0}, p_ - p6_));
    for (long j = 0; j <= k_; ++j) {
      const core::Request& r = statics_[static_cast<size_t>(j) + 1];
      cert.segments.push_back(
          unit_speed_segment("req:" + r.id, r.arrival, r.arrival + p6_));
      sats.push_back({static_cast<int>(j) + 1, r.arrival + p6_});
    }
    TimePoint stream_begin = d_ + slot_;
    for (long i = 0; i < n3_; ++i) {
      TimePoint start = stream_begin + Rational(i);
      cert.segments.push_back(unit_speed_segment(
          "req:" + make_type3(i, start).id, start, start + 1));
      sats.push_back(
          {static_cast<int>(statics_.size()) + static_cast<int>(i), start + 1});
    }
    TimePoint tail = stream_begin + Rational(n3_);
    cert.segments.push_back(unit_speed_segment("req:t1", tail, tail + p6_));
    sats.push_back({0, tail + p6_});
    out.online_lower_bound = lb3_;
    out.certificate_upper_bound = cert3_;
    out.ratio_threshold = thr3_;
  }
  sort_satisfactions(sats);
  cert.satisfactions = std::move(sats);
  out.claimed_ratio = out.online_lower_bound / out.certificate_upper_bound;
  return out;
}

BroadcastCyclicAdversary::BroadcastCyclicAdversary(int n) : n_(n) {
  if (n < 8 || n % 2 != 0)
    throw AdversaryError("page count n must be an even integer >= 8");
  half_ = Rational(n) / 2;
  quarter_ = Rational(n) / 4;
  for (int i = 1; i <= n; ++i) catalog_.lengths[page_id(i)] = 1;
  for (int i = 1; i <= n / 2; ++i)
    statics_.push_back(core::Request{"ph1-" + page_id(i), TimePoint{0}, half_,
                                     Rational{0}, page_id(i), -1});
  // Cyclic tail: page n/2+i at j*(n/2)+i-1 for j = 1..n — all arrivals
  // distinct and ascending in (j, i) order.
  long total = static_cast<long>(n) * (n / 2);
  const int width = width_of(total);
  long seq = 0;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n / 2; ++i) {
      TimePoint arrival = Rational(j) * half_ + (i - 1);
      statics_.push_back(core::Request{"ph3-" + zero_pad(++seq, width),
                                       arrival, arrival + 1, Rational{0},
                                       page_id(n / 2 + i), -1});
    }
}

core::PageId BroadcastCyclicAdversary::page_id(int number) const {
  return "p" + zero_pad(number, width_of(n_));
}

bool BroadcastCyclicAdversary::mirrors(const core::PageId& page) const {
  // Zero padding makes lexicographic order match numeric order.
  return page <= page_id(n_ / 2);
}

std::optional<TimePoint> BroadcastCyclicAdversary::peek(
    const core::ScheduleTrace& trace, const TimePoint& now) {
  std::optional<TimePoint> best;
  auto offer = [&](const TimePoint& t) {
    if (!best || t < *best) best = t;
  };
  for (size_t pos = 0; pos < trace.transmissions.size(); ++pos) {
    const core::TransmissionRecord& txn = trace.transmissions[pos];
    if (!txn.completion || spawned_.count(pos) != 0) continue;
    if (!(*txn.completion <= quarter_) || !mirrors(txn.page)) continue;
    offer(*txn.completion < now ? now : *txn.completion);
  }
  if (cursor_ < statics_.size()) offer(statics_[cursor_].arrival);
  return best;
}

std::vector<core::Request> BroadcastCyclicAdversary::take(
    const core::ScheduleTrace& trace, const TimePoint& t) {
  std::vector<core::Request> batch;
  for (size_t pos = 0; pos < trace.transmissions.size(); ++pos) {
    const core::TransmissionRecord& txn = trace.transmissions[pos];
    if (!txn.completion || spawned_.count(pos) != 0) continue;
    if (!(*txn.completion <= quarter_) || !mirrors(txn.page)) continue;
    if (!(*txn.completion <= t)) continue;
    if (!(t < half_))
      throw AdversaryError("re-request would arrive at or past its deadline");
    spawned_.insert(pos);
    batch.push_back(core::Request{"ph2-" + zero_pad(++spawn_count_,
                                                    width_of(n_)),
                                  t, half_, Rational{0}, txn.page, -1});
  }
  while (cursor_ < statics_.size() && statics_[cursor_].arrival == t) {
    batch.push_back(statics_[cursor_]);
    ++cursor_;
  }
  std::sort(batch.begin(), batch.end(),
            [](const core::Request& a, const core::Request& b) {
              return a.id < b.id;
            });
  for (const core::Request& r : batch) {
    std::string reason = "phase-1";
    if (r.id.rfind("ph2-", 0) == 0) reason = "phase-2";
    if (r.id.rfind("ph3-", 0) == 0) reason = "phase-3";
    emissions_.push_back({r.id, reason});
    emitted_.push_back(r);
  }
  return batch;
}

AdversaryTranscript BroadcastCyclicAdversary::transcript() const {
  AdversaryTranscript out;
  out.emissions = emissions_;
  out.branch = "cyclic";
  core::ScheduleTrace& cert = out.certificate;
  cert.mode = core::Mode::Broadcast;
  cert.machines = 1;
  cert.speed = 1;
  cert.scheduler = "certificate";

  // Last re-request time of each re-requested page.
  std::map<core::PageId, TimePoint> last_rerequest;
  for (const core::Request& r : emitted_)
    if (r.id.rfind("ph2-", 0) == 0) {
      auto [it, fresh] = last_rerequest.emplace(*r.page, r.arrival);
      if (!fresh && it->second < r.arrival) it->second = r.arrival;
    }
  if (Rational(static_cast<long>(last_rerequest.size())) > quarter_)
    throw AdversaryError(
        "more re-requested pages than trailing certificate slots; the "
        "driving run exceeded the speed-1 transmission budget");

  // Slot order on [0, n/2): never-re-requested pages ascending, then
  // re-requested pages by (last re-request time, page). Every trailing slot
  // starts at or after n/4, hence at or after every re-request arrival.
  std::vector<core::PageId> order;
  for (int i = 1; i <= n_ / 2; ++i) {
    core::PageId page = page_id(i);
    if (last_rerequest.count(page) == 0) order.push_back(page);
  }
  std::vector<std::pair<TimePoint, core::PageId>> tail(last_rerequest.size());
  std::transform(last_rerequest.begin(), last_rerequest.end(), tail.begin(),
                 [](const auto& entry) {
                   return std::make_pair(entry.second, entry.first);
                 });
  std::sort(tail.begin(), tail.end());
  for (const auto& [when, page] : tail) order.push_back(page);

  // Planned unit transmissions: the first block, then every cyclic request
  // exactly on arrival (their slots tile [n/2, (n+1)n/2) without overlap).
  std::vector<std::pair<TimePoint, core::PageId>> plan;
  for (size_t s = 0; s < order.size(); ++s)
    plan.emplace_back(TimePoint(static_cast<long>(s)), order[s]);
  for (const core::Request& r : emitted_)
    if (r.id.rfind("ph3-", 0) == 0) plan.emplace_back(r.arrival, *r.page);
  std::sort(plan.begin(), plan.end());

  std::vector<core::SatisfactionRecord> sats;
  std::vector<bool> satisfied(emitted_.size(), false);
  std::map<core::PageId, int> ordinals;
  for (const auto& [start, page] : plan) {
    TimePoint end = start + 1;
    int trigger = -1;
    for (size_t i = 0; i < emitted_.size(); ++i) {
      const core::Request& r = emitted_[i];
      if (satisfied[i] || *r.page != page || !(r.arrival <= start)) continue;
      satisfied[i] = true;
      sats.push_back({static_cast<int>(i), end});
      if (trigger < 0 || emitted_[static_cast<size_t>(trigger)].arrival >
                             r.arrival)
        trigger = static_cast<int>(i);
    }
    int ordinal = ++ordinals[page];
    cert.transmissions.push_back(core::TransmissionRecord{
        page, ordinal, trigger, start, end, std::nullopt, Rational{0}});
    cert.segments.push_back(
        unit_speed_segment(page + "#" + std::to_string(ordinal), start, end));
  }
  sort_satisfactions(sats);
  cert.satisfactions = std::move(sats);

  out.online_lower_bound = quarter_;
  out.certificate_upper_bound = 1;
  out.claimed_ratio = quarter_;
  out.ratio_threshold = quarter_;
  return out;
}

}  // namespace delayfactor::adversaries
