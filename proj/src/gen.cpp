#include "delayfactor/gen.hpp"

#include <random>
#include <stdexcept>

namespace delayfactor::gen {

struct Rng::Impl {
  std::mt19937_64 engine;
};

Rng::Rng(std::uint64_t seed) : impl_(new Impl{std::mt19937_64(seed)}) {}
Rng::~Rng() { delete impl_; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below needs n > 0");
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t draw;
  do {
    draw = impl_->engine();
  } while (draw >= limit);
  return draw % n;
}

long Rng::range(long lo, long hi) {
  return lo + static_cast<long>(
                  below(static_cast<std::uint64_t>(hi - lo) + 1));
}

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

void check_positive(const GenSpec& spec) {
  if (spec.count < 1) throw std::invalid_argument("count must be at least 1");
  if (spec.pages < 1) throw std::invalid_argument("pages must be at least 1");
  if (spec.machines < 1)
    throw std::invalid_argument("machines must be at least 1");
  if (spec.page_length_choices.empty())
    throw std::invalid_argument("page length choices must be nonempty");
  for (long len : spec.page_length_choices)
    if (len < 1)
      throw std::invalid_argument("page lengths must be positive integers");
}

/// Small rational with denominator in {1, 2, 4}.
Rational small_rational(Rng& rng, long num_lo, long num_hi) {
  static const long denominators[] = {1, 2, 4};
  long num = rng.range(num_lo, num_hi);
  long den = denominators[rng.below(3)];
  return Rational(num, den);
}

core::Instance unicast_random(const GenSpec& spec, Rng& rng) {
  core::Instance inst;
  inst.mode = core::Mode::Unicast;
  inst.machines = spec.machines;
  const int width = width_of(spec.count);
  TimePoint arrival{0};
  for (int i = 1; i <= spec.count; ++i) {
    arrival += small_rational(rng, 0, 6);
    Rational length = small_rational(rng, 1, 8);
    Rational slack = length + small_rational(rng, 0, 8);
    core::Request r;
    r.id = "r" + zero_pad(i, width);
    r.arrival = arrival;
    r.deadline = arrival + slack;
    r.length = length;
    r.index = i - 1;
    inst.requests.push_back(std::move(r));
  }
  return inst;
}

core::PageCatalog make_pages(const GenSpec& spec, Rng& rng, int width) {
  core::PageCatalog catalog;
  for (int p = 1; p <= spec.pages; ++p) {
    long len = spec.page_length_choices[rng.below(
        spec.page_length_choices.size())];
    catalog.lengths["p" + zero_pad(p, width)] = Rational(len);
  }
  return catalog;
}

core::Instance broadcast_random(const GenSpec& spec, Rng& rng) {
  core::Instance inst;
  inst.mode = core::Mode::Broadcast;
  inst.machines = 1;
  const int page_width = width_of(spec.pages);
  inst.pages = make_pages(spec, rng, page_width);
  const int width = width_of(spec.count);
  long arrival = 0;
  for (int i = 1; i <= spec.count; ++i) {
    arrival += rng.range(0, 2);
    core::Request r;
    r.id = "r" + zero_pad(i, width);
    r.arrival = Rational(arrival);
    r.deadline = Rational(arrival + rng.range(1, 6));
    r.page = "p" + zero_pad(rng.range(1, spec.pages), page_width);
    r.index = i - 1;
    inst.requests.push_back(std::move(r));
  }
  return inst;
}

core::Instance bursty_page(const GenSpec& spec, Rng& rng) {
  core::Instance inst;
  inst.mode = core::Mode::Broadcast;
  inst.machines = 1;
  const int page_width = width_of(spec.pages);
  inst.pages = make_pages(spec, rng, page_width);
  // Bursts of 2..4 same-page requests at one instant guarantee at least two
  // requests per touched page in every instance.
  const int width = width_of(spec.count + 3);
  long arrival = 0;
  int emitted = 0;
  while (emitted < spec.count) {
    arrival += rng.range(1, 3);
    long burst = rng.range(2, 4);
    core::PageId page = "p" + zero_pad(rng.range(1, spec.pages), page_width);
    for (long b = 0; b < burst; ++b) {
      core::Request r;
      r.id = "r" + zero_pad(++emitted, width);
      r.arrival = Rational(arrival);
      r.deadline = Rational(arrival + rng.range(1, 6));
      r.page = page;
      r.index = emitted - 1;
      inst.requests.push_back(std::move(r));
    }
  }
  return inst;
}

}  // namespace

core::Instance generate(const GenSpec& spec) {
  check_positive(spec);
  Rng rng(spec.seed);
  if (spec.profile == "unicast-random") return unicast_random(spec, rng);
  if (spec.profile == "broadcast-random") return broadcast_random(spec, rng);
  if (spec.profile == "bursty-page") return bursty_page(spec, rng);
  throw std::invalid_argument(
      "unknown profile: " + spec.profile +
      " (expected unicast-random, broadcast-random, or bursty-page)");
}

}  // namespace delayfactor::gen
