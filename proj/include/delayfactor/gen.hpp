#pragma once

#include "delayfactor/core.hpp"

#include <cstdint>
#include <vector>

namespace delayfactor::gen {

/// Deterministic instance generation: identical specs produce identical
/// instances (and therefore byte-identical files). Profiles:
///   unicast-random   — rational arrivals/lengths/slacks with denominators
///                      in {1, 2, 4}; slack = length + nonnegative extra.
///   broadcast-random — integer arrival gaps in {0, 1, 2}, integer slacks
///                      in 1..6, page lengths drawn from
///                      page_length_choices (so the slotted oracle's
///                      default grid stays coarse).
///   bursty-page      — like broadcast-random but requests arrive in
///                      bursts of 2..4 for one page, so every instance has
///                      at least two requests per touched page.
struct GenSpec {
  std::string profile = "unicast-random";
  std::uint64_t seed = 1;
  int count = 10;     // total number of requests (bursty may overshoot by <4)
  int pages = 4;      // broadcast profiles only
  int machines = 1;   // unicast only; broadcast is single-machine
  std::vector<long> page_length_choices = {1};
};

/// Throws std::invalid_argument on an unknown profile or nonpositive
/// count/pages/machines/lengths.
core::Instance generate(const GenSpec& spec);

/// Deterministic uniform draws from [0, n): rejection sampling on raw
/// mt19937_64 output. Standard-library distribution classes are not
/// portable across implementations; this is.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  ~Rng();
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n); requires n > 0
  long range(long lo, long hi);          // uniform in [lo, hi] inclusive

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace delayfactor::gen
