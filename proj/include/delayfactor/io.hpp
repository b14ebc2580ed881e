#pragma once

#include "delayfactor/core.hpp"

#include <json.hpp>

#include <string>

namespace delayfactor::io {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Exact JSON form of a rational: a decimal string when the value has a
/// terminating decimal expansion ("2.5", "-3"), otherwise a two-element
/// array of integer strings ["num", "den"]. Never a floating-point number.
nlohmann::json rational_to_json(const Rational& r);

/// Accepts an integer, a string ("7", "-2.75", "3/7"), or a two-element
/// array of integers / integer strings [num, den]. Throws IoError on
/// anything else (floating-point numbers included — exactness is the point).
Rational rational_from_json(const nlohmann::json& j);

nlohmann::json instance_to_json(const core::Instance& inst);
core::Instance instance_from_json(const nlohmann::json& j);
core::Instance load_instance(const std::string& path);
void save_instance(const core::Instance& inst, const std::string& path);

/// JSON-lines encoding of a trace: a meta line first, then one line per
/// event — segments, transmissions, satisfactions — each carrying the
/// common fields kind, machine, subject, work, and the event time split
/// into exact integer strings time-num / time-den. List order round-trips.
std::string trace_to_jsonl(const core::ScheduleTrace& trace);
core::ScheduleTrace trace_from_jsonl(const std::string& text);
core::ScheduleTrace load_trace(const std::string& path);
void save_trace(const core::ScheduleTrace& trace, const std::string& path);

/// Delay-factor report with exact values plus non-authoritative decimal
/// convenience fields.
nlohmann::json report_to_json(const core::Instance& inst,
                              const core::DelayFactorReport& report);

}  // namespace delayfactor::io
