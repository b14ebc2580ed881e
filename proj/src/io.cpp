#include "delayfactor/io.hpp"

#include <fstream>
#include <sstream>

namespace delayfactor::io {

using nlohmann::json;

namespace {

Int int_from_json(const json& j, const char* what) {
  if (j.is_number_integer()) return Int(j.get<long long>());
  if (j.is_string()) {
    const std::string& text = j.get_ref<const std::string&>();
    try {
      return Int(text);
    } catch (const std::exception&) {
      throw IoError(std::string("malformed integer for ") + what + ": " + text);
    }
  }
  throw IoError(std::string("expected an integer (or integer string) for ") +
                what);
}

json int_to_json_string(const Int& v) {
  return json(v.str());
}

std::optional<Rational> optional_rational(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return rational_from_json(*it);
}

json time_num(const Rational& t) { return int_to_json_string(numerator(t)); }
json time_den(const Rational& t) { return int_to_json_string(denominator(t)); }

Rational time_from(const json& line) {
  Int num = int_from_json(line.at("time-num"), "time-num");
  Int den = int_from_json(line.at("time-den"), "time-den");
  if (den == 0) throw IoError("time-den must be nonzero");
  return Rational(num, den);
}

const std::string& required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw IoError(std::string("missing string field: ") + key);
  return it->get_ref<const std::string&>();
}

void parse_trace_line(core::ScheduleTrace& trace, const json& line,
                      bool& saw_meta);

int required_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer())
    throw IoError(std::string("missing integer field: ") + key);
  return it->get<int>();
}

}  // namespace

json rational_to_json(const Rational& r) {
  std::string decimal = to_decimal_string(r);
  if (decimal.find('/') == std::string::npos) return json(decimal);
  return json::array({int_to_json_string(numerator(r)),
                      int_to_json_string(denominator(r))});
}

Rational rational_from_json(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_number_float())
    throw IoError(
        "floating-point numerics are not accepted; use a decimal string or "
        "[num, den]");
  if (j.is_string()) {
    auto parsed = parse_rational(j.get_ref<const std::string&>());
    if (!parsed)
      throw IoError("malformed rational: " + j.get<std::string>());
    return *parsed;
  }
  if (j.is_array() && j.size() == 2) {
    Int num = int_from_json(j[0], "numerator");
    Int den = int_from_json(j[1], "denominator");
    if (den == 0) throw IoError("rational denominator must be nonzero");
    return Rational(num, den);
  }
  throw IoError("expected a rational: integer, string, or [num, den]");
}

json instance_to_json(const core::Instance& inst) {
  json out;
  out["mode"] = inst.mode == core::Mode::Unicast ? "unicast" : "broadcast";
  out["machines"] = inst.machines;
  json pages = json::array();
  for (const auto& [id, length] : inst.pages.lengths)
    pages.push_back({{"id", id}, {"length", rational_to_json(length)}});
  out["pages"] = std::move(pages);
  json requests = json::array();
  for (const core::Request& r : inst.requests) {
    json row;
    row["id"] = r.id;
    row["arrival"] = rational_to_json(r.arrival);
    row["deadline"] = rational_to_json(r.deadline);
    if (inst.mode == core::Mode::Unicast)
      row["length"] = rational_to_json(r.length);
    else
      row["page"] = *r.page;
    requests.push_back(std::move(row));
  }
  out["requests"] = std::move(requests);
  return out;
}

core::Instance instance_from_json(const json& j) {
  core::Instance inst;
  const std::string& mode = required_string(j, "mode");
  if (mode == "unicast")
    inst.mode = core::Mode::Unicast;
  else if (mode == "broadcast")
    inst.mode = core::Mode::Broadcast;
  else
    throw IoError("mode must be \"unicast\" or \"broadcast\": " + mode);
  inst.machines = j.contains("machines") ? required_int(j, "machines") : 1;
  if (j.contains("pages")) {
    if (!j.at("pages").is_array()) throw IoError("pages must be an array");
    for (const json& row : j.at("pages")) {
      core::PageId id = required_string(row, "id");
      if (inst.pages.has(id)) throw IoError("duplicate page id: " + id);
      inst.pages.lengths[id] = rational_from_json(row.at("length"));
    }
  }
  if (!j.contains("requests") || !j.at("requests").is_array())
    throw IoError("requests must be an array");
  int index = 0;
  for (const json& row : j.at("requests")) {
    core::Request r;
    r.id = required_string(row, "id");
    r.arrival = rational_from_json(row.at("arrival"));
    r.deadline = rational_from_json(row.at("deadline"));
    if (row.contains("length")) r.length = rational_from_json(row.at("length"));
    if (row.contains("page")) r.page = required_string(row, "page");
    r.index = index++;
    inst.requests.push_back(std::move(r));
  }
  return inst;
}

core::Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed instance JSON in " + path + ": " + e.what());
  }
  return instance_from_json(j);
}

void save_instance(const core::Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file: " + path);
  out << instance_to_json(inst).dump(2) << "\n";
}

std::string trace_to_jsonl(const core::ScheduleTrace& trace) {
  std::ostringstream out;
  json meta;
  meta["kind"] = "meta";
  meta["machine"] = 0;
  meta["subject"] = "";
  meta["work"] = rational_to_json(Rational{0});
  meta["time-num"] = "0";
  meta["time-den"] = "1";
  meta["mode"] = trace.mode == core::Mode::Unicast ? "unicast" : "broadcast";
  meta["machines"] = trace.machines;
  meta["speed"] = rational_to_json(trace.speed);
  meta["scheduler"] = trace.scheduler;
  meta["wait-c"] =
      trace.wait_c ? rational_to_json(*trace.wait_c) : json(nullptr);
  meta["truncated"] = trace.truncated;
  meta["horizon"] =
      trace.horizon ? rational_to_json(*trace.horizon) : json(nullptr);
  out << meta.dump() << "\n";
  for (const core::Segment& s : trace.segments) {
    json line;
    line["kind"] = "segment";
    line["machine"] = s.machine;
    line["subject"] = s.subject;
    line["work"] = rational_to_json(s.work);
    line["time-num"] = time_num(s.end);
    line["time-den"] = time_den(s.end);
    line["start-num"] = time_num(s.start);
    line["start-den"] = time_den(s.start);
    out << line.dump() << "\n";
  }
  for (const core::TransmissionRecord& t : trace.transmissions) {
    json line;
    line["kind"] = "transmission";
    line["machine"] = 0;
    line["subject"] = t.subject();
    line["work"] = rational_to_json(Rational{0});
    line["time-num"] = time_num(t.start);
    line["time-den"] = time_den(t.start);
    line["page"] = t.page;
    line["ordinal"] = t.ordinal;
    line["trigger-index"] = t.trigger_index;
    line["completion"] =
        t.completion ? rational_to_json(*t.completion) : json(nullptr);
    line["abandoned-at"] =
        t.abandoned_at ? rational_to_json(*t.abandoned_at) : json(nullptr);
    line["discarded-work"] = rational_to_json(t.discarded_work);
    out << line.dump() << "\n";
  }
  for (const core::SatisfactionRecord& s : trace.satisfactions) {
    json line;
    line["kind"] = "satisfy";
    line["machine"] = 0;
    line["subject"] = "";
    line["work"] = rational_to_json(Rational{0});
    line["time-num"] = time_num(s.time);
    line["time-den"] = time_den(s.time);
    line["request-index"] = s.request_index;
    out << line.dump() << "\n";
  }
  return out.str();
}

core::ScheduleTrace trace_from_jsonl(const std::string& text) {
  core::ScheduleTrace trace;
  std::istringstream in(text);
  std::string raw;
  bool saw_meta = false;
  long line_number = 0;
  auto here = [&line_number]() {
    return "trace line " + std::to_string(line_number) + ": ";
  };
  while (std::getline(in, raw)) {
    ++line_number;
    if (raw.empty()) continue;
    json line;
    try {
      line = json::parse(raw);
    } catch (const json::exception& e) {
      throw IoError(here() + "malformed JSON: " + e.what());
    }
    try {
      parse_trace_line(trace, line, saw_meta);
    } catch (const IoError& e) {
      throw IoError(here() + e.what());
    } catch (const json::exception& e) {
      throw IoError(here() + e.what());
    }
  }
  if (!saw_meta) throw IoError("trace is empty: no meta line");
  return trace;
}

namespace {

void parse_trace_line(core::ScheduleTrace& trace, const json& line,
                      bool& saw_meta) {
  const std::string& kind = required_string(line, "kind");
    if (kind == "meta") {
      if (saw_meta) throw IoError("duplicate meta line in trace");
      saw_meta = true;
      const std::string& mode = required_string(line, "mode");
      if (mode == "unicast")
        trace.mode = core::Mode::Unicast;
      else if (mode == "broadcast")
        trace.mode = core::Mode::Broadcast;
      else
        throw IoError("meta mode must be \"unicast\" or \"broadcast\"");
      trace.machines = required_int(line, "machines");
      trace.speed = rational_from_json(line.at("speed"));
      trace.scheduler = required_string(line, "scheduler");
      trace.wait_c = optional_rational(line, "wait-c");
      trace.truncated = line.at("truncated").get<bool>();
      trace.horizon = optional_rational(line, "horizon");
    } else if (kind == "segment") {
      if (!saw_meta) throw IoError("trace must start with a meta line");
      core::Segment s;
      s.machine = required_int(line, "machine");
      s.subject = required_string(line, "subject");
      s.work = rational_from_json(line.at("work"));
      s.end = time_from(line);
      Int num = int_from_json(line.at("start-num"), "start-num");
      Int den = int_from_json(line.at("start-den"), "start-den");
      if (den == 0) throw IoError("start-den must be nonzero");
      s.start = Rational(num, den);
      trace.segments.push_back(std::move(s));
    } else if (kind == "transmission") {
      if (!saw_meta) throw IoError("trace must start with a meta line");
      core::TransmissionRecord t;
      t.page = required_string(line, "page");
      t.ordinal = required_int(line, "ordinal");
      t.trigger_index = required_int(line, "trigger-index");
      t.start = time_from(line);
      t.completion = optional_rational(line, "completion");
      t.abandoned_at = optional_rational(line, "abandoned-at");
      t.discarded_work = rational_from_json(line.at("discarded-work"));
      trace.transmissions.push_back(std::move(t));
    } else if (kind == "satisfy") {
      if (!saw_meta) throw IoError("trace must start with a meta line");
      core::SatisfactionRecord s;
      s.request_index = required_int(line, "request-index");
      s.time = time_from(line);
      trace.satisfactions.push_back(s);
    } else {
      throw IoError("unknown trace line kind: " + kind);
    }
}

}  // namespace

core::ScheduleTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return trace_from_jsonl(buffer.str());
}

void save_trace(const core::ScheduleTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file: " + path);
  out << trace_to_jsonl(trace);
}

json report_to_json(const core::Instance& inst,
                    const core::DelayFactorReport& report) {
  json out;
  out["overall"] = rational_to_json(report.overall);
  out["overall-approx"] = to_double(report.overall);
  out["witness-index"] = report.witness_index;
  out["witness-id"] = report.witness_id;
  json rows = json::array();
  for (size_t i = 0; i < report.per_request.size(); ++i) {
    json row;
    row["id"] = inst.requests[i].id;
    row["factor"] = rational_to_json(report.per_request[i]);
    row["factor-approx"] = to_double(report.per_request[i]);
    rows.push_back(std::move(row));
  }
  out["per-request"] = std::move(rows);
  return out;
}

}  // namespace delayfactor::io
