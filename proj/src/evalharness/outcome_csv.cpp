#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "navscale/evalharness.hpp"

namespace navscale::evalharness {
namespace {

constexpr const char* kHeader = "policy_id,route_id,rep,segment,success,cause,elapsed_s,progress_m";

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw std::invalid_argument(fmt::format("identifier '{}' contains a CSV delimiter", s));
  }
}

}  // namespace

std::vector<OutcomeRow> to_rows(const std::string& policy_id, const RouteOutcome& route) {
  std::vector<OutcomeRow> rows;
  for (const auto& o : route.segments) {
    rows.push_back({policy_id, route.route_id, route.rep, o.segment, o.success, o.cause, o.elapsed_s, o.progress_m});
  }
  return rows;
}

std::vector<SegmentOutcome> to_outcomes(std::span<const OutcomeRow> rows) {
  std::vector<SegmentOutcome> out;
  for (const auto& r : rows) {
    SegmentOutcome o;
    o.segment = r.segment;
    o.success = r.success;
    o.cause = r.cause;
    o.elapsed_s = r.elapsed_s;
    o.progress_m = r.progress_m;
    out.push_back(o);
  }
  return out;
}

void write_outcomes_csv(std::ostream& out, std::span<const OutcomeRow> rows, std::span<const std::string> header_lines) {
  for (const auto& h : header_lines) out << "# " << h << '\n';
  out << kHeader << '\n';
  for (const auto& r : rows) {
    check_field(r.policy_id);
    check_field(r.route_id);
    out << fmt::format("{},{},{},{},{},{},{:.17g},{:.17g}\n", r.policy_id, r.route_id, r.rep, r.segment,
                       r.success ? 1 : 0, to_string(r.cause), r.elapsed_s, r.progress_m);
  }
}

std::vector<OutcomeRow> read_outcomes_csv(std::istream& in) {
  std::vector<OutcomeRow> rows;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kHeader) throw std::invalid_argument(fmt::format("line {}: unexpected CSV header", line_no));
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 8) throw std::invalid_argument(fmt::format("line {}: expected 8 fields, got {}", line_no, f.size()));
    try {
      OutcomeRow r;
      r.policy_id = f[0];
      r.route_id = f[1];
      r.rep = std::stoi(f[2]);
      r.segment = std::stoul(f[3]);
      if (f[4] != "0" && f[4] != "1") throw std::invalid_argument("success must be 0 or 1");
      r.success = f[4] == "1";
      r.cause = failure_cause_from_string(f[5]);
      r.elapsed_s = std::stod(f[6]);
      r.progress_m = std::stod(f[7]);
      if (r.success != (r.cause == FailureCause::kNone)) {
        throw std::invalid_argument("a segment has either success or a failure cause");
      }
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::invalid_argument(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return rows;
}

}  // namespace navscale::evalharness
