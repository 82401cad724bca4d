#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "banditmesh/error.hpp"
#include "banditmesh/harness.hpp"

namespace banditmesh {

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

template <typename T>
T parse_field(std::string_view text, std::size_t line) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw IoError("trace csv line " + std::to_string(line) + ": bad field '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return fields;
    start = comma + 1;
  }
}

nlohmann::ordered_json stats(const std::vector<double>& v) {
  nlohmann::ordered_json j;
  if (v.empty()) {
    j["mean"] = nullptr;
    j["std"] = nullptr;
    j["min"] = nullptr;
    j["max"] = nullptr;
    j["per_replication"] = nlohmann::ordered_json::array();
    return j;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  j["mean"] = mean;
  j["std"] = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
  j["min"] = *std::min_element(v.begin(), v.end());
  j["max"] = *std::max_element(v.begin(), v.end());
  j["per_replication"] = v;
  return j;
}

}  // namespace

void write_trace_csv(std::ostream& out, std::size_t arms, const std::vector<const RegretTrace*>& traces) {
  out << kTraceHeaderPrefix;
  for (std::size_t a = 0; a < arms; ++a) out << ",pulls_arm_" << a;
  out << '\n';
  for (const RegretTrace* trace : traces) {
    for (const TraceRow& row : trace->rows) {
      if (row.pulls.size() != arms) throw UsageError("write_trace_csv: row has the wrong number of arms");
      out << row.replication << ',' << row.t << ',';
      put_double(out, row.regret);
      out << ',' << row.staleness_max << ',' << row.hub_size << ',' << to_string(row.mode);
      for (std::uint64_t p : row.pulls) out << ',' << p;
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing trace csv");
}

RegretTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("trace csv: missing header");
  if (line.rfind(kTraceHeaderPrefix, 0) != 0) throw IoError("trace csv: unexpected header");
  RegretTrace trace;
  const auto header = split(line);
  trace.arms = header.size() - 6;
  for (std::size_t a = 0; a < trace.arms; ++a) {
    if (header[6 + a] != "pulls_arm_" + std::to_string(a)) throw IoError("trace csv: unexpected arm column");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw IoError("trace csv line " + std::to_string(line_no) + ": wrong field count");
    TraceRow row;
    row.replication = parse_field<std::uint64_t>(f[0], line_no);
    row.t = parse_field<std::size_t>(f[1], line_no);
    row.regret = parse_field<double>(f[2], line_no);
    row.staleness_max = parse_field<std::size_t>(f[3], line_no);
    row.hub_size = parse_field<std::int64_t>(f[4], line_no);
    row.mode = parse_mode(f[5]);
    for (std::size_t a = 0; a < trace.arms; ++a) row.pulls.push_back(parse_field<std::uint64_t>(f[6 + a], line_no));
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

nlohmann::ordered_json summarize_runs(const std::vector<ReplicationSummary>& runs) {
  nlohmann::ordered_json j;
  auto frequency = [&](auto member) -> nlohmann::ordered_json {
    std::size_t applicable = 0;
    std::size_t hits = 0;
    for (const auto& r : runs) {
      const std::optional<bool>& flag = r.events.*member;
      if (!flag) continue;
      ++applicable;
      if (*flag) ++hits;
    }
    if (applicable == 0) return nullptr;
    return static_cast<double>(hits) / static_cast<double>(applicable);
  };
  j["events"] = {{"A1", frequency(&EventFlags::a1)},
                 {"A2", frequency(&EventFlags::a2)},
                 {"A3", frequency(&EventFlags::a3)},
                 {"A_alpha_zeta", frequency(&EventFlags::a_alpha_zeta)}};
  std::vector<double> regrets;
  for (const auto& r : runs) regrets.push_back(r.regret);
  j["regret"] = stats(regrets);
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  if (!runs.empty()) {
    for (const auto& [key, value] : runs.front().diagnostics) {
      double sum = 0.0;
      for (const auto& r : runs) {
        const auto it = r.diagnostics.find(key);
        sum += it == r.diagnostics.end() ? 0.0 : it->second;
      }
      diag[key] = sum / static_cast<double>(runs.size());
    }
  }
  j["diagnostics"] = diag;
  return j;
}

}  // namespace banditmesh
