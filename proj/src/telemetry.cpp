#include "mrtele/telemetry.hpp"

#include "mrtele/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace mrtele::session {

namespace {

constexpr std::array<std::pair<EventFlag, const char*>, 5> kEventNames = {{
    {kEventCollision, "collision"},
    {kEventClamp, "clamp"},
    {kEventDemag, "demag"},
    {kEventIkFail, "ik_fail"},
    {kEventCommand, "command"},
}};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "not a number: '" + text + "'");
  }
  return v;
}

nlohmann::ordered_json record_to_json(const TelemetryRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["master_q"] = r.master_q;
  j["slave_q"] = r.slave_q;
  j["master_ee"] = r.master_ee;
  j["slave_ee"] = r.slave_ee;
  j["force"] = r.force;
  j["current"] = r.current;
  j["tau"] = r.tau;
  j["semg"] = r.semg;
  j["events"] = events_to_string(r.events);
  return j;
}

TelemetryRecord record_from_json(const nlohmann::json& j) {
  TelemetryRecord r;
  r.t = j.at("t").get<double>();
  r.master_q = j.at("master_q").get<std::vector<double>>();
  r.slave_q = j.at("slave_q").get<std::vector<double>>();
  r.master_ee = j.at("master_ee").get<Vec3d>();
  r.slave_ee = j.at("slave_ee").get<Vec3d>();
  r.force = j.at("force").get<Vec3d>();
  r.current = j.at("current").get<std::vector<double>>();
  r.tau = j.at("tau").get<std::vector<double>>();
  r.semg = j.at("semg").get<double>();
  r.events = events_from_string(j.at("events").get<std::string>());
  return r;
}

std::size_t count_prefixed(const std::vector<std::string>& cols, const std::string& prefix) {
  std::size_t n = 0;
  while (true) {
    const std::string name = prefix + std::to_string(n + 1);
    bool found = false;
    for (const auto& c : cols) found = found || c == name;
    if (!found) return n;
    ++n;
  }
}

std::vector<TelemetryRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty telemetry");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto cols = split(line, ',');
  const std::size_t m = count_prefixed(cols, "mq");
  const std::size_t s = count_prefixed(cols, "sq");
  const std::size_t k = count_prefixed(cols, "tau");
  if (line != csv_header(m, s, k)) throw ParseError(1, "unexpected telemetry header");

  std::vector<TelemetryRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) {
      throw ParseError(line_no, "expected " + std::to_string(cols.size()) + " fields, got " +
                                    std::to_string(f.size()));
    }
    TelemetryRecord r;
    std::size_t c = 0;
    auto next = [&] { return parse_number(f[c++], line_no); };
    r.t = next();
    for (std::size_t i = 0; i < m; ++i) r.master_q.push_back(next());
    for (std::size_t i = 0; i < s; ++i) r.slave_q.push_back(next());
    for (auto& v : r.master_ee) v = next();
    for (auto& v : r.slave_ee) v = next();
    for (auto& v : r.force) v = next();
    for (std::size_t i = 0; i < k; ++i) r.current.push_back(next());
    for (std::size_t i = 0; i < k; ++i) r.tau.push_back(next());
    r.semg = next();
    try {
      r.events = events_from_string(f[c]);
    } catch (const InvalidArgument& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TelemetryRecord> parse_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<TelemetryRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace

std::string events_to_string(std::uint32_t events) {
  std::string out;
  for (const auto& [flag, name] : kEventNames) {
    if (events & flag) {
      if (!out.empty()) out += '|';
      out += name;
    }
  }
  return out;
}

std::uint32_t events_from_string(const std::string& text) {
  if (text.empty()) return 0;
  std::uint32_t out = 0;
  for (const auto& part : split(text, '|')) {
    bool known = false;
    for (const auto& [flag, name] : kEventNames) {
      if (part == name) {
        out |= flag;
        known = true;
      }
    }
    if (!known) throw InvalidArgument("unknown event '" + part + "'");
  }
  return out;
}

TelemetryFormat telemetry_format_from_string(const std::string& text) {
  if (text == "csv") return TelemetryFormat::csv;
  if (text == "json" || text == "structured" || text == "jsonl") return TelemetryFormat::json;
  throw InvalidArgument("unknown telemetry format '" + text + "' (csv or json)");
}

std::string csv_header(std::size_t master_dof, std::size_t slave_dof, std::size_t clutches) {
  std::string h = "t";
  for (std::size_t i = 1; i <= master_dof; ++i) h += ",mq" + std::to_string(i);
  for (std::size_t i = 1; i <= slave_dof; ++i) h += ",sq" + std::to_string(i);
  h += ",mex,mey,mez,sex,sey,sez,fx,fy,fz";
  for (std::size_t i = 1; i <= clutches; ++i) h += ",i" + std::to_string(i);
  for (std::size_t i = 1; i <= clutches; ++i) h += ",tau" + std::to_string(i);
  h += ",semg,events";
  return h;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

std::string telemetry_to_string(const std::vector<TelemetryRecord>& records,
                                TelemetryFormat format) {
  std::string out;
  if (format == TelemetryFormat::json) {
    for (const auto& r : records) {
      out += record_to_json(r).dump();
      out += '\n';
    }
    return out;
  }
  if (records.empty()) return out;
  const auto& first = records.front();
  out += csv_header(first.master_q.size(), first.slave_q.size(), first.tau.size());
  out += '\n';
  for (const auto& r : records) {
    out += format_double(r.t);
    auto put = [&out](double v) {
      out += ',';
      out += format_double(v);
    };
    for (double v : r.master_q) put(v);
    for (double v : r.slave_q) put(v);
    for (double v : r.master_ee) put(v);
    for (double v : r.slave_ee) put(v);
    for (double v : r.force) put(v);
    for (double v : r.current) put(v);
    for (double v : r.tau) put(v);
    put(r.semg);
    out += ',';
    out += events_to_string(r.events);
    out += '\n';
  }
  return out;
}

void export_telemetry(const std::vector<TelemetryRecord>& records, const std::string& path,
                      TelemetryFormat format) {
  if (records.empty()) throw InvalidArgument("export_telemetry: no records");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << telemetry_to_string(records, format);
  if (!out) throw IoError("write failed for " + path);
}

std::vector<TelemetryRecord> parse_telemetry(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ParseError(1, "empty telemetry");
  if (text[first] == '{') return parse_jsonl(text);
  return parse_csv(text);
}

std::vector<TelemetryRecord> import_telemetry(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_telemetry(ss.str());
}

}  // namespace mrtele::session
