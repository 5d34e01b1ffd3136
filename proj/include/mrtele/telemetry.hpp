#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mrtele::session {

enum EventFlag : std::uint32_t {
  kEventCollision = 1u << 0,
  kEventClamp = 1u << 1,
  kEventDemag = 1u << 2,
  kEventIkFail = 1u << 3,
  kEventCommand = 1u << 4,
};

/// "collision|clamp" style rendering; empty string for no events.
std::string events_to_string(std::uint32_t events);
std::uint32_t events_from_string(const std::string& text);

using Vec3d = std::array<double, 3>;

/// One row per tick.
struct TelemetryRecord {
  double t = 0.0;                 // s
  std::vector<double> master_q;   // rad
  std::vector<double> slave_q;    // rad
  Vec3d master_ee{};              // m
  Vec3d slave_ee{};               // m
  Vec3d force{};                  // N, as received by the master side
  std::vector<double> current;    // A, coil current per actuated joint
  std::vector<double> tau;        // N·m, clutch output torque per actuated joint
  double semg = 0.0;              // µV
  std::uint32_t events = 0;

  bool operator==(const TelemetryRecord&) const = default;
};

enum class TelemetryFormat { csv, json };

TelemetryFormat telemetry_format_from_string(const std::string& text);

/// Header `t,mq1..,sq1..,mex,mey,mez,sex,sey,sez,fx,fy,fz,i1..,tau1..,semg,events`.
std::string csv_header(std::size_t master_dof, std::size_t slave_dof, std::size_t clutches);

/// Shortest round-trip text for a double.
std::string format_double(double v);

/// Serialises records; both formats are lossless.
std::string telemetry_to_string(const std::vector<TelemetryRecord>& records, TelemetryFormat format);

/// Throws InvalidArgument on empty input and IoError when the path cannot be written.
void export_telemetry(const std::vector<TelemetryRecord>& records, const std::string& path,
                      TelemetryFormat format);

/// Reads either format (detected from content). Throws ParseError with line numbers.
std::vector<TelemetryRecord> import_telemetry(const std::string& path);
std::vector<TelemetryRecord> parse_telemetry(const std::string& text);

}  // namespace mrtele::session
