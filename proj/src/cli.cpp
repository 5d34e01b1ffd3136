#include "mrtele/cli.hpp"

#include "mrtele/bridge/host.hpp"
#include "mrtele/clutch.hpp"
#include "mrtele/errors.hpp"
#include "mrtele/session.hpp"
#include "mrtele/telemetry.hpp"

#ifdef MRTELE_WITH_SERVER
#include "mrtele/bridge/server.hpp"
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace mrtele::cli {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

session::TelemetryFormat format_for(const std::string& format, const std::string& path) {
  if (!format.empty()) return session::telemetry_format_from_string(format);
  const auto ext = std::filesystem::path(path).extension().string();
  return (ext == ".json" || ext == ".jsonl") ? session::TelemetryFormat::json : session::TelemetryFormat::csv;
}

void print_collisions(std::ostream& out, const std::vector<session::CollisionSummary>& collisions) {
  out << "collisions: " << collisions.size() << "\n";
  for (std::size_t i = 0; i < collisions.size(); ++i) {
    const auto& c = collisions[i];
    out << "  #" << i + 1 << " object " << c.object_index + 1 << " window " << fmt("%.3f", c.window_start)
        << "-" << fmt("%.3f", c.window_end) << " s  rms torque " << fmt("%.3f", c.rms_torque)
        << " N·m  peak " << fmt("%.3f", c.peak_torque) << " N·m  rms sEMG " << fmt("%.1f", c.rms_semg)
        << " µV\n";
  }
}

/// Blocks until SIGINT/SIGTERM, an optional wall-clock limit, or `done()` turns true.
template <typename Done>
void wait_until(double max_seconds, Done done) {
  g_interrupted = false;
  auto prev_int = std::signal(SIGINT, on_signal);
  auto prev_term = std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted.load() && !done()) {
    if (max_seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= max_seconds) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  std::signal(SIGINT, prev_int);
  std::signal(SIGTERM, prev_term);
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8765;
  double max_seconds = 0.0;
};

void add_serve_args(CLI::App* cmd, ServeArgs& args) {
  cmd->add_option("--host", args.host, "Address to bind")->capture_default_str();
  cmd->add_option("--port", args.port, "TCP port (0 picks a free one)")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  cmd->add_option("--max-seconds", args.max_seconds, "Stop after this many wall-clock seconds (0 = until Ctrl-C)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

#ifdef MRTELE_WITH_SERVER
int serve_source(bridge::StateSource& source, const ServeArgs& args, std::ostream& out,
                 const std::function<bool()>& done) {
  bridge::BridgeServer server(source, {args.host, static_cast<std::uint16_t>(args.port)});
  server.start();
  out << "listening on ws://" << args.host << ":" << server.port() << "/ws (health: /healthz)" << std::endl;
  wait_until(args.max_seconds, done);
  server.stop();
  return kExitOk;
}
#endif

#ifndef MRTELE_WITH_SERVER
[[noreturn]] void no_server() {
  throw std::runtime_error("this build has no websocket server (Boost.Beast was not found at configure time)");
}
#endif

std::vector<session::CalibrationTarget> default_targets(const session::Scenario& sc) {
  std::vector<session::CalibrationTarget> out;
  for (std::size_t i = 0; i < sc.objects.size(); ++i) {
    double target = 0.0;
    switch (sc.objects[i].label) {
      case env::StiffnessClass::high: target = 8.8; break;
      case env::StiffnessClass::medium: target = 7.1; break;
      case env::StiffnessClass::low: target = 2.8; break;
      case env::StiffnessClass::custom: break;
    }
    if (target > 0.0) out.push_back({static_cast<int>(i), target});
  }
  return out;
}

session::CalibrationTarget parse_target(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw CLI::ValidationError("--target", "expected OBJECT=TORQUE, e.g. 1=5.3");
  try {
    const int index = std::stoi(text.substr(0, eq));
    const double torque = std::stod(text.substr(eq + 1));
    if (index < 1) throw std::invalid_argument("object numbers start at 1");
    return {index - 1, torque};
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--target", "expected OBJECT=TORQUE, e.g. 1=5.3");
  }
}

void write_back_stiffness(const std::string& source_path, const std::string& out_path,
                          const std::vector<double>& stiffness) {
  std::ifstream in(source_path);
  if (!in) throw IoError("cannot open " + source_path);
  auto j = nlohmann::ordered_json::parse(in);
  auto& objects = j.at("objects");
  for (std::size_t i = 0; i < stiffness.size() && i < objects.size(); ++i) {
    objects[i]["stiffness_n_per_m"] = stiffness[i];
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path);
  out << j.dump(2) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Master-slave teleoperation simulator with MR-clutch force feedback"};
  app.require_subcommand(1);
  app.allow_extras(false);

  // run
  std::string run_scenario_path, run_out, run_format;
  std::int64_t run_seed = -1;
  auto* run = app.add_subcommand("run", "Run a scenario and write its telemetry");
  run->add_option("--scenario", run_scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Telemetry output path")->required();
  run->add_option("--format", run_format, "csv or json (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--seed", run_seed, "Override the scenario seed")->check(CLI::NonNegativeNumber);

  // fit
  std::string fit_input, fit_out = "fit_result.json";
  auto* fit = app.add_subcommand("fit", "Fit Hill parameters to current/torque samples");
  fit->add_option("--input", fit_input, "CSV with header current_a,torque_nm")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out, "Where to save the fit as JSON")->capture_default_str();

  // metrics
  clutch::ClutchSpec spec;
  bool metrics_json = false;
  auto* metrics = app.add_subcommand("metrics", "Torque-to-mass, -volume and -power ratios");
  metrics->add_option("--torque", spec.max_torque, "Peak locking torque (N·m)")->capture_default_str();
  metrics->add_option("--mass", spec.mass, "Clutch mass (kg)")->capture_default_str();
  metrics->add_option("--volume", spec.volume, "Clutch volume (m^3)")->capture_default_str();
  metrics->add_option("--power", spec.dissipated_power, "Power at peak torque (W)")->capture_default_str();
  metrics->add_flag("--json", metrics_json, "Print JSON instead of a table");

  // export
  std::string export_input, export_out, export_format;
  auto* exp = app.add_subcommand("export", "Convert a telemetry file between csv and json");
  exp->add_option("--input", export_input, "Telemetry file (csv or json lines)")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", export_out, "Output path")->required();
  exp->add_option("--format", export_format, "csv or json (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "json"}));

  // replay
  std::string replay_input, replay_name;
  double replay_rate = 1.0;
  ServeArgs replay_args;
  auto* replay = app.add_subcommand("replay", "Stream a telemetry file through the bridge");
  replay->add_option("--input", replay_input, "Telemetry file")->required()->check(CLI::ExistingFile);
  replay->add_option("--name", replay_name, "Name reported on /healthz (default: file stem)");
  replay->add_option("--rate", replay_rate, "Playback speed factor (0 = as fast as possible)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_serve_args(replay, replay_args);

  // serve
  std::string serve_scenario, serve_dir;
  double serve_factor = 1.0;
  bool serve_paused = false;
  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run a scenario live behind the websocket bridge");
  serve->add_option("--scenario", serve_scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  serve->add_option("--scenario-dir", serve_dir, "Directory for select_scenario (default: the scenario's)");
  serve->add_option("--realtime-factor", serve_factor, "Simulated seconds per wall second (0 = flat out)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  serve->add_flag("--paused", serve_paused, "Start paused");
  add_serve_args(serve, serve_args);

  // calibrate-env
  std::string cal_scenario, cal_out;
  std::vector<std::string> cal_targets;
  double cal_tol = 0.01;
  int cal_runs = 40;
  auto* cal = app.add_subcommand("calibrate-env", "Tune object stiffness to target collision RMS torques");
  cal->add_option("--scenario", cal_scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cal->add_option("--target", cal_targets,
                  "OBJECT=TORQUE (1-based object, N·m); default: 8.8/7.1/2.8 for high/medium/low objects");
  cal->add_option("--out", cal_out, "Write the tuned scenario here (default: overwrite --scenario)");
  cal->add_option("--tol", cal_tol, "Relative tolerance on the RMS torque")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cal->add_option("--max-runs", cal_runs, "Simulation budget per object")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      auto sc = session::load_scenario_file(run_scenario_path);
      if (run_seed >= 0) sc.run.seed = static_cast<std::uint64_t>(run_seed);
      const auto records = session::run_scenario(sc);
      session::export_telemetry(records, run_out, format_for(run_format, run_out));
      out << "scenario " << sc.run.name << ": " << records.size() << " ticks written to " << run_out << "\n";
      print_collisions(out, session::analyze_collisions(sc, records));
    } else if (*fit) {
      const auto result = clutch::fit_hill(clutch::read_samples_csv(fit_input));
      const std::string text = clutch::fit_result_to_json(result);
      out << text << "\n";
      std::ofstream f(fit_out, std::ios::trunc);
      if (!f) throw IoError("cannot write " + fit_out);
      f << text << "\n";
    } else if (*metrics) {
      const auto m = clutch::performance_metrics(spec);
      if (metrics_json) {
        nlohmann::ordered_json j = {{"tmr_nm_per_kg", m.tmr}, {"tvr_nm_per_m3", m.tvr}, {"tpr_nm_per_w", m.tpr}};
        out << j.dump(2) << "\n";
      } else {
        out << "metric  value       unit\n";
        out << "TMR     " << fmt("%-10.4g", m.tmr) << "  N·m/kg\n";
        out << "TVR     " << fmt("%-10.4g", m.tvr) << "  N·m/m³\n";
        out << "TPR     " << fmt("%-10.4g", m.tpr) << "  N·m/W\n";
      }
    } else if (*exp) {
      const auto records = session::import_telemetry(export_input);
      session::export_telemetry(records, export_out, format_for(export_format, export_out));
      out << records.size() << " records written to " << export_out << "\n";
    } else if (*replay) {
      auto records = session::import_telemetry(replay_input);
      if (replay_name.empty()) replay_name = std::filesystem::path(replay_input).stem().string();
#ifdef MRTELE_WITH_SERVER
      bridge::ReplayHost host(std::move(records), replay_name, replay_rate);
      host.start();
      return serve_source(host, replay_args, out, [] { return false; });
#else
      no_server();
#endif
    } else if (*serve) {
      auto sc = session::load_scenario_file(serve_scenario);
      bridge::HostOptions opts;
      opts.realtime_factor = serve_factor;
      opts.scenario_dir = serve_dir.empty()
                              ? std::filesystem::path(serve_scenario).parent_path().string()
                              : serve_dir;
      if (opts.scenario_dir.empty()) opts.scenario_dir = ".";
#ifdef MRTELE_WITH_SERVER
      bridge::SimulationHost host(std::move(sc), opts);
      if (serve_paused) host.submit({"", bridge::CommandKind::pause, {}, {}});
      host.start();
      return serve_source(host, serve_args, out, [] { return false; });
#else
      (void)serve_paused;
      no_server();
#endif
    } else if (*cal) {
      auto sc = session::load_scenario_file(cal_scenario);
      std::vector<session::CalibrationTarget> targets;
      for (const auto& t : cal_targets) targets.push_back(parse_target(t));
      if (targets.empty()) targets = default_targets(sc);
      if (targets.empty()) {
        throw ConfigError("objects", "no targets: pass --target or label objects high/medium/low");
      }
      const auto report = session::calibrate_environment(sc, targets, cal_tol, cal_runs);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto idx = static_cast<std::size_t>(targets[i].object_index);
        out << "object " << idx + 1 << ": stiffness " << fmt("%.6g", report.stiffness[idx]) << " N/m  rms "
            << fmt("%.3f", report.achieved[i]) << " N·m (target " << fmt("%.3f", targets[i].rms_torque)
            << ")\n";
      }
      out << report.runs << " simulation runs\n";
      write_back_stiffness(cal_scenario, cal_out.empty() ? cal_scenario : cal_out, report.stiffness);
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mrtele::cli
