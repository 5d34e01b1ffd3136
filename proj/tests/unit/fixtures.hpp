#pragma once

#include "mrtele/scenario.hpp"

#include <string>

namespace mrtele::testing {

inline const std::string kScenarioDir = MRTELE_SCENARIO_DIR;

inline session::Scenario bundled(const std::string& name) {
  return session::load_scenario_file(kScenarioDir + "/" + name + ".json");
}

/// Interactive run whose slave starts buried in a stiff box, so every clutch
/// saturates within a few ticks.
inline session::Scenario locked_interactive(double duration = 1.0) {
  return session::parse_scenario(R"({
    "master": {"chain": {"preset": "exoskeleton"}, "initial_q_rad": [0.0, -0.3, 0.0, 1.0, 0.0]},
    "slave": {"chain": {"preset": "slave7"}},
    "map": {"slave_origin_m": [0.5, 0.0, 0.3]},
    "objects": [{"center_m": [0.5, 0.0, 0.3], "half_extents_m": [0.02, 0.02, 0.02],
                 "stiffness_n_per_m": 10000.0}],
    "script": {"interactive": true, "semg_noise_uv": 0.0},
    "run": {"name": "locked", "duration_s": )" + std::to_string(duration) + R"(, "seed": 1}
  })");
}

/// Free-space interactive run.
inline session::Scenario free_interactive(double duration = 1.0) {
  return session::parse_scenario(R"({
    "master": {"chain": {"preset": "exoskeleton"}, "initial_q_rad": [0.0, -0.3, 0.0, 1.0, 0.0]},
    "slave": {"chain": {"preset": "slave7"}},
    "map": {"slave_origin_m": [0.5, 0.0, 0.3]},
    "script": {"interactive": true},
    "run": {"name": "free", "duration_s": )" + std::to_string(duration) + R"(, "seed": 2}
  })");
}

}  // namespace mrtele::testing
