#pragma once

#include "arxcv/harness.hpp"

#include <optional>
#include <string>

namespace arxcv {

// One TOML file describes a run: the experiment, the engine and an optional sweep.
//
//   engine = "analytic"
//   [experiment]
//   id = 1                      # 1..5 fills the rest from the table, keys below override
//   variant = "hard"
//   [[experiment.scheme]]
//   kind = "hv-block"
//   h = 3
//   v = 3
//   mode = "joint"
//   [sweep]
//   axis = "v"
//   values = [0, 1, 3, 6, 12]
//   alpha = 0.9
struct RunConfig {
    ExperimentSpec experiment;
    Engine engine = Engine::Analytic;
    std::optional<SweepSpec> sweep;
};

RunConfig parse_config(const std::string& text);  // ConfigError on any problem
RunConfig load_config(const std::string& path);
std::string to_toml(const RunConfig& cfg);

} // namespace arxcv
