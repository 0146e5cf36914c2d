#pragma once

#include <stdexcept>
#include <string>

#include "mlb/sim.hpp"

namespace mlb {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Key/value scenario text with [bands], [balancer] and [churn] sections.
// Keys mirror the ScenarioConfig field names; unknown keys are errors.
ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);

}  // namespace mlb
