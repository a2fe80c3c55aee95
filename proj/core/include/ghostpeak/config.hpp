// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ghostpeak/campaign.hpp"

namespace ghostpeak {

struct KnobInfo {
  std::string name;
  std::string default_value;
  std::string doc;
};

/// Every configurable key with its default and a one-line description.
std::vector<KnobInfo> list_knobs();

/// key = value text, optionally with [section] headers that prefix keys.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config(const std::filesystem::path& path);
std::string serialize_config(const ScenarioConfig& cfg);

/// Applies one override; throws ConfigError on unknown key or bad value.
void set_knob(ScenarioConfig& cfg, const std::string& key, const std::string& value);
std::string get_knob(const ScenarioConfig& cfg, const std::string& key);

}  // namespace ghostpeak
