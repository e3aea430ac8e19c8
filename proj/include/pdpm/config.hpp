#pragma once
#include <map>
#include <string>
#include <vector>

#include "pdpm/experiments.hpp"

namespace pdpm {

// Flat "section.key" → value map from an INI file or command-line flags.
using Settings = std::map<std::string, std::string>;

// Accepted keys, all of the form section.key.
const std::vector<std::string>& known_settings();

// Reads an INI document with [population], [protocol] and [experiment]
// sections. Unknown sections or keys and malformed files throw ConfigError.
Settings load_config_file(const std::string& path);
Settings parse_config(const std::string& text);

// Later maps win.
Settings merge_settings(const Settings& base, const Settings& overrides);

// protocol.name is applied first, resetting the protocol to that preset.
// Without population.seed the population shares experiment.seed.
// Type errors throw ConfigError.
void apply_settings(ExperimentConfig& config, const Settings& settings);

}  // namespace pdpm
