#pragma once

#include <filesystem>
#include <string>

#include "cloudsentry/pipeline.hpp"

namespace cloudsentry {

/// Parses an INI experiment file over the defaults. Unknown sections or keys
/// raise InvalidArgument naming the key. `[epidemic] preset` is applied
/// before the explicit rate keys, so those override the preset.
ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its effective value; parse_config of the result gives back
/// the same configuration.
std::string format_config(const ExperimentConfig& cfg);

}  // namespace cloudsentry
