#pragma once

// Flat "key = value" run configuration files. Blank lines and lines
// starting with '#' are ignored; unknown or repeated keys are errors.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dblp/train.hpp"

namespace dblp {

/// Every recognized key, in the order to_config_text writes them.
const std::vector<std::string>& config_keys();

/// Applies one setting. Throws ConfigError naming the key on an unknown
/// key or an unparsable value.
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);

/// Parses settings over the defaults and validates the result.
TrainConfig parse_config_text(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);

std::string to_config_text(const TrainConfig& config);

}  // namespace dblp
