#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "caso/model.hpp"

namespace caso {

/// Flat `key = value` text. '#' starts a comment line.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_values(const std::filesystem::path& path);

/// Sets one TrainingConfig field by key; throws std::invalid_argument on an
/// unknown key or unparsable value.
void apply_setting(TrainingConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(TrainingConfig& cfg, const std::map<std::string, std::string>& settings);

/// Every field as `key = value` lines, in a fixed order. Round-trips through
/// parse_key_values / apply_settings exactly.
std::string format_config(const TrainingConfig& cfg);

}  // namespace caso
