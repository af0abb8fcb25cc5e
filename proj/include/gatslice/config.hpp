#pragma once

// Run configuration: an INI document whose sections mirror the modules.
// Every key has a built-in default; files and command-line overrides may
// only set known keys.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gatslice/trainer.hpp"

namespace gatslice {

struct RunConfig {
    ExperimentConfig experiment;
    std::string output = "out";
};

/// Flat "section.key" -> value view of a config.
using KeyValues = std::map<std::string, std::string>;

/// Reference scenario: 19 BSs and the tabulated traffic verbatim.
RunConfig default_run_config();

KeyValues to_key_values(const RunConfig& cfg);
/// Defaults overlaid with `values`; throws ConfigError on unknown keys or
/// invalid values.
RunConfig from_key_values(const KeyValues& values);

/// Parses INI text. Keys appear as "section.key"; duplicates are rejected.
KeyValues parse_ini(const std::string& text);
KeyValues read_ini_file(const std::filesystem::path& path);
/// "section.key=value" strings.
KeyValues parse_overrides(std::span<const std::string> overrides);

/// Config file (may be empty for defaults) plus overrides, in that order.
RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides);

/// Override sets of a sweep. Each non-blank, non-comment line of
/// `sweep_text` is one combination of whitespace-separated overrides; each
/// "key=v1|v2|..." in `vary` multiplies the combinations by its values
/// (values may contain commas, as lists do).
/// With neither, the result is one empty combination.
std::vector<std::vector<std::string>> expand_sweep(const std::string& sweep_text, std::span<const std::string> vary);

/// Canonical INI text; parsing it back yields the same configuration.
std::string render_run_config(const RunConfig& cfg);

} // namespace gatslice
