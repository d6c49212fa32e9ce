#pragma once

#include "ammfut/experiments.hpp"

#include <cstdint>
#include <string>

namespace ammfut {

struct RunConfig {
    ModelSetup model;
    StudySpec study;
    std::string output_dir = "out";
};

/// Parses YAML text. Unknown keys, type mismatches and out-of-range values
/// raise ConfigError with the offending field and its 1-based position.
/// An empty document yields the defaults.
RunConfig parse_config(const std::string& text);

/// Reads and parses a file; throws IoError when it cannot be read.
RunConfig load_config(const std::string& path);

/// Canonical YAML with every field written out and doubles at round-trip
/// precision. The output directory is omitted when `include_output` is false.
std::string to_yaml(const RunConfig& config, bool include_output = true);

/// FNV-1a 64 of the canonical YAML without the output directory, so runs
/// that differ only in where they write share a hash.
std::uint64_t config_hash(const RunConfig& config);
std::string hash_hex(std::uint64_t hash);

}  // namespace ammfut
