#pragma once

// JSON experiment configuration. Every key is optional and defaults to the
// benchmark value; unknown keys are rejected with their full path so a
// mistyped gain name never silently falls back to a default.

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "irltrack/sim.hpp"

namespace irltrack {

inline constexpr int kSchemaVersion = 1;

struct OutputConfig {
  std::string dir = "out";
  bool csv = true;
  bool plots = false;

  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SimConfig sim = SimConfig::defaults();
  OutputConfig output;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Parses and validates. Throws ConfigError whose message starts with the
/// offending field path, e.g. "critic.K2: M1 not positive definite ...".
ExperimentConfig parse_config(const nlohmann::json& j);
/// Reads `path`; a missing or unreadable file is a ConfigError as well.
ExperimentConfig parse_config_file(const std::string& path);

/// Fully explicit form (every matrix written out). parse(serialize(c)) == c.
nlohmann::json serialize(const ExperimentConfig& cfg);

struct Variant {
  std::string name;
  nlohmann::json overrides;  // RFC 7386 merge patch applied to the serialized base
};

/// {"variants": [{"name": ..., "overrides": {...}}, ...]}. Names must be unique.
std::vector<Variant> parse_variants(const nlohmann::json& j);
std::vector<Variant> parse_variants_file(const std::string& path);

/// Base config with the variant's overrides merged in, validated.
ExperimentConfig apply_variant(const ExperimentConfig& base, const Variant& v);

}  // namespace irltrack
