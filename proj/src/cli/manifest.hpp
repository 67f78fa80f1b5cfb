#ifndef MFHAWKES_CLI_MANIFEST_HPP
#define MFHAWKES_CLI_MANIFEST_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

namespace mfhawkes::cli {

using Json = nlohmann::json;

inline constexpr int kManifestVersion = 1;

/// Converts a YAML tree to JSON; plain scalars become integers, doubles,
/// booleans or null when they parse as such, quoted scalars stay strings.
Json yaml_to_json(const YAML::Node& node);

/// A double as JSON: finite values as numbers, others as "inf"/"-inf"/"nan".
Json json_number(double v);

struct OutputFile {
    std::string name;
    std::string content;
};

/// Manifest document for a finished run. `base_dir` is where relative input
/// paths in `config` resolve; a replay reuses it.
Json make_manifest(const std::string& command, const Json& config, const std::string& base_dir,
                   const std::map<std::string, std::string>& inputs, const std::vector<OutputFile>& outputs);

}  // namespace mfhawkes::cli

#endif  // MFHAWKES_CLI_MANIFEST_HPP
