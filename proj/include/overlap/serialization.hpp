#pragma once

#include <string>

#include "json.hpp"
#include "overlap/discrete.hpp"
#include "overlap/estimation.hpp"
#include "overlap/processes.hpp"

// JSON encodings for the exchangeable objects: discrete pairs, tagged-union
// process specs, and audit reports. Parse errors carry JSON-pointer-style
// paths.

namespace overlap::io {

using nlohmann::json;

json to_json(const discrete::DiscretePair& pair);
discrete::DiscretePair pair_from_json(const json& j);

json to_json(const process::ProcessSpec& spec);
process::ProcessSpec spec_from_json(const json& j);

json to_json(const estimate::OverlapAudit& audit);

// Thrown with the offending pointer path in what().
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error(path + ": " + msg) {}
};

}  // namespace overlap::io
