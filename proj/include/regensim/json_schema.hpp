#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace regensim::jsonschema {

// Minimal JSON-schema checker covering the subset our summaries use:
// type (including ["number","null"]), required, properties, items, enum,
// minimum/maximum. Returns human-readable violations; empty means valid.
std::vector<std::string> validate(const nlohmann::json& schema, const nlohmann::json& doc);

// Embedded schema for a subcommand's JSON summary; identical copies ship
// under schemas/ for external tooling.
const nlohmann::json& summary_schema(const std::string& subcommand);

}  // namespace regensim::jsonschema
