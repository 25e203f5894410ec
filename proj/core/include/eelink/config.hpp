#pragma once

#include <string>

#include "eelink/study.hpp"

namespace eelink {

// Study configuration file: a flat JSON object whose keys are exactly
// the StudyConfig field names (see README for the schema). Unknown keys
// are rejected. Defaults: B=500, replicates=200,
// quantiles=[0.025,0.975], intercept=true, workers=auto.
StudyConfig parse_config(const std::string& path);
StudyConfig parse_config_text(const std::string& text);

// Effective-config echo embedded in every study.json / summary output.
std::string config_to_json(const StudyConfig& cfg);

}  // namespace eelink
