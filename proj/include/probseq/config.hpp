#pragma once

#include <filesystem>
#include <string>

#include "probseq/harness.hpp"

namespace probseq {

/// Config file: one JSON object. SimConfig keys at top level, an optional
/// "hedging" object for HedgingConfig. Unknown keys are rejected.
struct FileConfig {
  SimConfig sim;
  HedgingConfig hedging;
};

/// `base_dir` resolves relative `trace_path` entries of latency models.
FileConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
FileConfig load_config(const std::filesystem::path& path);

/// Canonical JSON echo (sorted keys, two-space indent); traces are inlined.
std::string config_to_json(const FileConfig& cfg);

}  // namespace probseq
