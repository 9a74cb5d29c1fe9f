#pragma once

#include <cstdint>

#include <json.hpp>

#include "svo/homography.hpp"
#include "svo/pipeline.hpp"

namespace svo {

// Patch counts for the homography training set (salient + random).
struct PatchSetConfig {
  int salient = 96;
  int random = 32;
};

// Everything a CLI run reads from its JSON config. The top-level seed feeds
// every random draw.
struct RunConfig {
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
  SequenceConfig homography;
  PatchSetConfig patch_set;
};

// Strict reader: unknown keys, wrong types and out-of-range values throw
// Error(kInvalidArgument) naming the key path. Missing keys keep defaults.
RunConfig parse_run_config(const nlohmann::json& j);

// Fully resolved config, every field explicit.
nlohmann::json to_json(const RunConfig& config);

std::string provider_name(ProviderKind kind);

}  // namespace svo
