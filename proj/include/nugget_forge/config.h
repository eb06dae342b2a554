#pragma once
// Run configuration: one JSON file per experiment. Relative paths resolve
// against the file's directory.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nugget_forge/agent.h"
#include "nugget_forge/provider.h"
#include "nugget_forge/retrieval.h"

namespace nf {

struct RunConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path feedback_path;
  std::filesystem::path query_log_path;         // optional
  std::filesystem::path annotations_path;       // optional
  std::filesystem::path negative_queries_path;  // optional
  std::filesystem::path output_dir;
  ProviderConfig provider;
  StackConfig stack;
  AgentConfig agent;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::uint64_t heldout_seed = 11;
  std::size_t synthetic_per_case = 3;
  PassPolicy pass_policy = PassPolicy::any;
  std::size_t negative_nuggets = 20;

  /// Throws InputError on unknown keys, missing required keys, empty seeds or
  /// referenced paths that do not exist.
  static RunConfig from_json(const json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& file);
  json to_json() const;
};

/// Identifies everything that shapes stored nuggets: retrieval stack, agent,
/// provider, seeds and pass policy.
std::string config_fingerprint(const RunConfig& cfg);

void apply_overrides(AgentConfig& v, const json& j);

}  // namespace nf
