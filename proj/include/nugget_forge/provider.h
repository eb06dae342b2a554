#pragma once
// The text-task provider: one request/response interface with a deterministic
// offline backend and an HTTP backend for an OpenAI-compatible endpoint.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nugget_forge/tasks.h"

namespace nf {

struct TextTask {
  TaskKind kind = TaskKind::paraphrase;
  json payload;
  std::uint64_t seed = 0;
};

enum class Backend { sim, http };

struct ProviderConfig {
  Backend backend = Backend::sim;
  std::string endpoint_url;
  std::string model_name;
  int timeout_ms = 30000;
  int max_retries = 2;
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "NUGGET_FORGE_API_KEY";

  /// Throws InputError; the http backend needs an endpoint and a model.
  void validate() const;
  bool operator==(const ProviderConfig&) const = default;
};
void to_json(json& j, const ProviderConfig& v);
void from_json(const json& j, ProviderConfig& v);

struct ProviderCounters {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  std::uint64_t calls = 0;
};

/// Throws InputError if payload does not fit the kind.
void validate_payload(TaskKind kind, const json& payload);
/// Throws SchemaError (carrying raw) if output does not fit the kind.
void validate_output(TaskKind kind, const json& output, const std::string& raw);

/// Approximate token count used by the counters: whitespace-separated words.
std::uint64_t approx_tokens(std::string_view text);

class Provider {
 public:
  virtual ~Provider() = default;

  /// Validates the payload, runs the backend and validates the output.
  /// Counters are updated once per call, also when the backend fails.
  json execute(const TextTask& task);

  ProviderCounters counters() const;
  virtual std::string name() const = 0;

 protected:
  /// Returns the backend's raw output text for the task.
  virtual std::string run(const TextTask& task) = 0;

 private:
  std::atomic<std::uint64_t> input_tokens_{0};
  std::atomic<std::uint64_t> output_tokens_{0};
  std::atomic<std::uint64_t> calls_{0};
};

class SimProvider final : public Provider {
 public:
  std::string name() const override { return "sim"; }

 protected:
  std::string run(const TextTask& task) override;
};

class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(ProviderConfig cfg);
  std::string name() const override { return "http:" + cfg_.model_name; }

  /// The chat-completions request body sent for a task.
  json request_body(const TextTask& task) const;

 protected:
  std::string run(const TextTask& task) override;

 private:
  ProviderConfig cfg_;
  std::string scheme_host_;
  std::string path_;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg);

// Typed helpers. Each builds the task, executes it and decodes the output.
ActionabilityResult classify_feedback(Provider& p, const FeedbackEvent& event, std::uint64_t seed);
std::optional<Article> extract_nugget(Provider& p, const FeedbackEvent& event, std::uint64_t seed);
std::vector<std::string> generate_anchors(Provider& p, const Article& nugget, const std::optional<std::string>& q0,
                                          std::size_t count, bool lead_with_paraphrase, std::uint64_t seed);
std::vector<std::string> paraphrase(Provider& p, const std::string& query, std::size_t n, std::uint64_t seed,
                                    const std::vector<std::string>& vocabulary = {});
ReflectionOutput reflect(Provider& p, const ReflectionInput& in, std::uint64_t seed);
GeneratedAnswer generate_answer(Provider& p, const std::string& query, const std::vector<ContextDoc>& docs,
                                std::uint64_t seed);
JudgeLabels judge(Provider& p, const JudgeInput& in, std::uint64_t seed);

}  // namespace nf
