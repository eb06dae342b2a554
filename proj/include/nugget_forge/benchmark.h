#pragma once
// Synthetic SaaS-support world: KB corpus, feedback stream with planted
// corrections, a search log with planted paraphrases, and unrelated traffic
// for the negative control. Fully determined by the config.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nugget_forge/store.h"
#include "nugget_forge/types.h"

namespace nf {

struct BenchmarkConfig {
  std::uint64_t seed = 2024;
  std::size_t docs_per_pair = 5;  // per (product, object)
  std::size_t events = 50;
  std::size_t ticket_events = 10;  // out of events
  std::size_t noise_events = 40;
  /// FAQ entries per event asking the same question about a neighbouring
  /// role, object, product or action.
  std::size_t lookalikes_per_event = 3;
  std::size_t close_per_event = 3;
  std::size_t far_per_event = 2;
  std::size_t random_log_queries = 800;
  std::size_t negative_queries = 1000;
  /// Chance that a lexicon word in a KB document is replaced by a synonym.
  double kb_synonym_rate = 0.45;
  /// Share of KB documents titled as a user question.
  double kb_faq_rate = 0.3;
};

struct Annotation {
  std::string event_id;
  std::string wrong_claim;
  std::string competitor_doc_id;
};
void to_json(json& j, const Annotation& v);
void from_json(const json& j, Annotation& v);

struct Benchmark {
  std::vector<Document> documents;
  std::vector<FeedbackEvent> feedback;
  std::vector<Annotation> annotations;
  std::vector<QueryRecord> query_log;
  std::vector<QueryRecord> negative_queries;
  /// Planted log entries per event, for inspecting the mining step.
  std::map<std::string, std::vector<std::string>> planted_close, planted_far;
};

Benchmark generate_benchmark(const BenchmarkConfig& cfg = {});

/// documents.jsonl, feedback.jsonl, annotations.jsonl, query_log.jsonl,
/// negative_queries.jsonl.
void save_benchmark(const Benchmark& b, const std::filesystem::path& dir);
Benchmark load_benchmark(const std::filesystem::path& dir);

}  // namespace nf
