#pragma once
// The production agent used as a fixed test harness: query expansion,
// iterative retrieval, extractive answer generation with citations.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nugget_forge/provider.h"
#include "nugget_forge/retrieval.h"

namespace nf {

struct AgentConfig {
  std::size_t expansions = 2;
  std::size_t max_rounds = 2;
  /// Round 2 runs when round 1 gated fewer documents than this.
  std::size_t min_docs = 3;
  std::uint64_t seed = 0;
  bool operator==(const AgentConfig&) const = default;
};
void to_json(json& j, const AgentConfig& v);

struct RetrievalRound {
  std::vector<std::string> queries;
  std::vector<ScoredDoc> gated;
};
void to_json(json& j, const RetrievalRound& v);
void from_json(const json& j, RetrievalRound& v);

struct RagTrace {
  std::string input_query;
  std::vector<std::string> expanded_queries;
  std::vector<RetrievalRound> rounds;
  std::vector<ScoredDoc> final_gated;
  std::string answer;
  std::vector<std::string> citations;
  std::string nugget_id;
  bool nugget_retrieved = false;
  bool nugget_cited = false;
  /// Citations of non-gated documents that were dropped.
  std::size_t citation_violations = 0;
  std::string config_fingerprint;
};
void to_json(json& j, const RagTrace& v);
void from_json(const json& j, RagTrace& v);

/// Keeps cited ids that are gated, in order, without duplicates. Every
/// dropped non-gated id increments violations.
std::vector<std::string> extract_citations(const GeneratedAnswer& answer, const std::vector<ScoredDoc>& gated,
                                           std::size_t& violations);

/// Merges gated lists keeping the highest calibrated score per document;
/// result sorted by calibrated score, then doc_id.
std::vector<ScoredDoc> merge_gated(const std::vector<std::vector<ScoredDoc>>& lists);

class Agent {
 public:
  Agent(RetrievalStack stack, Provider& provider, AgentConfig cfg = {});

  /// q first, then up to cfg.expansions distinct paraphrases. Falls back to
  /// {q} when the provider fails.
  std::vector<std::string> expand_query(const std::string& q) const;

  /// Read-only on the view. Nugget flags are computed against nugget_id.
  RagTrace run(const IndexView& view, const std::string& q,
               const std::optional<std::string>& nugget_id = std::nullopt) const;

  /// Hex digest of everything that shapes a trace apart from the index
  /// contents: stack, components, agent settings and provider.
  std::string fingerprint(const IndexView& view) const;

  const RetrievalStack& stack() const { return stack_; }
  const AgentConfig& config() const { return cfg_; }
  Provider& provider() const { return provider_; }

 private:
  RetrievalStack stack_;
  Provider& provider_;
  AgentConfig cfg_;
};

}  // namespace nf
