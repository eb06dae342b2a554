#pragma once
// Feedback to nugget: actionability filtering, the A-D variant builders,
// probe sets and the iterative optimization loop (variant E).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nugget_forge/agent.h"
#include "nugget_forge/index.h"
#include "nugget_forge/provider.h"

namespace nf {

struct ActionabilityRecord {
  std::string event_id;
  /// False when the provider failed; the event is kept for a retry.
  bool processed = false;
  ActionabilityResult result;
  std::string error;
};
void to_json(json& j, const ActionabilityRecord& v);
void from_json(const json& j, ActionabilityRecord& v);

ActionabilityRecord filter_actionable(Provider& provider, const FeedbackEvent& event, std::uint64_t seed);

/// "n-" + event_id, with the article's title and body.
Nugget make_nugget(const FeedbackEvent& event, const Article& article);

/// Variants A-D. E comes from ino_optimize and is rejected here.
IndexableNugget build_variant(Provider& provider, const Nugget& n, const std::string& q0, Variant variant,
                              std::uint64_t seed);

struct ProbeConfig {
  std::size_t paraphrases = 4;
  double max_anchor_jaccard = 0.8;
  int attempts = 10;
  std::size_t min_queries = 4;
};

/// q0 plus fresh paraphrases that stay token-Jaccard < max_anchor_jaccard
/// from every anchor of the candidate. Throws ProbeConstructionError below
/// min_queries.
ProbeSet build_probe_set(Provider& provider, const std::string& q0, const IndexableNugget& candidate,
                         std::uint64_t seed, const ProbeConfig& cfg = {}, PassPolicy policy = PassPolicy::any);

struct ProbeOutcome {
  std::string query;
  bool retrieved = false;
  bool cited = false;
  std::vector<ScoredDoc> top_competitors;
  std::string answer;
};
void to_json(json& j, const ProbeOutcome& v);
void from_json(const json& j, ProbeOutcome& v);

struct InoIteration {
  int iteration = 0;
  IndexableNugget candidate;
  ProbeSet probes;
  std::vector<ProbeOutcome> outcomes;
  bool passed = false;
  std::string reflection_summary;
  std::vector<std::string> violations;
};
void to_json(json& j, const InoIteration& v);
void from_json(const json& j, InoIteration& v);

struct InoRunLog {
  std::string nugget_id;
  std::string q0;
  std::vector<InoIteration> iterations;
  int iterations_used = 0;
  bool converged = false;
};
void to_json(json& j, const InoRunLog& v);
void from_json(const json& j, InoRunLog& v);

struct InoConfig {
  PassPolicy pass_policy = PassPolicy::any;
  int max_iterations = kMaxIterations;
  ProbeConfig probes;
  /// Competitor terms passed to the reflector per competitor.
  std::size_t distinguishing_terms = 5;
};

/// Reasons a reflection output may not replace the candidate: lost original
/// body sentences, tokens from outside the supplied context, broken nugget
/// or anchor invariants. Empty means acceptable.
std::vector<std::string> check_reflection(const Nugget& original, const ReflectionInput& in,
                                          const ReflectionOutput& out);

/// Algorithm: start from variant D; per iteration insert the candidate in an
/// isolated session, probe it with the agent, stop when the pass policy holds,
/// otherwise reflect on the failed probes. The base index is never modified.
std::pair<IndexableNugget, InoRunLog> ino_optimize(const CorpusIndex& base, const Agent& agent, const Nugget& n,
                                                   const std::string& q0, const InoConfig& cfg, std::uint64_t seed,
                                                   const std::string& feedback = {});

}  // namespace nf
