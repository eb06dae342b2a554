#pragma once
// End-to-end experiment: feedback to evaluation cases, then every variant
// over every seed, plus the negative control on optimized nuggets.

#include <cstdint>
#include <string>
#include <vector>

#include "nugget_forge/benchmark.h"
#include "nugget_forge/eval.h"

namespace nf {

struct CaseConfig {
  /// Held-out queries are fixed across runs, so they get their own seed.
  std::uint64_t heldout_seed = 11;
  std::size_t synthetic_per_case = 3;
  MiningConfig mining;
};

struct PreparedCases {
  std::vector<ActionabilityRecord> records;
  std::vector<EvalCase> cases;
};

/// Classifies every event, turns kb candidates into nuggets and attaches the
/// in-sample trigger, mined historical queries and synthetic paraphrases.
/// wrong claims are looked up by event id in annotations.
PreparedCases prepare_cases(Provider& provider, const RetrievalStack& stack, const CorpusIndex& base,
                            const std::vector<FeedbackEvent>& feedback, const std::vector<Annotation>& annotations,
                            const std::vector<QueryRecord>& query_log, const CaseConfig& cfg = {});

/// Same queries as prepare_cases for nuggets already extracted; each nugget is
/// matched to its source event.
std::vector<EvalCase> build_cases(Provider& provider, const RetrievalStack& stack, const CorpusIndex& base,
                                  const std::vector<Nugget>& nuggets, const std::vector<FeedbackEvent>& feedback,
                                  const std::vector<Annotation>& annotations, const std::vector<QueryRecord>& query_log,
                                  const CaseConfig& cfg = {});

struct ExperimentConfig {
  std::vector<Variant> variants{Variant::A, Variant::B, Variant::C, Variant::D, Variant::E};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  EvalOptions eval;
  /// Optimized nuggets inserted for the negative control; 0 skips it.
  std::size_t negative_nuggets = 20;
};

struct ExperimentResult {
  EvalReport report;
  std::vector<EvalSlice> slices;
};

/// The negative control uses the first seed's candidates of the last variant
/// in cfg.variants.
ExperimentResult run_experiment(const CorpusIndex& base, const Agent& agent, const std::vector<EvalCase>& cases,
                                const std::vector<std::string>& negative_queries, const ExperimentConfig& cfg = {});

}  // namespace nf
