#pragma once
// Measurement: held-out query mining, synthetic paraphrases, variant replay
// with scoped insertion, negative control, answer judging and reports.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nugget_forge/agent.h"
#include "nugget_forge/pipeline.h"
#include "nugget_forge/store.h"

namespace nf {

enum class QuerySource { in_sample, historical, synthetic };
void to_json(json& j, QuerySource v);
void from_json(const json& j, QuerySource& v);
std::string to_string(QuerySource v);
/// Row label of the pooled historical + synthetic rows.
inline constexpr std::string_view kHeldOut = "held_out";

struct MiningConfig {
  std::size_t top_n = 50;
  double min_cosine = 0.75;
  double min_rerank = 0.85;
};

struct MinedQuery {
  std::string text;
  double cosine = 0.0;
  double rerank_score = 0.0;
};

/// Exact cosine neighbours of q0 in the log (top_n with cosine > min_cosine),
/// re-scored against q0 with the stack's re-ranker over a temporary index of
/// the survivors; keeps rerank_score > min_rerank and drops q0 itself.
std::vector<MinedQuery> mine_historical(const std::vector<QueryRecord>& log, const std::string& q0,
                                        const RetrievalStack& stack, const MiningConfig& cfg = {});

/// Paraphrases grounded in vocabulary harvested from the top-5 documents
/// retrieved for q0. Seeds live in their own namespace.
std::vector<std::string> gen_synthetic_paraphrases(Provider& provider, const RetrievalStack& stack,
                                                   const IndexView& view, const std::string& q0, std::size_t count,
                                                   std::uint64_t seed);

struct EvalQuery {
  std::string text;
  QuerySource source = QuerySource::in_sample;
};
void to_json(json& j, const EvalQuery& v);
void from_json(const json& j, EvalQuery& v);

/// One feedback-derived nugget and the queries it is measured on.
struct EvalCase {
  FeedbackEvent event;
  Nugget nugget;
  std::vector<EvalQuery> queries;
  /// Statement the feedback corrected; empty falls back to the judge default.
  std::string wrong_claim;
};
void to_json(json& j, const EvalCase& v);
void from_json(const json& j, EvalCase& v);

struct LabelCounts {
  std::map<std::string, std::size_t> compliance, faithfulness, regression, groundedness;
  std::size_t unjudged = 0;
  void add(const JudgeLabels& l);
  void merge(const LabelCounts& o);
  bool operator==(const LabelCounts&) const = default;
};
void to_json(json& j, const LabelCounts& v);
void from_json(const json& j, LabelCounts& v);

struct RunRow {
  Variant variant = Variant::A;
  std::string source;
  std::uint64_t seed = 0;
  std::size_t queries = 0;
  std::size_t retrieved = 0;
  std::size_t cited = 0;
  double retrieval_rate() const;
  double citation_rate() const;
};
void to_json(json& j, const RunRow& v);

struct EvalSlice {
  Variant variant = Variant::A;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::vector<RunRow> rows;
  std::map<std::string, LabelCounts> judge;  // by source
  std::vector<IndexableNugget> candidates;
  std::vector<InoRunLog> ino_logs;
  std::uint64_t index_hash = 0;
};

struct EvalOptions {
  InoConfig ino;
  bool judge = true;
};

/// One slice per seed. Candidates are built (or optimized) with the run seed,
/// inserted together for the run and gone afterwards; throws IntegrityError
/// if the base index hash changes.
std::vector<EvalSlice> eval_variant(const CorpusIndex& base, const Agent& agent, const std::vector<EvalCase>& cases,
                                    Variant variant, const std::vector<std::uint64_t>& seeds,
                                    const EvalOptions& opts = {});

struct NegativeControlResult {
  std::size_t queries = 0;
  std::size_t retrieved = 0;
  std::size_t cited = 0;
  std::vector<RagTrace> flagged;
  double retrieval_rate() const;
};
void to_json(json& j, const NegativeControlResult& v);
void from_json(const json& j, NegativeControlResult& v);

/// Replays unrelated queries; a hit is a trace whose gated set contains any of
/// nugget_doc_ids.
NegativeControlResult negative_control(const IndexView& view, const Agent& agent, const std::vector<std::string>& queries,
                                       const std::vector<std::string>& nugget_doc_ids);

/// Routed through the provider; nullopt when the output fails its schema.
std::optional<JudgeLabels> judge_answer(Provider& provider, const JudgeInput& in, std::uint64_t seed);

struct MetricSummary {
  std::vector<double> runs;
  double mean = 0.0;
  std::optional<double> std;  // sample std, absent below two runs
};
void to_json(json& j, const MetricSummary& v);
void from_json(const json& j, MetricSummary& v);
MetricSummary summarize(const std::vector<double>& runs);

struct ReportRow {
  Variant variant = Variant::A;
  std::string source;
  std::size_t queries = 0;
  MetricSummary retrieval;
  MetricSummary citation;
  LabelCounts judge;
};
void to_json(json& j, const ReportRow& v);
void from_json(const json& j, ReportRow& v);

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<std::uint64_t> seeds;
  std::string fingerprint;
  std::uint64_t index_hash = 0;
  std::optional<NegativeControlResult> negative_control;
  /// Iterations used by variant E candidates: histogram 1..3 plus
  /// non-converged count.
  std::map<std::string, std::size_t> ino_iterations;
  const ReportRow* find(Variant v, std::string_view source) const;
};
void to_json(json& j, const EvalReport& v);
void from_json(const json& j, EvalReport& v);

/// Rows ordered by variant, then in_sample, historical, synthetic, held_out.
/// Throws InputError for no slices and IntegrityError for mixed fingerprints.
EvalReport aggregate_report(const std::vector<EvalSlice>& slices);

std::string render_text(const EvalReport& r);
/// One line per (variant, source, metric).
std::string render_csv(const EvalReport& r);

}  // namespace nf
