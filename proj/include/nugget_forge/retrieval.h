#pragma once
// Hybrid retrieval: BM25 and dense channels, reciprocal-rank fusion to the
// top k_fuse candidates, re-ranking, calibration into (0,1) and gating.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nugget_forge/index.h"

namespace nf {

struct StackConfig {
  std::size_t k_fuse = 60;
  double rrf_constant = 60.0;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  double rerank_weight_sparse = 0.5;
  double calib_a = 4.0;
  double calib_b = -2.0;
  double gate_threshold = 0.5;
  std::size_t embed_dim = 256;
  /// Depth of each channel before fusion; must be >= k_fuse.
  std::size_t channel_depth = 200;

  /// Throws InputError on out-of-range values.
  void validate() const;
  bool operator==(const StackConfig&) const = default;
};

void to_json(json& j, const StackConfig& v);
/// Applies the keys present in j on top of v. Unknown keys are rejected.
void apply_overrides(StackConfig& v, const json& j);

struct ScoredDoc {
  std::string doc_id;
  double sparse_score = 0.0;
  double dense_score = 0.0;
  std::size_t fused_rank = 0;
  double fused_score = 0.0;
  double rerank_score = 0.0;
  double calibrated = 0.0;
  bool operator==(const ScoredDoc&) const = default;
};
void to_json(json& j, const ScoredDoc& v);
void from_json(const json& j, ScoredDoc& v);

/// Scores candidates in place; may reorder but never adds or removes.
class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual void score(std::string_view query, std::vector<ScoredDoc>& candidates, const IndexView& view) const = 0;
  virtual std::string name() const = 0;
};

/// w * minmax(sparse) + (1 - w) * max(0, cosine). A single candidate, or a
/// list whose sparse scores are all equal and positive, normalizes to 1; an
/// all-zero list normalizes to 0.
class LexicalDenseReranker final : public Reranker {
 public:
  explicit LexicalDenseReranker(double sparse_weight = 0.5) : w_(sparse_weight) {}
  void score(std::string_view query, std::vector<ScoredDoc>& candidates, const IndexView& view) const override;
  std::string name() const override { return "lexical-dense"; }

 private:
  double w_;
};

/// Any strictly monotone map into (0,1).
class Calibrator {
 public:
  virtual ~Calibrator() = default;
  virtual double calibrate(double score) const = 0;
  virtual std::string name() const = 0;
};

class LogisticCalibrator final : public Calibrator {
 public:
  LogisticCalibrator(double a, double b) : a_(a), b_(b) {}
  double calibrate(double score) const override;
  std::string name() const override { return "logistic"; }

 private:
  double a_, b_;
};

/// Top-k by BM25 over unique query tokens; ties by ascending doc_id.
std::vector<ScoredDoc> bm25_search(const IndexView& view, const std::vector<std::string>& query_tokens, std::size_t k,
                                   const StackConfig& cfg = {});

/// Top-k by cosine, restricted to documents with cosine > 0.
std::vector<ScoredDoc> dense_search(const IndexView& view, std::string_view query, std::size_t k);

double calibrate(double rerank_score, const StackConfig& cfg = {});

/// The five-stage pipeline with pluggable re-ranker and calibrator. Every
/// search is read-only on the view.
class RetrievalStack {
 public:
  explicit RetrievalStack(StackConfig cfg = {}, std::shared_ptr<const Reranker> reranker = nullptr,
                          std::shared_ptr<const Calibrator> calibrator = nullptr);

  const StackConfig& config() const { return cfg_; }

  /// Fused candidates (at most k_fuse) with sparse and dense scores filled.
  std::vector<ScoredDoc> hybrid_search(const IndexView& view, std::string_view query) const;
  std::vector<ScoredDoc> rerank(const IndexView& view, std::string_view query, std::vector<ScoredDoc> candidates) const;
  double calibrate(double rerank_score) const { return calibrator_->calibrate(rerank_score); }
  /// Documents passed to the generator: calibrated >= threshold, best first.
  std::vector<ScoredDoc> retrieve(const IndexView& view, std::string_view query) const;
  /// Like retrieve but without the gate (full re-ranked, calibrated list).
  std::vector<ScoredDoc> rank(const IndexView& view, std::string_view query) const;

  /// Stable description of every component that affects results.
  json describe(const IndexView& view) const;

 private:
  StackConfig cfg_;
  std::shared_ptr<const Reranker> reranker_;
  std::shared_ptr<const Calibrator> calibrator_;
};

}  // namespace nf
