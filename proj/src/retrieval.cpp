#include "nugget_forge/retrieval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "nugget_forge/errors.h"
#include "nugget_forge/text.h"

namespace nf {

void StackConfig::validate() const {
  if (k_fuse < 1) throw InputError("k_fuse must be >= 1");
  if (channel_depth < k_fuse) throw InputError("channel_depth must be >= k_fuse");
  if (gate_threshold < 0.0 || gate_threshold > 1.0) throw InputError("gate_threshold must lie in [0,1]");
  if (rerank_weight_sparse < 0.0 || rerank_weight_sparse > 1.0)
    throw InputError("rerank_weight_sparse must lie in [0,1]");
  if (bm25_b < 0.0 || bm25_b > 1.0) throw InputError("bm25_b must lie in [0,1]");
  if (bm25_k1 < 0.0) throw InputError("bm25_k1 must be >= 0");
  if (calib_a <= 0.0) throw InputError("calib_a must be > 0 for a strictly increasing calibration");
  if (rrf_constant <= 0.0) throw InputError("rrf_constant must be > 0");
  if (embed_dim == 0) throw InputError("embed_dim must be > 0");
}

void to_json(json& j, const StackConfig& v) {
  j = json{{"k_fuse", v.k_fuse},
           {"rrf_constant", v.rrf_constant},
           {"bm25_k1", v.bm25_k1},
           {"bm25_b", v.bm25_b},
           {"rerank_weight_sparse", v.rerank_weight_sparse},
           {"calib_a", v.calib_a},
           {"calib_b", v.calib_b},
           {"gate_threshold", v.gate_threshold},
           {"embed_dim", v.embed_dim},
           {"channel_depth", v.channel_depth}};
}

void apply_overrides(StackConfig& v, const json& j) {
  if (!j.is_object()) throw InputError("stack overrides must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "k_fuse") v.k_fuse = value.get<std::size_t>();
    else if (key == "rrf_constant") v.rrf_constant = value.get<double>();
    else if (key == "bm25_k1") v.bm25_k1 = value.get<double>();
    else if (key == "bm25_b") v.bm25_b = value.get<double>();
    else if (key == "rerank_weight_sparse") v.rerank_weight_sparse = value.get<double>();
    else if (key == "calib_a") v.calib_a = value.get<double>();
    else if (key == "calib_b") v.calib_b = value.get<double>();
    else if (key == "gate_threshold") v.gate_threshold = value.get<double>();
    else if (key == "embed_dim") v.embed_dim = value.get<std::size_t>();
    else if (key == "channel_depth") v.channel_depth = value.get<std::size_t>();
    else throw InputError("unknown stack key: " + key);
  }
  v.validate();
}

void to_json(json& j, const ScoredDoc& v) {
  j = json{{"doc_id", v.doc_id},
           {"sparse_score", v.sparse_score},
           {"dense_score", v.dense_score},
           {"fused_rank", v.fused_rank},
           {"fused_score", v.fused_score},
           {"rerank_score", v.rerank_score},
           {"calibrated", v.calibrated}};
}

void from_json(const json& j, ScoredDoc& v) {
  j.at("doc_id").get_to(v.doc_id);
  j.at("sparse_score").get_to(v.sparse_score);
  j.at("dense_score").get_to(v.dense_score);
  j.at("fused_rank").get_to(v.fused_rank);
  j.at("fused_score").get_to(v.fused_score);
  j.at("rerank_score").get_to(v.rerank_score);
  j.at("calibrated").get_to(v.calibrated);
}

namespace {

// Per-segment, per-slot accumulators.
using SegmentScores = std::vector<std::vector<double>>;

std::vector<std::string> unique_sorted(const std::vector<std::string>& tokens) {
  std::set<std::string> s(tokens.begin(), tokens.end());
  return {s.begin(), s.end()};
}

SegmentScores accumulate_bm25(const IndexView& view, const std::vector<std::string>& query_tokens,
                              const StackConfig& cfg) {
  SegmentScores acc(view.segment_count());
  for (std::size_t s = 0; s < view.segment_count(); ++s) acc[s].assign(view.segment(s).slots().size(), 0.0);
  if (view.empty()) return acc;
  const double avgdl = view.avg_doc_length();
  for (const auto& tok : unique_sorted(query_tokens)) {
    std::size_t df = view.df(tok);
    if (df == 0) continue;
    const double idf = view.idf(tok);
    for (std::size_t s = 0; s < view.segment_count(); ++s) {
      const auto& seg = view.segment(s);
      const auto* list = seg.postings(tok);
      if (!list) continue;
      const auto& slots = seg.slots();
      for (const auto& p : *list) {
        const double tf = p.tf;
        const double len = slots[p.slot].length;
        const double norm = cfg.bm25_k1 * (1.0 - cfg.bm25_b + cfg.bm25_b * len / avgdl);
        acc[s][p.slot] += idf * (tf * (cfg.bm25_k1 + 1.0)) / (tf + norm);
      }
    }
  }
  return acc;
}

SegmentScores accumulate_dense(const IndexView& view, std::string_view query) {
  SegmentScores acc(view.segment_count());
  const DenseVector q = view.embedder().embed(query);
  std::vector<std::pair<std::size_t, double>> nz;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] != 0.0) nz.emplace_back(i, q[i]);
  for (std::size_t s = 0; s < view.segment_count(); ++s) {
    const auto& slots = view.segment(s).slots();
    acc[s].assign(slots.size(), 0.0);
    if (nz.empty()) continue;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (!slots[k].live) continue;
      double dot = 0.0;
      for (const auto& [i, w] : nz) dot += w * slots[k].vec[i];
      acc[s][k] = dot;
    }
  }
  return acc;
}

struct Hit {
  const std::string* doc_id;
  double score;
  std::size_t segment;
  std::size_t slot;
};

bool by_score_then_id(const Hit& a, const Hit& b) {
  if (a.score != b.score) return a.score > b.score;
  return *a.doc_id < *b.doc_id;
}

std::vector<Hit> top_hits(const IndexView& view, const SegmentScores& acc, std::size_t k) {
  std::vector<Hit> hits;
  for (std::size_t s = 0; s < view.segment_count(); ++s) {
    const auto& slots = view.segment(s).slots();
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (slots[i].live && acc[s][i] > 0.0) hits.push_back({&slots[i].doc_id, acc[s][i], s, i});
  }
  if (hits.size() > k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), by_score_then_id);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), by_score_then_id);
  }
  return hits;
}

}  // namespace

std::vector<ScoredDoc> bm25_search(const IndexView& view, const std::vector<std::string>& query_tokens, std::size_t k,
                                   const StackConfig& cfg) {
  if (k < 1) throw InputError("bm25_search needs k >= 1");
  auto acc = accumulate_bm25(view, query_tokens, cfg);
  std::vector<ScoredDoc> out;
  for (const auto& h : top_hits(view, acc, k)) {
    ScoredDoc d;
    d.doc_id = *h.doc_id;
    d.sparse_score = h.score;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<ScoredDoc> dense_search(const IndexView& view, std::string_view query, std::size_t k) {
  auto acc = accumulate_dense(view, query);
  std::vector<ScoredDoc> out;
  for (const auto& h : top_hits(view, acc, k)) {
    ScoredDoc d;
    d.doc_id = *h.doc_id;
    d.dense_score = h.score;
    out.push_back(std::move(d));
  }
  return out;
}

void LexicalDenseReranker::score(std::string_view, std::vector<ScoredDoc>& candidates, const IndexView&) const {
  if (candidates.empty()) return;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : candidates) {
    lo = std::min(lo, c.sparse_score);
    hi = std::max(hi, c.sparse_score);
  }
  for (auto& c : candidates) {
    double norm;
    if (candidates.size() == 1) norm = 1.0;
    else if (hi == lo) norm = hi > 0.0 ? 1.0 : 0.0;
    else norm = (c.sparse_score - lo) / (hi - lo);
    c.rerank_score = w_ * norm + (1.0 - w_) * std::max(0.0, c.dense_score);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ScoredDoc& a, const ScoredDoc& b) { return a.rerank_score > b.rerank_score; });
}

double LogisticCalibrator::calibrate(double score) const {
  double y = 1.0 / (1.0 + std::exp(-(a_ * score + b_)));
  // Keep the open interval even where the logistic saturates in double.
  return std::clamp(y, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

double calibrate(double rerank_score, const StackConfig& cfg) {
  return LogisticCalibrator(cfg.calib_a, cfg.calib_b).calibrate(rerank_score);
}

RetrievalStack::RetrievalStack(StackConfig cfg, std::shared_ptr<const Reranker> reranker,
                               std::shared_ptr<const Calibrator> calibrator)
    : cfg_(cfg), reranker_(std::move(reranker)), calibrator_(std::move(calibrator)) {
  cfg_.validate();
  if (!reranker_) reranker_ = std::make_shared<LexicalDenseReranker>(cfg_.rerank_weight_sparse);
  if (!calibrator_) calibrator_ = std::make_shared<LogisticCalibrator>(cfg_.calib_a, cfg_.calib_b);
}

std::vector<ScoredDoc> RetrievalStack::hybrid_search(const IndexView& view, std::string_view query) const {
  if (view.embedder().dim() != cfg_.embed_dim)
    throw InputError("index embedder dimension does not match embed_dim");
  const auto tokens = tokenize(query);
  const auto sparse = accumulate_bm25(view, tokens, cfg_);
  const auto dense = accumulate_dense(view, query);
  const auto sparse_top = top_hits(view, sparse, cfg_.channel_depth);
  const auto dense_top = top_hits(view, dense, cfg_.channel_depth);

  struct Fused {
    const Hit* any;
    double score = 0.0;
  };
  std::map<std::string_view, Fused> fused;
  auto add = [&](const std::vector<Hit>& list) {
    for (std::size_t r = 0; r < list.size(); ++r) {
      auto& f = fused[*list[r].doc_id];
      f.any = &list[r];
      f.score += 1.0 / (cfg_.rrf_constant + static_cast<double>(r + 1));
    }
  };
  add(sparse_top);
  add(dense_top);

  std::vector<ScoredDoc> out;
  out.reserve(fused.size());
  for (const auto& [id, f] : fused) {
    ScoredDoc d;
    d.doc_id = std::string(id);
    d.sparse_score = sparse[f.any->segment][f.any->slot];
    d.dense_score = dense[f.any->segment][f.any->slot];
    d.fused_score = f.score;
    out.push_back(std::move(d));
  }
  // map iteration is by doc_id, so a stable sort on score keeps id order on ties
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredDoc& a, const ScoredDoc& b) { return a.fused_score > b.fused_score; });
  if (out.size() > cfg_.k_fuse) out.resize(cfg_.k_fuse);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].fused_rank = i + 1;
  return out;
}

std::vector<ScoredDoc> RetrievalStack::rerank(const IndexView& view, std::string_view query,
                                              std::vector<ScoredDoc> candidates) const {
  std::set<std::string> before;
  for (const auto& c : candidates) before.insert(c.doc_id);
  reranker_->score(query, candidates, view);
  std::set<std::string> after;
  for (const auto& c : candidates) after.insert(c.doc_id);
  if (before != after || candidates.size() != before.size())
    throw IntegrityError("re-ranker " + reranker_->name() + " changed the candidate set");
  return candidates;
}

std::vector<ScoredDoc> RetrievalStack::rank(const IndexView& view, std::string_view query) const {
  auto ranked = rerank(view, query, hybrid_search(view, query));
  for (auto& d : ranked) d.calibrated = calibrator_->calibrate(d.rerank_score);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredDoc& a, const ScoredDoc& b) { return a.calibrated > b.calibrated; });
  return ranked;
}

std::vector<ScoredDoc> RetrievalStack::retrieve(const IndexView& view, std::string_view query) const {
  auto ranked = rank(view, query);
  std::erase_if(ranked, [&](const ScoredDoc& d) { return d.calibrated < cfg_.gate_threshold; });
  return ranked;
}

json RetrievalStack::describe(const IndexView& view) const {
  return json{{"stack", cfg_},
              {"embedder", view.embedder().name()},
              {"reranker", reranker_->name()},
              {"calibrator", calibrator_->name()}};
}

}  // namespace nf
