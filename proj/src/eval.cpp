#include "nugget_forge/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "nugget_forge/errors.h"
#include "nugget_forge/nugget.h"
#include "nugget_forge/text.h"

namespace nf {

namespace {

const std::vector<std::string> kSourceOrder{"in_sample", "historical", "synthetic", std::string(kHeldOut)};

std::size_t source_rank(const std::string& s) {
  auto it = std::find(kSourceOrder.begin(), kSourceOrder.end(), s);
  return static_cast<std::size_t>(it - kSourceOrder.begin());
}

std::string format_metric(const MetricSummary& m) {
  char buf[64];
  if (m.std)
    std::snprintf(buf, sizeof buf, "%6.1f +- %4.1f", m.mean, *m.std);
  else
    std::snprintf(buf, sizeof buf, "%6.1f", m.mean);
  return buf;
}

std::string label(Compliance v) { return json(v).get<std::string>(); }
std::string label(Faithfulness v) { return json(v).get<std::string>(); }
std::string label(Regression v) { return json(v).get<std::string>(); }
std::string label(Groundedness v) { return json(v).get<std::string>(); }

}  // namespace

void to_json(json& j, QuerySource v) { j = to_string(v); }
void from_json(const json& j, QuerySource& v) {
  auto s = j.get<std::string>();
  if (s == "in_sample")
    v = QuerySource::in_sample;
  else if (s == "historical")
    v = QuerySource::historical;
  else if (s == "synthetic")
    v = QuerySource::synthetic;
  else
    throw InputError("invalid query source: '" + s + "'");
}
std::string to_string(QuerySource v) {
  switch (v) {
    case QuerySource::in_sample:
      return "in_sample";
    case QuerySource::historical:
      return "historical";
    case QuerySource::synthetic:
      return "synthetic";
  }
  return "";
}

std::vector<MinedQuery> mine_historical(const std::vector<QueryRecord>& log, const std::string& q0,
                                        const RetrievalStack& stack, const MiningConfig& cfg) {
  HashingEmbedder embedder(stack.config().embed_dim);
  auto qv = embedder.embed(q0);
  struct Hit {
    std::size_t pos;
    double cos;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (trim(log[i].text) == trim(q0)) continue;
    double c = cosine(qv, embedder.embed(log[i].text));
    if (c > cfg.min_cosine) hits.push_back({i, c});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.cos > b.cos; });
  if (hits.size() > cfg.top_n) hits.resize(cfg.top_n);
  if (hits.empty()) return {};

  CorpusIndex temp(std::make_shared<HashingEmbedder>(stack.config().embed_dim));
  std::vector<Document> docs;
  char id[32];
  for (std::size_t k = 0; k < hits.size(); ++k) {
    std::snprintf(id, sizeof id, "h%06zu", k);
    docs.push_back({id, "", log[hits[k].pos].text, DocSource::kb, std::nullopt});
  }
  temp.upsert_many(docs);
  IndexView view(temp);
  std::map<std::string, double> sparse;
  for (const auto& d : bm25_search(view, tokenize(q0), docs.size(), stack.config())) sparse[d.doc_id] = d.sparse_score;
  std::vector<ScoredDoc> cands;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    ScoredDoc s;
    s.doc_id = docs[k].doc_id;
    s.sparse_score = sparse.count(s.doc_id) ? sparse[s.doc_id] : 0.0;
    s.dense_score = hits[k].cos;
    s.fused_rank = k + 1;
    cands.push_back(s);
  }
  auto scored = stack.rerank(view, q0, cands);
  std::vector<MinedQuery> out;
  for (const auto& s : scored) {
    if (!(s.rerank_score > cfg.min_rerank)) continue;
    auto k = static_cast<std::size_t>(std::stoul(s.doc_id.substr(1)));
    out.push_back({log[hits[k].pos].text, hits[k].cos, s.rerank_score});
  }
  return out;
}

std::vector<std::string> gen_synthetic_paraphrases(Provider& provider, const RetrievalStack& stack,
                                                   const IndexView& view, const std::string& q0, std::size_t count,
                                                   std::uint64_t seed) {
  std::vector<std::string> vocab;
  if (!view.empty()) {
    auto ranked = stack.rank(view, q0);
    if (ranked.size() > 5) ranked.resize(5);
    std::set<std::string> seen;
    for (const auto& r : ranked) {
      const Document* d = view.find(r.doc_id);
      if (!d) continue;
      std::vector<std::string> toks;
      for (const auto& t : token_set(indexed_text(*d)))
        if (!is_stopword(t)) toks.push_back(t);
      std::stable_sort(toks.begin(), toks.end(),
                       [&](const std::string& a, const std::string& b) { return view.idf(a) > view.idf(b); });
      if (toks.size() > 8) toks.resize(8);
      for (const auto& t : toks)
        if (seen.insert(t).second) vocab.push_back(t);
    }
  }
  return paraphrase(provider, q0, count, mix_seed(mix_seed(seed, "synthetic"), q0), vocab);
}

void to_json(json& j, const EvalQuery& v) { j = json{{"text", v.text}, {"source", v.source}}; }
void from_json(const json& j, EvalQuery& v) {
  j.at("text").get_to(v.text);
  j.at("source").get_to(v.source);
}

void to_json(json& j, const EvalCase& v) {
  j = json{{"event", v.event}, {"nugget", v.nugget}, {"queries", v.queries}, {"wrong_claim", v.wrong_claim}};
}
void from_json(const json& j, EvalCase& v) {
  j.at("event").get_to(v.event);
  j.at("nugget").get_to(v.nugget);
  j.at("queries").get_to(v.queries);
  v.wrong_claim = j.value("wrong_claim", std::string{});
}

void LabelCounts::add(const JudgeLabels& l) {
  ++compliance[label(l.compliance)];
  ++faithfulness[label(l.faithfulness)];
  ++regression[label(l.regression)];
  ++groundedness[label(l.groundedness)];
}

void LabelCounts::merge(const LabelCounts& o) {
  for (const auto& [k, n] : o.compliance) compliance[k] += n;
  for (const auto& [k, n] : o.faithfulness) faithfulness[k] += n;
  for (const auto& [k, n] : o.regression) regression[k] += n;
  for (const auto& [k, n] : o.groundedness) groundedness[k] += n;
  unjudged += o.unjudged;
}

void to_json(json& j, const LabelCounts& v) {
  j = json{{"compliance", v.compliance},
           {"faithfulness", v.faithfulness},
           {"regression", v.regression},
           {"groundedness", v.groundedness},
           {"unjudged", v.unjudged}};
}
void from_json(const json& j, LabelCounts& v) {
  j.at("compliance").get_to(v.compliance);
  j.at("faithfulness").get_to(v.faithfulness);
  j.at("regression").get_to(v.regression);
  j.at("groundedness").get_to(v.groundedness);
  j.at("unjudged").get_to(v.unjudged);
}

double RunRow::retrieval_rate() const { return queries ? 100.0 * static_cast<double>(retrieved) / static_cast<double>(queries) : 0.0; }
double RunRow::citation_rate() const { return queries ? 100.0 * static_cast<double>(cited) / static_cast<double>(queries) : 0.0; }

void to_json(json& j, const RunRow& v) {
  j = json{{"variant", v.variant}, {"source", v.source},   {"seed", v.seed},
           {"queries", v.queries}, {"retrieved", v.retrieved}, {"cited", v.cited}};
}

std::optional<JudgeLabels> judge_answer(Provider& provider, const JudgeInput& in, std::uint64_t seed) {
  try {
    return judge(provider, in, seed);
  } catch (const SchemaError&) {
    return std::nullopt;
  }
}

std::vector<EvalSlice> eval_variant(const CorpusIndex& base, const Agent& agent, const std::vector<EvalCase>& cases,
                                    Variant variant, const std::vector<std::uint64_t>& seeds, const EvalOptions& opts) {
  std::vector<EvalSlice> slices;
  Provider& provider = agent.provider();
  for (auto seed : seeds) {
    EvalSlice slice;
    slice.variant = variant;
    slice.seed = seed;
    slice.fingerprint = agent.fingerprint(base);
    const auto hash_before = base.state_hash();

    std::vector<Document> docs;
    for (const auto& c : cases) {
      auto run_seed = mix_seed(seed, c.nugget.nugget_id);
      const auto& q0 = c.event.trigger_query;
      if (variant == Variant::E) {
        auto [cand, log] = ino_optimize(base, agent, c.nugget, q0, opts.ino, run_seed, c.event.free_text);
        slice.candidates.push_back(cand);
        slice.ino_logs.push_back(log);
      } else {
        slice.candidates.push_back(build_variant(provider, c.nugget, q0, variant, run_seed));
      }
      docs.push_back(render_indexable(slice.candidates.back()));
    }

    std::map<std::string, RunRow> rows;
    {
      ScopedInsertion session(base, docs);
      auto view = session.view();
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const auto& doc_id = docs[i].doc_id;
        for (const auto& q : c.queries) {
          auto trace = agent.run(view, q.text, doc_id);
          std::vector<std::string> keys{to_string(q.source)};
          if (q.source != QuerySource::in_sample) keys.emplace_back(kHeldOut);
          for (const auto& key : keys) {
            auto& row = rows[key];
            row.variant = variant;
            row.source = key;
            row.seed = seed;
            ++row.queries;
            row.retrieved += trace.nugget_retrieved;
            row.cited += trace.nugget_cited;
          }
          if (!opts.judge) continue;
          JudgeInput in;
          in.question = q.text;
          in.original_answer = c.event.original_answer;
          in.feedback = c.event.free_text;
          in.nugget_id = doc_id;
          in.nugget = {c.nugget.title, c.nugget.body};
          for (const auto& g : trace.final_gated)
            if (const Document* d = view.find(g.doc_id)) in.context.push_back({d->doc_id, d->title, d->body, {}});
          in.answer = trace.answer;
          in.wrong_claim = c.wrong_claim;
          auto labels = judge_answer(provider, in, mix_seed(seed, "judge:" + q.text));
          for (const auto& key : keys) {
            if (labels)
              slice.judge[key].add(*labels);
            else
              ++slice.judge[key].unjudged;
          }
        }
      }
    }
    if (base.state_hash() != hash_before) throw IntegrityError("index changed during evaluation run");
    slice.index_hash = hash_before;
    for (const auto& s : kSourceOrder)
      if (rows.count(s)) slice.rows.push_back(rows[s]);
    slices.push_back(std::move(slice));
  }
  return slices;
}

double NegativeControlResult::retrieval_rate() const {
  return queries ? 100.0 * static_cast<double>(retrieved) / static_cast<double>(queries) : 0.0;
}

void to_json(json& j, const NegativeControlResult& v) {
  std::vector<std::string> flagged;
  for (const auto& t : v.flagged) flagged.push_back(t.input_query);
  j = json{{"queries", v.queries}, {"retrieved", v.retrieved}, {"cited", v.cited}, {"flagged_queries", flagged}};
}
void from_json(const json& j, NegativeControlResult& v) {
  j.at("queries").get_to(v.queries);
  j.at("retrieved").get_to(v.retrieved);
  j.at("cited").get_to(v.cited);
  v.flagged.clear();
  for (const auto& q : j.at("flagged_queries")) {
    RagTrace t;
    t.input_query = q.get<std::string>();
    v.flagged.push_back(std::move(t));
  }
}

NegativeControlResult negative_control(const IndexView& view, const Agent& agent, const std::vector<std::string>& queries,
                                       const std::vector<std::string>& nugget_doc_ids) {
  std::set<std::string> ids(nugget_doc_ids.begin(), nugget_doc_ids.end());
  NegativeControlResult r;
  for (const auto& q : queries) {
    auto trace = agent.run(view, q);
    ++r.queries;
    bool hit = false, cited = false;
    for (const auto& g : trace.final_gated) hit = hit || ids.count(g.doc_id);
    for (const auto& c : trace.citations) cited = cited || ids.count(c);
    r.retrieved += hit;
    r.cited += cited;
    if (hit) r.flagged.push_back(std::move(trace));
  }
  return r;
}

MetricSummary summarize(const std::vector<double>& runs) {
  MetricSummary m;
  m.runs = runs;
  if (runs.empty()) return m;
  double sum = 0.0;
  for (double v : runs) sum += v;
  m.mean = sum / static_cast<double>(runs.size());
  if (runs.size() >= 2) {
    double ss = 0.0;
    for (double v : runs) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(runs.size() - 1));
  }
  return m;
}

void to_json(json& j, const MetricSummary& v) {
  j = json{{"mean", v.mean}, {"std", v.std ? json(*v.std) : json(nullptr)}, {"runs", v.runs}};
}
void from_json(const json& j, MetricSummary& v) {
  j.at("mean").get_to(v.mean);
  j.at("runs").get_to(v.runs);
  v.std = j.at("std").is_null() ? std::nullopt : std::optional<double>(j.at("std").get<double>());
}

void to_json(json& j, const ReportRow& v) {
  j = json{{"variant", v.variant},     {"source", v.source},     {"queries", v.queries},
           {"retrieval_rate", v.retrieval}, {"citation_rate", v.citation}, {"judge", v.judge}};
}
void from_json(const json& j, ReportRow& v) {
  j.at("variant").get_to(v.variant);
  j.at("source").get_to(v.source);
  j.at("queries").get_to(v.queries);
  j.at("retrieval_rate").get_to(v.retrieval);
  j.at("citation_rate").get_to(v.citation);
  j.at("judge").get_to(v.judge);
}

const ReportRow* EvalReport::find(Variant v, std::string_view source) const {
  for (const auto& r : rows)
    if (r.variant == v && r.source == source) return &r;
  return nullptr;
}

void to_json(json& j, const EvalReport& v) {
  j = json{{"seeds", v.seeds},
           {"config_fingerprint", v.fingerprint},
           {"index_hash", v.index_hash},
           {"rows", v.rows},
           {"ino_iterations", v.ino_iterations},
           {"negative_control", v.negative_control ? json(*v.negative_control) : json(nullptr)}};
}
void from_json(const json& j, EvalReport& v) {
  j.at("seeds").get_to(v.seeds);
  j.at("config_fingerprint").get_to(v.fingerprint);
  j.at("index_hash").get_to(v.index_hash);
  j.at("rows").get_to(v.rows);
  j.at("ino_iterations").get_to(v.ino_iterations);
  if (j.at("negative_control").is_null())
    v.negative_control.reset();
  else
    v.negative_control = j.at("negative_control").get<NegativeControlResult>();
}

EvalReport aggregate_report(const std::vector<EvalSlice>& slices) {
  if (slices.empty()) throw InputError("no evaluation slices to aggregate");
  EvalReport rep;
  rep.fingerprint = slices.front().fingerprint;
  rep.index_hash = slices.front().index_hash;
  std::set<std::uint64_t> seeds;
  struct Acc {
    std::vector<double> retrieval, citation;
    std::size_t queries = 0;
    LabelCounts judge;
  };
  std::map<std::pair<Variant, std::size_t>, Acc> acc;
  for (const auto& s : slices) {
    if (s.fingerprint != rep.fingerprint)
      throw IntegrityError("slices come from different configurations (" + rep.fingerprint + " vs " + s.fingerprint + ")");
    if (s.index_hash != rep.index_hash) throw IntegrityError("slices come from different corpora");
    seeds.insert(s.seed);
    for (const auto& r : s.rows) {
      auto& a = acc[{r.variant, source_rank(r.source)}];
      a.retrieval.push_back(r.retrieval_rate());
      a.citation.push_back(r.citation_rate());
      a.queries = r.queries;
      if (auto it = s.judge.find(r.source); it != s.judge.end()) a.judge.merge(it->second);
    }
    for (const auto& log : s.ino_logs) {
      auto key = log.converged ? std::to_string(log.iterations_used) : std::string("not_converged");
      ++rep.ino_iterations[key];
    }
  }
  rep.seeds.assign(seeds.begin(), seeds.end());
  for (auto& [key, a] : acc) {
    ReportRow row;
    row.variant = key.first;
    row.source = kSourceOrder.at(key.second);
    row.queries = a.queries;
    row.retrieval = summarize(a.retrieval);
    row.citation = summarize(a.citation);
    row.judge = a.judge;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string render_text(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-7s %-11s %7s  %-15s  %-15s\n", "variant", "source", "queries", "retrieval %",
                "citation %");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-7s %-11s %7zu  %-15s  %-15s\n", to_string(row.variant).c_str(),
                  row.source.c_str(), row.queries, format_metric(row.retrieval).c_str(),
                  format_metric(row.citation).c_str());
    out << line;
  }
  if (!r.ino_iterations.empty()) {
    out << "ino iterations:";
    for (const auto& [k, n] : r.ino_iterations) out << ' ' << k << '=' << n;
    out << '\n';
  }
  if (r.negative_control) {
    const auto& nc = *r.negative_control;
    std::snprintf(line, sizeof line, "negative control: %zu/%zu retrieved (%.2f%%), %zu cited\n", nc.retrieved,
                  nc.queries, nc.retrieval_rate(), nc.cited);
    out << line;
  }
  return out.str();
}

std::string render_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "variant,source,metric,mean,std,runs\n";
  auto emit = [&](const ReportRow& row, const char* metric, const MetricSummary& m) {
    std::vector<std::string> runs;
    char buf[32];
    for (double v : m.runs) {
      std::snprintf(buf, sizeof buf, "%.4f", v);
      runs.emplace_back(buf);
    }
    std::snprintf(buf, sizeof buf, "%.4f", m.mean);
    out << to_string(row.variant) << ',' << row.source << ',' << metric << ',' << buf << ',';
    if (m.std) {
      std::snprintf(buf, sizeof buf, "%.4f", *m.std);
      out << buf;
    }
    out << ',' << join(runs, ";") << '\n';
  };
  for (const auto& row : r.rows) {
    emit(row, "retrieval_rate", row.retrieval);
    emit(row, "citation_rate", row.citation);
  }
  return out.str();
}

}  // namespace nf
