#include "nugget_forge/experiment.h"

#include <map>

#include "nugget_forge/errors.h"
#include "nugget_forge/nugget.h"
#include "nugget_forge/text.h"

namespace nf {

namespace {

EvalCase make_case(Provider& provider, const RetrievalStack& stack, const IndexView& view, const FeedbackEvent& ev,
                   const Nugget& nugget, const std::string& wrong_claim, const std::vector<QueryRecord>& query_log,
                   const CaseConfig& cfg) {
  EvalCase c;
  c.event = ev;
  c.nugget = nugget;
  c.wrong_claim = wrong_claim;
  const auto& q0 = ev.trigger_query;
  c.queries.push_back({q0, QuerySource::in_sample});
  for (const auto& m : mine_historical(query_log, q0, stack, cfg.mining))
    c.queries.push_back({m.text, QuerySource::historical});
  for (const auto& s : gen_synthetic_paraphrases(provider, stack, view, q0, cfg.synthetic_per_case,
                                                 mix_seed(cfg.heldout_seed, ev.event_id)))
    c.queries.push_back({s, QuerySource::synthetic});
  return c;
}

std::map<std::string, std::string> claims_by_event(const std::vector<Annotation>& annotations) {
  std::map<std::string, std::string> claims;
  for (const auto& a : annotations) claims[a.event_id] = a.wrong_claim;
  return claims;
}

}  // namespace

PreparedCases prepare_cases(Provider& provider, const RetrievalStack& stack, const CorpusIndex& base,
                            const std::vector<FeedbackEvent>& feedback, const std::vector<Annotation>& annotations,
                            const std::vector<QueryRecord>& query_log, const CaseConfig& cfg) {
  auto claims = claims_by_event(annotations);
  IndexView view(base);
  PreparedCases out;
  for (const auto& ev : feedback) {
    auto rec = filter_actionable(provider, ev, cfg.heldout_seed);
    out.records.push_back(rec);
    if (!rec.processed || !rec.result.kb_candidate || !rec.result.article) continue;
    auto it = claims.find(ev.event_id);
    out.cases.push_back(make_case(provider, stack, view, ev, make_nugget(ev, *rec.result.article),
                                  it == claims.end() ? std::string{} : it->second, query_log, cfg));
  }
  return out;
}

std::vector<EvalCase> build_cases(Provider& provider, const RetrievalStack& stack, const CorpusIndex& base,
                                  const std::vector<Nugget>& nuggets, const std::vector<FeedbackEvent>& feedback,
                                  const std::vector<Annotation>& annotations, const std::vector<QueryRecord>& query_log,
                                  const CaseConfig& cfg) {
  auto claims = claims_by_event(annotations);
  std::map<std::string, const FeedbackEvent*> events;
  for (const auto& ev : feedback) events[ev.event_id] = &ev;
  IndexView view(base);
  std::vector<EvalCase> out;
  for (const auto& n : nuggets) {
    auto ev = events.find(n.source_event_id);
    if (ev == events.end()) throw InputError("nugget " + n.nugget_id + " refers to unknown event " + n.source_event_id);
    auto it = claims.find(n.source_event_id);
    out.push_back(make_case(provider, stack, view, *ev->second, n, it == claims.end() ? std::string{} : it->second,
                            query_log, cfg));
  }
  return out;
}

ExperimentResult run_experiment(const CorpusIndex& base, const Agent& agent, const std::vector<EvalCase>& cases,
                                const std::vector<std::string>& negative_queries, const ExperimentConfig& cfg) {
  if (cfg.variants.empty() || cfg.seeds.empty()) throw InputError("experiment needs at least one variant and seed");
  ExperimentResult res;
  for (auto v : cfg.variants) {
    auto slices = eval_variant(base, agent, cases, v, cfg.seeds, cfg.eval);
    for (auto& s : slices) res.slices.push_back(std::move(s));
  }
  res.report = aggregate_report(res.slices);

  if (cfg.negative_nuggets > 0 && !negative_queries.empty()) {
    const EvalSlice* pick = nullptr;
    for (const auto& s : res.slices)
      if (s.variant == cfg.variants.back() && s.seed == cfg.seeds.front()) pick = &s;
    std::vector<Document> docs;
    std::vector<std::string> ids;
    for (const auto& c : pick->candidates) {
      if (docs.size() == cfg.negative_nuggets) break;
      docs.push_back(render_indexable(c));
      ids.push_back(docs.back().doc_id);
    }
    ScopedInsertion session(base, docs);
    res.report.negative_control = negative_control(session.view(), agent, negative_queries, ids);
  }
  return res;
}

}  // namespace nf
