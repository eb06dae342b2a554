#include "nugget_forge/agent.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "nugget_forge/text.h"

namespace nf {

void to_json(json& j, const AgentConfig& v) {
  j = json{{"expansions", v.expansions}, {"max_rounds", v.max_rounds}, {"min_docs", v.min_docs}, {"seed", v.seed}};
}

void to_json(json& j, const RetrievalRound& v) { j = json{{"queries", v.queries}, {"gated", v.gated}}; }
void from_json(const json& j, RetrievalRound& v) {
  j.at("queries").get_to(v.queries);
  j.at("gated").get_to(v.gated);
}

void to_json(json& j, const RagTrace& v) {
  j = json{{"input_query", v.input_query},
           {"expanded_queries", v.expanded_queries},
           {"rounds", v.rounds},
           {"final_gated", v.final_gated},
           {"answer", v.answer},
           {"citations", v.citations},
           {"nugget_id", v.nugget_id},
           {"nugget_retrieved", v.nugget_retrieved},
           {"nugget_cited", v.nugget_cited},
           {"citation_violations", v.citation_violations},
           {"config_fingerprint", v.config_fingerprint}};
}

void from_json(const json& j, RagTrace& v) {
  j.at("input_query").get_to(v.input_query);
  j.at("expanded_queries").get_to(v.expanded_queries);
  j.at("rounds").get_to(v.rounds);
  j.at("final_gated").get_to(v.final_gated);
  j.at("answer").get_to(v.answer);
  j.at("citations").get_to(v.citations);
  j.at("nugget_id").get_to(v.nugget_id);
  j.at("nugget_retrieved").get_to(v.nugget_retrieved);
  j.at("nugget_cited").get_to(v.nugget_cited);
  j.at("citation_violations").get_to(v.citation_violations);
  j.at("config_fingerprint").get_to(v.config_fingerprint);
}

std::vector<std::string> extract_citations(const GeneratedAnswer& answer, const std::vector<ScoredDoc>& gated,
                                           std::size_t& violations) {
  std::vector<std::string> out;
  if (trim(answer.answer).empty()) return out;
  std::set<std::string> allowed;
  for (const auto& d : gated) allowed.insert(d.doc_id);
  for (const auto& c : answer.citations) {
    if (!allowed.count(c)) {
      ++violations;
      std::fprintf(stderr, "warning: dropped citation of non-gated document %s\n", c.c_str());
      continue;
    }
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

std::vector<ScoredDoc> merge_gated(const std::vector<std::vector<ScoredDoc>>& lists) {
  std::map<std::string, ScoredDoc> best;
  for (const auto& list : lists)
    for (const auto& d : list) {
      auto it = best.find(d.doc_id);
      if (it == best.end() || d.calibrated > it->second.calibrated) best[d.doc_id] = d;
    }
  std::vector<ScoredDoc> out;
  out.reserve(best.size());
  for (auto& [_, d] : best) out.push_back(d);
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredDoc& a, const ScoredDoc& b) { return a.calibrated > b.calibrated; });
  return out;
}

Agent::Agent(RetrievalStack stack, Provider& provider, AgentConfig cfg)
    : stack_(std::move(stack)), provider_(provider), cfg_(cfg) {}

std::vector<std::string> Agent::expand_query(const std::string& q) const {
  std::vector<std::string> out{q};
  if (cfg_.expansions == 0) return out;
  std::vector<std::string> extra;
  try {
    extra = paraphrase(provider_, q, cfg_.expansions, mix_seed(cfg_.seed, q));
  } catch (const std::exception&) {
    return out;
  }
  for (const auto& e : extra) {
    bool dup = false;
    for (const auto& o : out) dup = dup || iequals(trim(o), trim(e));
    if (!dup && !trim(e).empty()) out.push_back(e);
  }
  return out;
}

RagTrace Agent::run(const IndexView& view, const std::string& q, const std::optional<std::string>& nugget_id) const {
  RagTrace trace;
  trace.input_query = q;
  trace.nugget_id = nugget_id.value_or("");
  trace.config_fingerprint = fingerprint(view);
  trace.expanded_queries = expand_query(q);

  std::vector<std::vector<ScoredDoc>> lists;
  RetrievalRound first{trace.expanded_queries, {}};
  for (const auto& eq : trace.expanded_queries) lists.push_back(stack_.retrieve(view, eq));
  first.gated = merge_gated(lists);
  trace.rounds.push_back(first);
  auto merged = first.gated;

  if (cfg_.max_rounds >= 2 && !merged.empty() && merged.size() < cfg_.min_docs) {
    const Document* best = view.find(merged.front().doc_id);
    auto q_tokens = token_set(q);
    std::vector<std::string> candidates;
    if (best)
      for (const auto& t : token_set(indexed_text(*best)))
        if (!q_tokens.count(t) && !is_stopword(t)) candidates.push_back(t);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const std::string& a, const std::string& b) { return view.idf(a) > view.idf(b); });
    if (candidates.size() > 2) candidates.resize(2);
    if (!candidates.empty()) {
      auto follow = q + " " + join(candidates, " ");
      RetrievalRound second{{follow}, stack_.retrieve(view, follow)};
      trace.rounds.push_back(second);
      merged = merge_gated({merged, second.gated});
    }
  }
  trace.final_gated = merged;

  std::vector<ContextDoc> docs;
  for (const auto& g : merged) {
    const Document* d = view.find(g.doc_id);
    if (!d) continue;
    docs.push_back({d->doc_id, d->title, d->body, d->anchors.value_or(std::vector<std::string>{})});
  }
  auto answer = generate_answer(provider_, q, docs, mix_seed(cfg_.seed, "answer:" + q));
  trace.answer = answer.answer;
  trace.citations = extract_citations(answer, merged, trace.citation_violations);

  if (nugget_id) {
    for (const auto& g : merged) trace.nugget_retrieved = trace.nugget_retrieved || g.doc_id == *nugget_id;
    for (const auto& c : trace.citations) trace.nugget_cited = trace.nugget_cited || c == *nugget_id;
  }
  return trace;
}

std::string Agent::fingerprint(const IndexView& view) const {
  json j{{"retrieval", stack_.describe(view)}, {"agent", cfg_}, {"provider", provider_.name()}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace nf
