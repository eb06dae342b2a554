#include "nugget_forge/pipeline.h"

#include <algorithm>
#include <set>

#include "nugget_forge/errors.h"
#include "nugget_forge/nugget.h"
#include "nugget_forge/sim.h"
#include "nugget_forge/text.h"

namespace nf {

namespace {

std::string strip_end(std::string s) {
  s = trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  return s;
}

ContextDoc context_doc(const Document& d) {
  return {d.doc_id, d.title, d.body, d.anchors.value_or(std::vector<std::string>{})};
}

}  // namespace

void to_json(json& j, const ActionabilityRecord& v) {
  j = json{{"event_id", v.event_id}, {"processed", v.processed}, {"result", v.result}, {"error", v.error}};
}
void from_json(const json& j, ActionabilityRecord& v) {
  j.at("event_id").get_to(v.event_id);
  j.at("processed").get_to(v.processed);
  j.at("result").get_to(v.result);
  v.error = j.value("error", std::string{});
}

ActionabilityRecord filter_actionable(Provider& provider, const FeedbackEvent& event, std::uint64_t seed) {
  ActionabilityRecord rec;
  rec.event_id = event.event_id;
  try {
    rec.result = classify_feedback(provider, event, mix_seed(seed, event.event_id));
    rec.processed = true;
  } catch (const SchemaError& e) {
    rec.error = e.what();
  } catch (const TransportError& e) {
    rec.error = e.what();
  }
  return rec;
}

Nugget make_nugget(const FeedbackEvent& event, const Article& article) {
  return {"n-" + event.event_id, article.title, article.body, event.event_id, event.customer_id};
}

IndexableNugget build_variant(Provider& provider, const Nugget& n, const std::string& q0, Variant variant,
                              std::uint64_t seed) {
  auto v = validate_nugget(n);
  if (!v.ok()) throw InputError("invalid nugget " + n.nugget_id + ": " + join(v.violations, "; "));
  IndexableNugget c;
  c.nugget = n;
  c.variant = variant;
  Article a{n.title, n.body};
  auto anchor_seed = mix_seed(seed, "anchors:" + n.nugget_id);
  switch (variant) {
    case Variant::A:
      break;
    case Variant::B:
      c.anchors = generate_anchors(provider, a, q0, 1, true, anchor_seed);
      break;
    case Variant::C:
      c.anchors = generate_anchors(provider, a, q0, 5, false, anchor_seed);
      break;
    case Variant::D:
      c.anchors = generate_anchors(provider, a, q0, 5, true, anchor_seed);
      break;
    case Variant::E:
      throw InputError("variant E is produced by the optimization loop, not by build_variant");
  }
  auto check = validate_indexable(c, q0);
  if (!check.ok()) throw SchemaError("anchors violate variant invariants: " + join(check.violations, "; "), json(c.anchors).dump());
  return c;
}

ProbeSet build_probe_set(Provider& provider, const std::string& q0, const IndexableNugget& candidate,
                         std::uint64_t seed, const ProbeConfig& cfg, PassPolicy policy) {
  if (cfg.paraphrases < 3 || cfg.paraphrases > 5) throw InputError("probe paraphrase count must be in [3, 5]");
  ProbeSet ps;
  ps.trigger = q0;
  ps.pass_policy = policy;
  for (std::size_t slot = 0; slot < cfg.paraphrases; ++slot) {
    for (int attempt = 0; attempt < cfg.attempts; ++attempt) {
      auto s = mix_seed(mix_seed(seed, "probe"), slot * 1024 + static_cast<std::uint64_t>(attempt));
      auto p = paraphrase(provider, q0, 1, s).front();
      bool ok = !iequals(trim(p), trim(q0));
      for (const auto& existing : ps.paraphrases) ok = ok && !iequals(trim(existing), trim(p));
      for (const auto& a : candidate.anchors) ok = ok && token_jaccard(p, a) < cfg.max_anchor_jaccard;
      if (ok) {
        ps.paraphrases.push_back(p);
        break;
      }
    }
  }
  if (ps.paraphrases.size() + 1 < cfg.min_queries)
    throw ProbeConstructionError("only " + std::to_string(ps.paraphrases.size() + 1) + " probe queries for '" + q0 +
                                 "'; the lexicon cannot produce enough anchor-disjoint paraphrases");
  return ps;
}

void to_json(json& j, const ProbeOutcome& v) {
  j = json{{"query", v.query},
           {"retrieved", v.retrieved},
           {"cited", v.cited},
           {"top_competitors", v.top_competitors},
           {"answer", v.answer}};
}
void from_json(const json& j, ProbeOutcome& v) {
  j.at("query").get_to(v.query);
  j.at("retrieved").get_to(v.retrieved);
  j.at("cited").get_to(v.cited);
  j.at("top_competitors").get_to(v.top_competitors);
  j.at("answer").get_to(v.answer);
}

void to_json(json& j, const InoIteration& v) {
  j = json{{"iteration", v.iteration},
           {"candidate", v.candidate},
           {"probes", v.probes},
           {"outcomes", v.outcomes},
           {"passed", v.passed},
           {"reflection_summary", v.reflection_summary},
           {"violations", v.violations}};
}
void from_json(const json& j, InoIteration& v) {
  j.at("iteration").get_to(v.iteration);
  j.at("candidate").get_to(v.candidate);
  j.at("probes").get_to(v.probes);
  j.at("outcomes").get_to(v.outcomes);
  j.at("passed").get_to(v.passed);
  j.at("reflection_summary").get_to(v.reflection_summary);
  j.at("violations").get_to(v.violations);
}

void to_json(json& j, const InoRunLog& v) {
  j = json{{"nugget_id", v.nugget_id},
           {"q0", v.q0},
           {"iterations", v.iterations},
           {"iterations_used", v.iterations_used},
           {"converged", v.converged}};
}
void from_json(const json& j, InoRunLog& v) {
  j.at("nugget_id").get_to(v.nugget_id);
  j.at("q0").get_to(v.q0);
  j.at("iterations").get_to(v.iterations);
  j.at("iterations_used").get_to(v.iterations_used);
  j.at("converged").get_to(v.converged);
}

std::vector<std::string> check_reflection(const Nugget& original, const ReflectionInput& in,
                                          const ReflectionOutput& out) {
  std::vector<std::string> problems;
  std::set<std::string> kept;
  for (const auto& s : split_sentences(out.body)) kept.insert(strip_end(s));
  for (const auto& s : split_sentences(original.body))
    if (!kept.count(strip_end(s))) problems.push_back("original sentence removed or altered: " + s);

  auto allowed = reflection_context_tokens(in);
  std::set<std::string> foreign;
  auto scan = [&](const std::string& text) {
    for (const auto& t : content_tokens(text))
      if (!allowed.count(t)) foreign.insert(t);
  };
  scan(out.title);
  scan(out.body);
  for (const auto& a : out.anchors) scan(a);
  if (!foreign.empty()) problems.push_back("tokens outside the supplied context: " + join({foreign.begin(), foreign.end()}, ", "));

  Nugget revised = original;
  revised.title = out.title;
  revised.body = out.body;
  for (const auto& v : validate_nugget(revised).violations) problems.push_back(v);
  IndexableNugget c{revised, out.anchors, Variant::E, 1, {}};
  for (const auto& v : validate_indexable(c, in.q0).violations) problems.push_back(v);
  return problems;
}

std::pair<IndexableNugget, InoRunLog> ino_optimize(const CorpusIndex& base, const Agent& agent, const Nugget& n,
                                                   const std::string& q0, const InoConfig& cfg, std::uint64_t seed,
                                                   const std::string& feedback) {
  if (cfg.max_iterations < 1 || cfg.max_iterations > kMaxIterations)
    throw InputError("max_iterations must be in [1, " + std::to_string(kMaxIterations) + "]");
  const std::string doc_id = nugget_doc_id(n);
  if (base.contains(doc_id)) throw InputError("base index already contains " + doc_id);
  const auto hash_before = base.state_hash();
  Provider& provider = agent.provider();

  InoRunLog log;
  log.nugget_id = n.nugget_id;
  log.q0 = q0;
  IndexableNugget cand = build_variant(provider, n, q0, Variant::D, seed);

  for (int t = 1; t <= cfg.max_iterations; ++t) {
    InoIteration it;
    it.iteration = t;
    it.candidate = cand;
    std::vector<ProbeOutcome> failed;
    {
      ScopedInsertion session(base, {render_indexable(cand)});
      auto view = session.view();
      it.probes = build_probe_set(provider, q0, cand, mix_seed(seed, "iteration:" + std::to_string(t)), cfg.probes,
                                  cfg.pass_policy);
      for (const auto& q : it.probes.queries()) {
        auto trace = agent.run(view, q, doc_id);
        ProbeOutcome o{q, trace.nugget_retrieved, trace.nugget_cited, {}, trace.answer};
        for (const auto& g : trace.final_gated)
          if (g.doc_id != doc_id && o.top_competitors.size() < 3) o.top_competitors.push_back(g);
        it.outcomes.push_back(o);
      }
      bool any = false, all = true;
      for (const auto& o : it.outcomes) {
        any = any || o.retrieved;
        all = all && o.retrieved;
      }
      it.passed = cfg.pass_policy == PassPolicy::any ? any : all;
      cand.iterations_used = t;
      log.iterations_used = t;
      if (it.passed) {
        log.converged = true;
        log.iterations.push_back(std::move(it));
        break;
      }

      ReflectionInput in;
      in.title = cand.nugget.title;
      in.body = cand.nugget.body;
      in.anchors = cand.anchors;
      in.q0 = q0;
      in.probes = it.probes.queries();
      in.feedback = feedback;
      auto nugget_tokens = token_set(indexed_text(render_indexable(cand)));
      for (const auto& o : it.outcomes) {
        if (o.retrieved && o.cited) continue;
        FailedProbe fp{o.query, o.retrieved, o.cited, o.answer, {}};
        for (const auto& comp : o.top_competitors) {
          const Document* d = view.find(comp.doc_id);
          if (!d) continue;
          Competitor c{context_doc(*d), {}};
          auto terms = std::vector<std::string>{};
          for (const auto& tk : token_set(indexed_text(*d)))
            if (!nugget_tokens.count(tk) && !is_stopword(tk)) terms.push_back(tk);
          std::stable_sort(terms.begin(), terms.end(),
                           [&](const std::string& a, const std::string& b) { return view.idf(a) > view.idf(b); });
          if (terms.size() > cfg.distinguishing_terms) terms.resize(cfg.distinguishing_terms);
          c.distinguishing_terms = terms;
          fp.competitors.push_back(c);
        }
        in.failed.push_back(fp);
      }

      auto out = reflect(provider, in, mix_seed(seed, "reflect:" + std::to_string(t)));
      it.reflection_summary = out.summary;
      it.violations = check_reflection(n, in, out);
      if (it.violations.empty()) {
        cand.nugget.title = out.title;
        cand.nugget.body = out.body;
        cand.anchors = out.anchors;
        cand.variant = Variant::E;
        cand.revision_log.push_back({t, out.summary});
      }
    }
    log.iterations.push_back(std::move(it));
  }

  if (base.state_hash() != hash_before) throw IntegrityError("base index changed during optimization of " + n.nugget_id);
  cand.variant = Variant::E;
  return {cand, log};
}

}  // namespace nf
