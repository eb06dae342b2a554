// Nugget pipeline: actionability, variant builders, probe sets, optimization.
#include "doctest.h"
#include "fixtures.h"
#include "nugget_forge/agent.h"
#include "nugget_forge/errors.h"
#include "nugget_forge/nugget.h"
#include "nugget_forge/pipeline.h"
#include "nugget_forge/sim.h"

using namespace nf;

namespace {

FeedbackEvent event_with(std::string free_text, Signal s = Signal::thumbs_down) {
  auto e = fx::reset_event();
  e.free_text = std::move(free_text);
  e.signal = s;
  return e;
}

bool covers(const std::string& anchor, const std::string& probe) {
  auto p = content_token_set(probe);
  auto a = token_set(anchor);
  std::size_t hit = 0;
  for (const auto& t : p) hit += a.count(t);
  return 2 * hit >= p.size();
}

/// Sim backend whose reflections smuggle in a fact that is nowhere in the
/// context.
class InventingReflector final : public Provider {
 public:
  std::string name() const override { return "inventing"; }

 protected:
  std::string run(const TextTask& t) override {
    if (t.kind == TaskKind::reflect) {
      auto in = t.payload.get<ReflectionInput>();
      ReflectionOutput out{in.title + " blockchain", in.body + " Resets are audited quarterly.", in.anchors, "invented"};
      return json(out).dump();
    }
    return sim_.execute(t).dump();
  }

 private:
  SimProvider sim_;
};

StackConfig closed_gate() {
  StackConfig c;
  c.gate_threshold = 1.0;
  return c;
}

}  // namespace

TEST_CASE("actionability filter") {
  SimProvider sim;
  SUBCASE("vague feedback") {
    auto r = filter_actionable(sim, event_with("not helpful"), 1);
    CHECK(r.processed);
    CHECK_FALSE(r.result.kb_candidate);
    CHECK(r.result.feedback_usefulness == Usefulness::not_useful);
  }
  SUBCASE("generic sentiment only") {
    CHECK_FALSE(filter_actionable(sim, event_with("wrong answer, totally useless bot"), 1).result.kb_candidate);
  }
  SUBCASE("thumbs up with no text") {
    CHECK_FALSE(filter_actionable(sim, event_with("", Signal::thumbs_up), 1).result.kb_candidate);
  }
  SUBCASE("the worked-example correction") {
    auto r = filter_actionable(sim, fx::reset_event(), 1);
    REQUIRE(r.processed);
    REQUIRE(r.result.kb_candidate);
    CHECK(r.result.feedback_usefulness == Usefulness::useful);
    REQUIRE(r.result.article.has_value());
    const auto& a = *r.result.article;
    CHECK(icontains(a.title, "password reset"));
    CHECK(icontains(a.title, "v8.2"));
    CHECK(icontains(a.body, "restricted to the Workspace Owner role"));
    CHECK(icontains(a.body, "Analyst role can view but not reset"));
    auto n = make_nugget(fx::reset_event(), a);
    CHECK(n.nugget_id == "n-evt-reset");
    CHECK(validate_nugget(n).ok());
    CHECK(token_jaccard(a.title, fx::reset_nugget().title) >= 0.6);
  }
  SUBCASE("provider schema errors leave the event unprocessed") {
    fx::RawProvider garbage("{not json");
    auto r = filter_actionable(garbage, fx::reset_event(), 1);
    CHECK_FALSE(r.processed);
    CHECK_FALSE(r.error.empty());
    CHECK(r.event_id == "evt-reset");
  }
}

TEST_CASE("variant builders") {
  SimProvider sim;
  auto n = fx::reset_nugget();
  auto a = build_variant(sim, n, fx::kQ0, Variant::A, 3);
  CHECK(a.anchors.empty());
  CHECK(a.nugget == n);
  auto b = build_variant(sim, n, fx::kQ0, Variant::B, 3);
  REQUIRE(b.anchors.size() == 1);
  CHECK_FALSE(iequals(trim(b.anchors[0]), trim(fx::kQ0)));
  auto c = build_variant(sim, n, fx::kQ0, Variant::C, 3);
  CHECK(c.anchors.size() == 5);
  auto d = build_variant(sim, n, fx::kQ0, Variant::D, 3);
  REQUIRE(d.anchors.size() == 5);
  CHECK(d.anchors[0] == b.anchors[0]);
  CHECK(token_jaccard(d.anchors[0], fx::kQ0) >= 0.5);
  for (std::size_t i = 1; i < 5; ++i) CHECK(d.anchors[i] == c.anchors[i - 1]);
  CHECK(build_variant(sim, n, fx::kQ0, Variant::D, 3) == d);
  CHECK_THROWS_AS(build_variant(sim, n, fx::kQ0, Variant::E, 3), InputError);
  for (const auto& v : {a, b, c, d}) CHECK(validate_indexable(v, fx::kQ0).ok());
}

TEST_CASE("probe sets") {
  SimProvider sim;
  auto d = build_variant(sim, fx::reset_nugget(), fx::kQ0, Variant::D, 3);
  auto ps = build_probe_set(sim, fx::kQ0, d, 9);
  CHECK(ps.queries().size() == 5);
  CHECK(ps.queries().front() == fx::kQ0);
  CHECK(ps.pass_policy == PassPolicy::any);

  SUBCASE("a paraphrase that collides with an anchor is regenerated") {
    IndexableNugget bare = d;
    bare.anchors = {"placeholder"};
    bare.variant = Variant::B;
    auto first = build_probe_set(sim, fx::kQ0, bare, 9);
    // An anchor that differs from the first paraphrase by one token.
    const auto& p = first.paraphrases.front();
    IndexableNugget near = bare;
    near.anchors = {p + " today"};
    double j = token_jaccard(p, near.anchors[0]);
    REQUIRE(j >= 0.8);
    REQUIRE(j < 1.0);
    auto again = build_probe_set(sim, fx::kQ0, near, 9);
    CHECK(std::find(again.paraphrases.begin(), again.paraphrases.end(), p) == again.paraphrases.end());
    CHECK(again.queries().size() >= 4);
  }

  SUBCASE("anchor disjointness across 50 seeds") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      auto cand = build_variant(sim, fx::reset_nugget(), fx::kQ0, Variant::D, s);
      auto probes = build_probe_set(sim, fx::kQ0, cand, s);
      CHECK(probes.queries().size() >= 4);
      CHECK(probes.queries().size() <= 6);
      for (const auto& p : probes.paraphrases)
        for (const auto& a : cand.anchors) CHECK(token_jaccard(p, a) < 0.8);
    }
  }

  SUBCASE("a provider that cannot vary its output fails loudly") {
    fx::RawProvider same(R"({"paraphrases": ["always the same words"]})");
    CHECK_THROWS_AS(build_probe_set(same, fx::kQ0, d, 1), ProbeConstructionError);
  }

  SUBCASE("paraphrase count is bounded") {
    ProbeConfig c;
    c.paraphrases = 6;
    CHECK_THROWS_AS(build_probe_set(sim, fx::kQ0, d, 1, c), InputError);
    c.paraphrases = 3;
    CHECK(build_probe_set(sim, fx::kQ0, d, 1, c).queries().size() == 4);
  }
}

TEST_CASE("optimization returns the variant D candidate when the first check passes") {
  CorpusIndex base = fx::reset_corpus();
  const auto h = base.state_hash();
  SimProvider sim;
  Agent agent(RetrievalStack{}, sim);
  auto n = fx::reset_nugget();
  auto d = build_variant(sim, n, fx::kQ0, Variant::D, 5);
  auto [e, log] = ino_optimize(base, agent, n, fx::kQ0, InoConfig{}, 5);
  CHECK(log.converged);
  CHECK(log.iterations_used == 1);
  CHECK(e.iterations_used == 1);
  CHECK(e.variant == Variant::E);
  CHECK(e.nugget == d.nugget);
  CHECK(e.anchors == d.anchors);
  CHECK(e.revision_log.empty());
  CHECK(base.state_hash() == h);
}

TEST_CASE("optimization on the worked-example failure") {
  CorpusIndex base = fx::reset_corpus();
  const auto h = base.state_hash();
  fx::ScriptedProbeProvider scripted;
  Agent agent(RetrievalStack{}, scripted);
  InoConfig cfg;
  cfg.pass_policy = PassPolicy::all;
  auto [e, log] = ino_optimize(base, agent, fx::reset_nugget(), fx::kQ0, cfg, 1, fx::kFeedback);
  REQUIRE(log.iterations.size() >= 2);
  const auto& first = log.iterations[0];
  CHECK_FALSE(first.passed);
  bool probe_failed = false;
  for (const auto& o : first.outcomes) probe_failed = probe_failed || (o.query == fx::kFailedProbe && !o.retrieved);
  CHECK(probe_failed);
  bool self_reset_competes = false;
  for (const auto& o : first.outcomes)
    for (const auto& c : o.top_competitors) self_reset_competes = self_reset_competes || c.doc_id.rfind("kb-self", 0) == 0;
  CHECK(self_reset_competes);

  CHECK(log.converged);
  CHECK(log.iterations_used <= 3);
  CHECK(icontains(e.nugget.title, "another user's"));
  bool covered = false;
  for (const auto& a : log.iterations[1].candidate.anchors) covered = covered || covers(a, fx::kFailedProbe);
  CHECK(covered);
  for (const auto& s : split_sentences(fx::reset_nugget().body))
    CHECK(e.nugget.body.find(s) != std::string::npos);
  CHECK(validate_indexable(e, fx::kQ0).ok());
  CHECK(base.state_hash() == h);
}

TEST_CASE("optimization stops after three iterations when retrieval never succeeds") {
  CorpusIndex base = fx::reset_corpus();
  const auto h = base.state_hash();
  SimProvider sim;
  Agent agent(RetrievalStack(closed_gate()), sim);
  for (auto policy : {PassPolicy::any, PassPolicy::all}) {
    InoConfig cfg;
    cfg.pass_policy = policy;
    auto [e, log] = ino_optimize(base, agent, fx::reset_nugget(), fx::kQ0, cfg, 2);
    CHECK_FALSE(log.converged);
    CHECK(log.iterations_used == 3);
    CHECK(log.iterations.size() == 3);
    CHECK(e.iterations_used == 3);
    CHECK(e.variant == Variant::E);
    for (const auto& it : log.iterations) CHECK_FALSE(it.passed);
    CHECK(validate_indexable(e).ok());
  }
  CHECK(base.state_hash() == h);
}

TEST_CASE("a reflection that invents facts is rejected and logged") {
  CorpusIndex base = fx::reset_corpus();
  InventingReflector inventing;
  Agent agent(RetrievalStack(closed_gate()), inventing);
  auto n = fx::reset_nugget();
  auto [e, log] = ino_optimize(base, agent, n, fx::kQ0, InoConfig{}, 2);
  CHECK(log.iterations_used == 3);
  for (const auto& it : log.iterations) CHECK_FALSE(it.violations.empty());
  CHECK(e.nugget.title == n.title);
  CHECK(e.nugget.body == n.body);
  CHECK(e.revision_log.empty());
}

TEST_CASE("check_reflection") {
  auto n = fx::reset_nugget();
  ReflectionInput in{n.title, n.body, {"a?"}, fx::kQ0, {fx::kQ0}, {}, fx::kFeedback};
  CHECK(check_reflection(n, in, {n.title, n.body, {"a?"}, ""}).empty());
  CHECK_FALSE(check_reflection(n, in, {n.title, split_sentences(n.body)[0], {"a?"}, ""}).empty());
  CHECK_FALSE(check_reflection(n, in, {n.title + " quantum", n.body, {"a?"}, ""}).empty());
  CHECK_FALSE(check_reflection(n, in, {n.title, n.body, {fx::kQ0}, ""}).empty());
}

TEST_CASE("the optimization log round-trips") {
  CorpusIndex base = fx::reset_corpus();
  fx::ScriptedProbeProvider scripted;
  Agent agent(RetrievalStack{}, scripted);
  InoConfig cfg;
  cfg.pass_policy = PassPolicy::all;
  auto [e, log] = ino_optimize(base, agent, fx::reset_nugget(), fx::kQ0, cfg, 1, fx::kFeedback);
  auto back = json::parse(json(log).dump()).get<InoRunLog>();
  CHECK(json(back).dump() == json(log).dump());
  CHECK_THROWS_AS(ino_optimize(base, agent, fx::reset_nugget(), fx::kQ0, InoConfig{PassPolicy::any, 4}, 1), InputError);
}
