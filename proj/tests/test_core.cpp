// Domain types, text utilities, nugget validation and rendering.
#include "doctest.h"
#include "fixtures.h"
#include "nugget_forge/errors.h"
#include "nugget_forge/nugget.h"

using namespace nf;

namespace {

template <typename T>
T round_trip(const T& v) {
  return json::parse(json(v).dump()).get<T>();
}

std::string random_text(Rng& rng) {
  static const std::vector<std::string> words{"reset", "Owner", "v8.2", "admin-panel", "naïve", "\"q\"", "x\ty",
                                              "semi;colon", "", "émoji 🙂", "line\nbreak"};
  std::string s;
  std::size_t n = rng.below(6);
  for (std::size_t i = 0; i < n; ++i) s += rng.pick(words) + (rng.chance(0.5) ? " " : ". ");
  return s;
}

}  // namespace

TEST_CASE("tokenize follows the lowercase, split, length >= 2 rule") {
  CHECK(tokenize("Reset SSO!") == std::vector<std::string>{"reset", "sso"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("v8.2 admin-panel") == std::vector<std::string>{"v8", "admin", "panel"});
  CHECK(tokenize("the a I of") == std::vector<std::string>{"the", "of"});
  CHECK(tokenize("can't") == std::vector<std::string>{"can"});
}

TEST_CASE("sentence splitting keeps version numbers together") {
  CHECK(count_sentences("In portal v8.2 reset is restricted. Analysts can view.") == 2);
  CHECK(count_sentences("One! Two? Three.") == 3);
  CHECK(count_sentences("No terminal punctuation") == 1);
  CHECK(count_sentences("   ") == 0);
  CHECK(split_sentences("Use v8.2. Then log in.") == std::vector<std::string>{"Use v8.2.", "Then log in."});
}

TEST_CASE("token jaccard") {
  CHECK(token_jaccard("reset password", "password reset") == doctest::Approx(1.0));
  CHECK(token_jaccard("reset password", "reset") == doctest::Approx(0.5));
  CHECK(token_jaccard("", "") == doctest::Approx(0.0).epsilon(1.0));
}

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("validate_nugget") {
  SUBCASE("worked example nugget is valid") { CHECK(validate_nugget(fx::reset_nugget()).ok()); }
  SUBCASE("empty title") {
    auto r = validate_nugget({"n1", "", "x.", "e", "c"});
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "empty title");
  }
  SUBCASE("four sentences") {
    auto r = validate_nugget({"n1", "T", "One. Two. Three. Four.", "e", "c"});
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].find("sentences") != std::string::npos);
  }
  SUBCASE("empty body") { CHECK_FALSE(validate_nugget({"n1", "T", "", "e", "c"}).ok()); }
  SUBCASE("three sentences is the upper bound") { CHECK(validate_nugget({"n1", "T", "A. B. C.", "e", "c"}).ok()); }
}

TEST_CASE("validate_indexable enforces the variant anchor counts") {
  IndexableNugget c{fx::reset_nugget(), {}, Variant::A, 0, {}};
  CHECK(validate_indexable(c).ok());
  c.anchors = {"a?"};
  CHECK_FALSE(validate_indexable(c).ok());
  c.variant = Variant::B;
  CHECK(validate_indexable(c).ok());
  c.variant = Variant::C;
  CHECK_FALSE(validate_indexable(c).ok());
  c.anchors = {"a?", "b?", "c?", "d?", "e?"};
  CHECK(validate_indexable(c).ok());
  c.variant = Variant::D;
  CHECK(validate_indexable(c).ok());
  c.variant = Variant::E;
  c.anchors.resize(8, "x?");
  CHECK(validate_indexable(c).ok());
  c.anchors.push_back("nine?");
  CHECK_FALSE(validate_indexable(c).ok());
  c.anchors.resize(3);
  c.iterations_used = 4;
  CHECK_FALSE(validate_indexable(c).ok());
  c.iterations_used = 3;
  c.anchors[1] = "  why can't my ANALYST reset another teammate's password from the admin panel?";
  CHECK(validate_indexable(c).ok());
  CHECK_FALSE(validate_indexable(c, fx::kQ0).ok());
}

TEST_CASE("render_indexable") {
  IndexableNugget a{fx::reset_nugget(), {}, Variant::A, 0, {}};
  auto doc = render_indexable(a);
  CHECK(doc.doc_id == "nugget:n-evt-reset");
  CHECK(doc.source == DocSource::nugget);
  CHECK(doc.body == a.nugget.body);
  CHECK(indexed_text(doc) == a.nugget.title + "\n" + a.nugget.body);

  IndexableNugget d{fx::reset_nugget(), {"q1?", "q2?", "q3?", "q4?", "q5?"}, Variant::D, 0, {}};
  auto dd = render_indexable(d);
  REQUIRE(dd.anchors.has_value());
  CHECK(*dd.anchors == d.anchors);
  auto text = indexed_text(dd);
  CHECK(text.ends_with("\n— related questions —\nq1?\nq2?\nq3?\nq4?\nq5?"));
  CHECK(render_indexable(d) == dd);
  CHECK(indexed_text(render_indexable(d)) == text);

  IndexableNugget bad{fx::reset_nugget(), {"x?"}, Variant::A, 0, {}};
  CHECK_THROWS_AS(render_indexable(bad), InputError);
}

TEST_CASE("enum parsing is strict") {
  CHECK(parse_variant("E") == Variant::E);
  CHECK_THROWS_AS(parse_variant("F"), InputError);
  CHECK(parse_pass_policy("all") == PassPolicy::all);
  CHECK_THROWS_AS(parse_pass_policy("most"), InputError);
  CHECK_THROWS_AS(json("maybe").get<Signal>(), InputError);
}

TEST_CASE("JSON field names are snake_case as documented") {
  auto j = json(fx::reset_event());
  for (auto key : {"event_id", "agent_kind", "conversation", "trigger_query", "original_answer", "signal", "free_text",
                   "cited_doc_ids", "customer_id"})
    CHECK(j.contains(key));
  CHECK(j["signal"] == "thumbs_down");
  CHECK(j["agent_kind"] == "chat");
  auto n = json(IndexableNugget{fx::reset_nugget(), {}, Variant::A, 0, {{1, "x"}}});
  for (auto key : {"nugget", "anchors", "variant", "iterations_used", "revision_log"}) CHECK(n.contains(key));
}

TEST_CASE("round-trip property over random values of every type") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    FeedbackEvent e;
    e.event_id = "e" + std::to_string(i);
    e.agent_kind = rng.chance(0.5) ? AgentKind::chat : AgentKind::ticket;
    for (std::size_t k = rng.below(4); k > 0; --k) e.conversation.push_back({rng.chance(0.5) ? "user" : "agent", random_text(rng)});
    e.trigger_query = random_text(rng) + "q";
    e.original_answer = random_text(rng);
    e.signal = rng.chance(0.5) ? Signal::thumbs_up : Signal::thumbs_down;
    e.free_text = random_text(rng);
    for (std::size_t k = rng.below(3); k > 0; --k) e.cited_doc_ids.push_back("kb-" + std::to_string(rng.below(100)));
    e.customer_id = random_text(rng);
    CHECK(round_trip(e) == e);

    Nugget n{"n" + std::to_string(i), random_text(rng) + "t", random_text(rng) + "b.", e.event_id, e.customer_id};
    CHECK(round_trip(n) == n);

    IndexableNugget c{n, {}, static_cast<Variant>(rng.below(5)), static_cast<int>(rng.below(4)), {}};
    for (std::size_t k = rng.below(9); k > 0; --k) c.anchors.push_back(random_text(rng));
    for (std::size_t k = rng.below(3); k > 0; --k) c.revision_log.push_back({static_cast<int>(k), random_text(rng)});
    CHECK(round_trip(c) == c);

    Document d{"d" + std::to_string(i), random_text(rng), random_text(rng), rng.chance(0.5) ? DocSource::kb : DocSource::nugget,
               std::nullopt};
    if (rng.chance(0.5)) d.anchors = c.anchors;
    CHECK(round_trip(d) == d);

    ProbeSet p{e.trigger_query, {random_text(rng), random_text(rng), random_text(rng)},
               rng.chance(0.5) ? PassPolicy::any : PassPolicy::all};
    CHECK(round_trip(p) == p);
  }
}

TEST_CASE("conversation order survives storage") {
  auto e = fx::reset_event();
  e.conversation = {{"user", "3"}, {"agent", "1"}, {"user", "2"}};
  CHECK(round_trip(e).conversation == e.conversation);
}
