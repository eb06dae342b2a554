#include "nugget_forge/benchmark.h"

#include <algorithm>
#include <set>
#include <tuple>

#include "nugget_forge/errors.h"
#include "nugget_forge/index.h"
#include "nugget_forge/lexicon.h"
#include "nugget_forge/text.h"

namespace nf {

namespace {

const std::vector<std::string> kProducts = {"Acumen", "Brightwave", "Corvid",  "Driftwood", "Elmstone",
                                            "Fathom", "Glintly",    "Hollis",  "Ironvale",  "Junco",
                                            "Kestrel", "Lodestar",  "Mosaiq",  "Norhaven",  "Quillon"};

const std::vector<std::string> kObjects = {
    "password", "invoice", "report",   "webhook",      "token",    "widget",  "schedule", "alert",
    "filter",   "template", "field",   "tag",          "license",  "seat",    "subscription", "backup",
    "session",  "project", "folder",   "comment",      "attachment", "contact", "segment", "campaign",
    "ticket",   "dataset", "calendar", "badge",        "notification", "integration"};

const std::vector<std::string> kActions = {"reset",   "export",    "delete",   "archive", "share",  "import",
                                           "sync",    "rename",    "duplicate", "approve", "restore", "configure",
                                           "revoke",  "transfer",  "merge",    "pin",     "lock",   "publish"};

const std::vector<std::string> kRoles = {"Analyst",  "Owner",     "Viewer",     "Editor",   "Auditor", "Contributor",
                                         "Guest",    "Moderator", "Supervisor", "Agent",    "Coordinator", "Admin"};

const std::vector<std::string> kPanels = {"admin panel", "settings page", "dashboard", "admin console"};

constexpr std::size_t kEventObjects = 20;  // objects touched by planted corrections
constexpr std::size_t kEventProducts = 10;
constexpr std::size_t kEventActions = 13;

std::string article(const std::string& noun) {
  return std::string("aeiou").find(noun.front()) != std::string::npos ? "an " + noun : "a " + noun;
}

std::string gerund(const std::string& verb) {
  if (verb == "sync") return "syncing";
  if (verb == "pin") return "pinning";
  if (!verb.empty() && verb.back() == 'e') return verb.substr(0, verb.size() - 1) + "ing";
  return verb + "ing";
}

std::string fill(std::string tpl, const std::vector<std::pair<std::string, std::string>>& slots) {
  for (const auto& [key, value] : slots) {
    std::string k = "{" + key + "}";
    for (auto pos = tpl.find(k); pos != std::string::npos; pos = tpl.find(k, pos + value.size()))
      tpl.replace(pos, k.size(), value);
  }
  return tpl;
}

/// Replaces single lexicon words. A word is its lowercase core after stripping
/// trailing punctuation and a possessive 's. p selects words independently;
/// `forced` picks exactly that many positions instead when non-zero.
std::string substitute(const std::string& text, Rng& rng, double p, std::size_t forced = 0) {
  const auto& lex = Lexicon::bundled();
  auto words = split_words(text);
  struct Slot {
    std::size_t index;
    std::string core, suffix;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string w = words[i];
    std::string suffix;
    while (!w.empty() && std::string(".,?!;:").find(w.back()) != std::string::npos) {
      suffix.insert(suffix.begin(), w.back());
      w.pop_back();
    }
    if (w.size() > 2 && w.compare(w.size() - 2, 2, "'s") == 0) {
      suffix = "'s" + suffix;
      w.resize(w.size() - 2);
    }
    auto lower = to_lower(w);
    if (lex.alternatives(lower)) slots.push_back({i, lower, suffix});
  }
  std::vector<std::size_t> chosen;
  if (forced > 0) {
    std::vector<std::size_t> order(slots.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    order.resize(std::min(forced, order.size()));
    chosen = order;
  } else {
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (rng.chance(p)) chosen.push_back(i);
  }
  for (auto c : chosen) {
    const auto& s = slots[c];
    const auto& alts = *lex.alternatives(s.core);
    std::string rep = rng.pick(alts);
    bool cap = !words[s.index].empty() && std::isupper(static_cast<unsigned char>(words[s.index][0]));
    if (cap) rep = capitalize(rep);
    words[s.index] = rep + s.suffix;
  }
  return join(words, " ");
}

double text_cosine(const std::string& a, const std::string& b) {
  auto va = embed(a), vb = embed(b);
  return cosine(va, vb);
}

struct Topic {
  std::string product, object, action;
};

const std::vector<std::string> kKbTitles = {"How to {action} {a_object} in {product}",
                                            "{product} {object} {action} guide",
                                            "Troubleshooting {object} {action} in {product}",
                                            "{Action} {object} settings in {product}",
                                            "{Object} {action} overview for {product}"};

// Support-forum phrasing, so question words are not unique to planted queries.
const std::vector<std::string> kFaqTitles = {"Why can't my {role2} {action} a teammate's {object}?",
                                            "Is there a way to {action} another user's {object} in {product}?",
                                            "Is there a daily limit on {object} {action}?",
                                            "How many times per day can I {action} {a_object}?",
                                            "Where is the {action} button for {a_object}?",
                                            "I can't find how to {action} {a_object} in {product}",
                                            "{Object} {action} keeps failing after a few tries",
                                            "{Action} option missing for {object} in {product}"};

const std::vector<std::string> kKbSentences = {
    "Users with the {role} role can {action} their own {object}.",
    "The {action} option is available in the {product} {panel} once the {object} has been saved.",
    "If {a_object} is locked, ask a {role2} to unlock it before you {action} it.",
    "{product} keeps a history of every {object} change for 30 days.",
    "You can also {action2} {a_object} from the {object2} settings.",
    "Bulk {action} is limited to 50 {object} items per request.",
    "A {role2} can {action} {a_object} for the whole team from the {panel}.",
    "After you {action} {a_object}, linked {object2} records update within a few minutes.",
    "The {object} {action} event is recorded in the audit log.",
    "If {action} is not working for {a_object}, check who can {action} it under the {object} permissions.",
    "Why can't a {role2} {action} it? Their role permissions in {product} do not include {action}.",
    "Is {action} the same as {action2}? No; {action2} vs {action} differ in how the {object} is kept.",
    "Permissions for who can {action} {a_object} are set per role."};

Document kb_doc(const std::string& id, const Topic& t, Rng& rng, double syn_rate, double faq_rate) {
  std::vector<std::pair<std::string, std::string>> slots = {
      {"a_object", article(t.object)},
      {"Object", capitalize(t.object)},
      {"object2", rng.pick(kObjects)},
      {"object", t.object},
      {"Action", capitalize(t.action)},
      {"action2", rng.pick(kActions)},
      {"action", t.action},
      {"product", t.product},
      {"role2", to_lower(rng.pick(kRoles))},
      {"role", rng.pick(kRoles)},
      {"panel", rng.pick(kPanels)}};
  Document d;
  d.doc_id = id;
  d.source = DocSource::kb;
  const auto& titles = rng.chance(faq_rate) ? kFaqTitles : kKbTitles;
  d.title = substitute(fill(rng.pick(titles), slots), rng, syn_rate);
  std::string lead = fill("To {action} {a_object} in {product}, open the {object} page and select {Action} from the menu.", slots);
  std::vector<std::size_t> order(kKbSentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::string> sentences{lead};
  for (std::size_t i = 0; i < 2 + rng.below(2); ++i) sentences.push_back(fill(kKbSentences[order[i]], slots));
  d.body = substitute(join(sentences, " "), rng, syn_rate);
  return d;
}

enum class Kind { restriction, limit, location };

struct Planted {
  std::string q0;  // the bare question, also used for log paraphrases
  std::string q_template;
  std::string free_text;
  std::string wrong_claim;
  std::string supporting;
  Document competitor;
};

Planted plant(Kind kind, const Topic& t, const std::string& role_x, const std::string& role_y,
              const std::string& version, Rng& rng) {
  std::vector<std::pair<std::string, std::string>> slots = {
      {"a_object", article(t.object)}, {"Object", capitalize(t.object)}, {"object", t.object},
      {"Action", capitalize(t.action)}, {"Acting", capitalize(gerund(t.action))}, {"action", t.action},
      {"product", t.product},           {"role_x", role_x},              {"role_y", role_y},
      {"ry", to_lower(role_y)},         {"version", version},            {"n", std::to_string(3 + rng.below(8))}};
  Planted p;
  p.competitor.source = DocSource::kb;
  switch (kind) {
    case Kind::restriction: {
      static const std::vector<std::string> qs = {"Why can't my {ry} {action} a teammate's {object} in {product}?",
                                                  "My {ry} cannot {action} another user's {object} from the {product} admin panel",
                                                  "Is there a way for a {ry} to {action} a teammate's {object} in {product}?"};
      p.q_template = rng.pick(qs);
      p.q0 = fill(p.q_template, slots);
      p.free_text = fill(
          "Wrong. In {product} {version} {object} {action} is restricted to the {role_x} role; the {role_y} role can "
          "view the {object} but cannot {action} it.",
          slots);
      p.wrong_claim = fill("Any admin can {action} {a_object} for other users from the {product} admin panel.", slots);
      p.supporting = fill("To {action} your own {object}, open your profile and choose {Action}.", slots);
      p.competitor.title = fill("{Acting} your own {object} in {product}", slots);
      p.competitor.body = p.wrong_claim + " " + p.supporting;
      break;
    }
    case Kind::limit: {
      static const std::vector<std::string> qs = {"How many times per day can I {action} {a_object} in {product}?",
                                                  "Is there a daily limit on {object} {action} in {product}?",
                                                  "{Object} {action} keeps failing after a few tries in {product}"};
      p.q_template = rng.pick(qs);
      p.q0 = fill(p.q_template, slots);
      p.free_text = fill(
          "That is outdated. In {product} {version} {object} {action} is limited to {n} per day; extra requests are "
          "rejected until midnight UTC.",
          slots);
      p.wrong_claim = fill("There is no limit on how often you can {action} {a_object} in {product}.", slots);
      p.supporting = fill("Bulk {action} is available to every role.", slots);
      p.competitor.title = fill("{Object} {action} limits in {product}", slots);
      p.competitor.body = p.wrong_claim + " " + p.supporting;
      break;
    }
    case Kind::location: {
      static const std::vector<std::string> qs = {"Where is the {action} button for {a_object} in {product}?",
                                                  "I can't find how to {action} {a_object} in {product}",
                                                  "{Action} option missing for {object} in {product}"};
      p.q_template = rng.pick(qs);
      p.q0 = fill(p.q_template, slots);
      p.free_text = fill(
          "No. In {product} {version} the {object} {action} option is in the admin console; it is greyed out for the "
          "{role_y} role.",
          slots);
      p.wrong_claim = fill("You can {action} {a_object} from the {object} page in {product}.", slots);
      p.supporting = fill("Open the {object}, then choose {Action} from the toolbar.", slots);
      p.competitor.title = fill("{Action} {a_object} from the {object} page", slots);
      p.competitor.body = p.wrong_claim + " " + p.supporting;
      break;
    }
  }
  return p;
}

const std::vector<std::string> kNoise = {"not helpful",
                                         "wrong",
                                         "bad answer",
                                         "this is useless",
                                         "Thanks!",
                                         "great, thanks",
                                         "The answer did not help at all",
                                         "wrong answer, please fix",
                                         "",
                                         "meh",
                                         "Still confused.",
                                         "nope"};

const std::vector<std::string> kLogTemplates = {"How do I {action} {a_object} in {product}?",
                                                "{Object} {action} not working in {product}",
                                                "Can a {role} {action} {a_object} in {product}?",
                                                "{product} {object} {action} steps",
                                                "Where do I {action} {a_object} in {product}?",
                                                "{Action} {object} error in {product}"};

std::string log_query(const std::vector<std::string>& objects, const std::vector<std::string>& products,
                      const std::vector<std::string>& actions, Rng& rng) {
  std::string object = rng.pick(objects);
  std::string action = rng.pick(actions);
  return fill(rng.pick(kLogTemplates), {{"a_object", article(object)},
                                        {"Object", capitalize(object)},
                                        {"object", object},
                                        {"Action", capitalize(action)},
                                        {"action", action},
                                        {"product", rng.pick(products)},
                                        {"role", to_lower(rng.pick(kRoles))}});
}

std::string id(const std::string& prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix.c_str(), n);
  return buf;
}

}  // namespace

void to_json(json& j, const Annotation& v) {
  j = json{{"event_id", v.event_id}, {"wrong_claim", v.wrong_claim}, {"competitor_doc_id", v.competitor_doc_id}};
}
void from_json(const json& j, Annotation& v) {
  j.at("event_id").get_to(v.event_id);
  j.at("wrong_claim").get_to(v.wrong_claim);
  v.competitor_doc_id = j.value("competitor_doc_id", std::string{});
}

Benchmark generate_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.ticket_events > cfg.events) throw InputError("ticket_events exceeds events");
  Rng rng(cfg.seed);
  Benchmark b;

  auto objects = kObjects;
  rng.shuffle(objects);
  std::vector<std::string> event_objects(objects.begin(), objects.begin() + kEventObjects);
  std::vector<std::string> quiet_objects(objects.begin() + kEventObjects, objects.end());
  auto products = kProducts;
  rng.shuffle(products);
  std::vector<std::string> event_products(products.begin(), products.begin() + kEventProducts);
  std::vector<std::string> quiet_products(products.begin() + kEventProducts, products.end());
  auto actions = kActions;
  rng.shuffle(actions);
  std::vector<std::string> event_actions(actions.begin(), actions.begin() + kEventActions);
  std::vector<std::string> quiet_actions(actions.begin() + kEventActions, actions.end());

  std::size_t doc_no = 0;
  for (const auto& product : kProducts)
    for (const auto& object : kObjects) {
      auto actions = kActions;
      rng.shuffle(actions);
      for (std::size_t i = 0; i < cfg.docs_per_pair && i < actions.size(); ++i)
        b.documents.push_back(kb_doc(id("kb-", ++doc_no), {product, object, actions[i]}, rng, cfg.kb_synonym_rate,
                                      cfg.kb_faq_rate));
    }

  std::set<std::tuple<std::string, std::string, std::string>> used;
  std::vector<std::pair<std::string, std::string>> planted_questions;  // event_id, q0
  for (std::size_t e = 0; e < cfg.events; ++e) {
    Topic t;
    do {
      t = {rng.pick(event_products), rng.pick(event_objects), rng.pick(event_actions)};
    } while (!used.insert({t.product, t.object, t.action}).second);
    auto role_x = rng.pick(kRoles);
    std::string role_y;
    do role_y = rng.pick(kRoles);
    while (role_y == role_x);
    auto version = "v" + std::to_string(3 + rng.below(7)) + "." + std::to_string(rng.below(10));
    auto kind = static_cast<Kind>(e % 5 < 3 ? 0 : e % 5 == 3 ? 1 : 2);
    auto p = plant(kind, t, role_x, role_y, version, rng);

    FeedbackEvent ev;
    ev.event_id = id("fb-", e + 1);
    ev.customer_id = "cust-" + std::to_string(1 + rng.below(6));
    ev.signal = Signal::thumbs_down;
    ev.free_text = p.free_text;
    ev.original_answer = p.wrong_claim + " " + p.supporting;
    p.competitor.doc_id = id("kb-c", e + 1);
    ev.cited_doc_ids = {p.competitor.doc_id};
    if (e < cfg.ticket_events) {
      ev.agent_kind = AgentKind::ticket;
      ev.conversation = {{"customer", p.q0}, {"agent", ev.original_answer}};
      ev.trigger_query = "Customer: " + p.q0 + " Agent: " + ev.original_answer;
    } else {
      ev.agent_kind = AgentKind::chat;
      ev.conversation = {{"user", p.q0}, {"assistant", ev.original_answer}};
      ev.trigger_query = p.q0;
    }
    b.annotations.push_back({ev.event_id, p.wrong_claim, p.competitor.doc_id});
    b.documents.push_back(p.competitor);
    // Look-alike FAQ entries: the same question about a neighbouring role,
    // object, product or action.
    for (std::size_t k = 0; k < cfg.lookalikes_per_event; ++k) {
      Topic u = t;
      std::string ry = to_lower(role_y);
      switch (k % 3) {
        case 0:
          if (p.q_template.find("{ry}") != std::string::npos) {
            do ry = to_lower(rng.pick(kRoles));
            while (ry == to_lower(role_y));
          } else {
            do u.action = rng.pick(kActions);
            while (u.action == t.action);
          }
          break;
        case 1:
          do u.object = rng.pick(kObjects);
          while (u.object == t.object);
          break;
        default:
          do u.product = rng.pick(kProducts);
          while (u.product == t.product);
      }
      auto doc = kb_doc(id("kb-l", e * cfg.lookalikes_per_event + k + 1), u, rng, cfg.kb_synonym_rate, 0.0);
      doc.title = fill(p.q_template, {{"a_object", article(u.object)},
                                      {"Object", capitalize(u.object)},
                                      {"object", u.object},
                                      {"Action", capitalize(u.action)},
                                      {"action", u.action},
                                      {"product", u.product},
                                      {"ry", ry}});
      b.documents.push_back(std::move(doc));
    }
    planted_questions.push_back({ev.event_id, p.q0});
    b.feedback.push_back(std::move(ev));
  }

  for (std::size_t e = 0; e < cfg.noise_events; ++e) {
    FeedbackEvent ev;
    ev.event_id = id("fb-", cfg.events + e + 1);
    ev.customer_id = "cust-" + std::to_string(1 + rng.below(6));
    ev.free_text = rng.pick(kNoise);
    ev.signal = ev.free_text.empty() || rng.chance(0.3) ? Signal::thumbs_up : Signal::thumbs_down;
    ev.trigger_query = log_query(objects, kProducts, kActions, rng);
    ev.original_answer = "See the documentation for details.";
    ev.conversation = {{"user", ev.trigger_query}, {"assistant", ev.original_answer}};
    b.feedback.push_back(std::move(ev));
  }
  rng.shuffle(b.feedback);

  std::vector<std::string> log_texts;
  for (const auto& [event_id, q0] : planted_questions) {
    for (std::size_t i = 0, tries = 0; i < cfg.close_per_event && tries < 50; ++tries) {
      auto q = substitute(q0, rng, 0.0, 1 + rng.below(2));
      auto c = text_cosine(q, q0);
      if (q == q0 || c <= 0.78) continue;
      b.planted_close[event_id].push_back(q);
      log_texts.push_back(q);
      ++i;
    }
    for (std::size_t i = 0, tries = 0; i < cfg.far_per_event && tries < 50; ++tries) {
      auto q = substitute(q0, rng, 0.0, 3 + rng.below(3));
      if (text_cosine(q, q0) >= 0.7) continue;
      b.planted_far[event_id].push_back(q);
      log_texts.push_back(q);
      ++i;
    }
  }
  for (std::size_t i = 0; i < cfg.random_log_queries; ++i) log_texts.push_back(log_query(objects, kProducts, kActions, rng));
  rng.shuffle(log_texts);
  for (std::size_t i = 0; i < log_texts.size(); ++i)
    b.query_log.push_back({id("q-", i + 1), log_texts[i], "cust-" + std::to_string(1 + rng.below(6))});

  std::set<std::string> seen;
  for (std::size_t tries = 0; b.negative_queries.size() < cfg.negative_queries && tries < cfg.negative_queries * 50;
       ++tries) {
    auto q = log_query(quiet_objects, quiet_products, quiet_actions, rng);
    if (!seen.insert(q).second) continue;
    b.negative_queries.push_back({id("neg-", b.negative_queries.size() + 1), q, "cust-0"});
  }
  return b;
}

void save_benchmark(const Benchmark& b, const std::filesystem::path& dir) {
  write_jsonl(dir / "documents.jsonl", b.documents);
  write_jsonl(dir / "feedback.jsonl", b.feedback);
  write_jsonl(dir / "annotations.jsonl", b.annotations);
  write_jsonl(dir / "query_log.jsonl", b.query_log);
  write_jsonl(dir / "negative_queries.jsonl", b.negative_queries);
}

Benchmark load_benchmark(const std::filesystem::path& dir) {
  Benchmark b;
  b.documents = read_jsonl<Document>(dir / "documents.jsonl");
  b.feedback = read_jsonl<FeedbackEvent>(dir / "feedback.jsonl");
  b.annotations = read_jsonl<Annotation>(dir / "annotations.jsonl");
  b.query_log = read_jsonl<QueryRecord>(dir / "query_log.jsonl");
  b.negative_queries = read_jsonl<QueryRecord>(dir / "negative_queries.jsonl");
  return b;
}

}  // namespace nf
