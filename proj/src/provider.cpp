#include "nugget_forge/provider.h"

#include <cstdlib>
#include <regex>
#include <set>
#include <sstream>

#include <httplib.h>

#include "nugget_forge/errors.h"
#include "nugget_forge/sim.h"
#include "nugget_forge/text.h"

namespace nf {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

bool is_string_array(const json& j) {
  if (!j.is_array()) return false;
  for (const auto& e : j)
    if (!e.is_string()) return false;
  return true;
}

template <typename T>
T decode_payload(const json& payload, const char* what) {
  try {
    return payload.get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed ") + what + " payload: " + e.what());
  }
}

const char* instructions(TaskKind kind) {
  switch (kind) {
    case TaskKind::classify_feedback:
      return "Classify the feedback on a support answer. feedback_usefulness is 'useful' when the free text says "
             "something specific about the answer, otherwise 'not_useful'. kb_candidate is true only when the text "
             "states a reusable fact that belongs in a knowledge base; then also write the article (title is a noun "
             "phrase, body has one to three sentences with only the stated facts). Reply with JSON "
             "{\"feedback_usefulness\": \"useful\"|\"not_useful\", \"kb_candidate\": bool, \"reason\": string, "
             "\"article\": {\"title\": string, \"body\": string} | null}.";
    case TaskKind::extract_nugget:
      return "Write a short knowledge-base article containing only the facts stated in the feedback. Title is a "
             "noun phrase; body has at most three sentences. Reply with JSON {\"article\": {\"title\": string, "
             "\"body\": string}} or {\"article\": null} when the feedback states no fact.";
    case TaskKind::generate_anchors:
      return "Write `count` distinct questions a customer might ask that the article answers. None may repeat q0 "
             "verbatim or copy a sentence of the body. When lead_with_paraphrase is true the first question "
             "rephrases q0 in the article's own words. Reply with JSON {\"anchors\": [string]}.";
    case TaskKind::paraphrase:
      return "Rewrite the query `n` times with the same meaning and different wording. Prefer words from "
             "`vocabulary` when given. Each rewrite must differ from the query and from each other. Reply with "
             "JSON {\"paraphrases\": [string]}.";
    case TaskKind::reflect:
      return "The article was not retrieved or not cited for the failed queries. Using only words that appear in "
             "the input, revise the title, add or replace anchor questions (at most 8) so each failed query is "
             "covered, and optionally append one scoping sentence to the body. Never remove a body sentence. "
             "Reply with JSON {\"title\": string, \"body\": string, \"anchors\": [string], \"summary\": string}.";
    case TaskKind::generate_answer:
      return "Answer the query using only the documents. Cite the doc_id of every document you use and no "
             "other. If nothing applies, say you could not find an answer and cite nothing. Reply with JSON "
             "{\"answer\": string, \"citations\": [string]}.";
    case TaskKind::judge:
      return "Grade the answer. compliance: addresses (uses the article's correction fully), partial, misses "
             "(article unused), contradicts (repeats the corrected claim). faithfulness: faithful, partial, "
             "unfaithful, or n_a when the article was not in the context. regression: preserved, "
             "minor_regression or major_regression of correct content from the original answer. groundedness: "
             "grounded, minor_issues or hallucinated with respect to the context. Reply with JSON "
             "{\"compliance\", \"faithfulness\", \"regression\", \"groundedness\"}.";
  }
  return "";
}

std::string getenv_or_empty(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string{};
}

}  // namespace

void ProviderConfig::validate() const {
  if (timeout_ms <= 0) throw InputError("provider.timeout_ms must be positive");
  if (max_retries < 0) throw InputError("provider.max_retries must be >= 0");
  if (backend == Backend::http) {
    if (endpoint_url.empty()) throw InputError("provider.endpoint_url is required for the http backend");
    if (model_name.empty()) throw InputError("provider.model_name is required for the http backend");
    static const std::regex url(R"(^https?://[^/\s]+(/\S*)?$)");
    if (!std::regex_match(endpoint_url, url)) throw InputError("provider.endpoint_url is not an http(s) URL");
  }
}

void to_json(json& j, const ProviderConfig& v) {
  j = json{{"backend", v.backend == Backend::sim ? "sim" : "http"},
           {"endpoint_url", v.endpoint_url},
           {"model_name", v.model_name},
           {"timeout_ms", v.timeout_ms},
           {"max_retries", v.max_retries},
           {"api_key_env", v.api_key_env}};
}

void from_json(const json& j, ProviderConfig& v) {
  static const std::set<std::string> known{"backend", "endpoint_url", "model_name", "timeout_ms", "max_retries",
                                           "api_key_env"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw InputError("unknown provider key: " + k);
  if (j.contains("backend")) {
    auto b = j.at("backend").get<std::string>();
    if (b == "sim")
      v.backend = Backend::sim;
    else if (b == "http")
      v.backend = Backend::http;
    else
      throw InputError("invalid provider.backend: '" + b + "'");
  }
  if (j.contains("endpoint_url")) j.at("endpoint_url").get_to(v.endpoint_url);
  if (j.contains("model_name")) j.at("model_name").get_to(v.model_name);
  if (j.contains("timeout_ms")) j.at("timeout_ms").get_to(v.timeout_ms);
  if (j.contains("max_retries")) j.at("max_retries").get_to(v.max_retries);
  if (j.contains("api_key_env")) j.at("api_key_env").get_to(v.api_key_env);
}

std::uint64_t approx_tokens(std::string_view text) {
  std::uint64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

void validate_payload(TaskKind kind, const json& p) {
  require(p.is_object(), "payload must be a JSON object");
  switch (kind) {
    case TaskKind::classify_feedback:
    case TaskKind::extract_nugget:
      require(p.contains("event"), "payload needs 'event'");
      decode_payload<FeedbackEvent>(p.at("event"), "feedback event");
      return;
    case TaskKind::generate_anchors: {
      require(p.contains("title") && p.at("title").is_string(), "payload needs string 'title'");
      require(p.contains("body") && p.at("body").is_string(), "payload needs string 'body'");
      require(p.contains("q0") && (p.at("q0").is_null() || p.at("q0").is_string()), "payload needs 'q0' (string or null)");
      require(p.contains("count") && p.at("count").is_number_integer(), "payload needs integer 'count'");
      auto count = p.at("count").get<long long>();
      require(count >= 0 && count <= static_cast<long long>(kMaxAnchors), "anchor count out of range");
      require(p.contains("lead_with_paraphrase") && p.at("lead_with_paraphrase").is_boolean(),
              "payload needs boolean 'lead_with_paraphrase'");
      require(!p.at("lead_with_paraphrase").get<bool>() || p.at("q0").is_string(),
              "lead_with_paraphrase needs a q0");
      return;
    }
    case TaskKind::paraphrase:
      require(p.contains("query") && p.at("query").is_string() && !p.at("query").get<std::string>().empty(),
              "payload needs non-empty 'query'");
      require(p.contains("n") && p.at("n").is_number_integer() && p.at("n").get<long long>() >= 1,
              "payload needs integer 'n' >= 1");
      require(!p.contains("vocabulary") || is_string_array(p.at("vocabulary")), "'vocabulary' must be strings");
      return;
    case TaskKind::reflect:
      decode_payload<ReflectionInput>(p, "reflect");
      return;
    case TaskKind::generate_answer:
      require(p.contains("query") && p.at("query").is_string(), "payload needs string 'query'");
      require(p.contains("docs") && p.at("docs").is_array(), "payload needs array 'docs'");
      decode_payload<std::vector<ContextDoc>>(p.at("docs"), "generate_answer");
      return;
    case TaskKind::judge:
      decode_payload<JudgeInput>(p, "judge");
      return;
  }
  throw InputError("unknown task kind");
}

void validate_output(TaskKind kind, const json& out, const std::string& raw) {
  auto fail = [&](const std::string& why) { throw SchemaError(to_string(kind) + " output: " + why, raw); };
  if (!out.is_object()) fail("not a JSON object");
  try {
    switch (kind) {
      case TaskKind::classify_feedback: {
        auto r = out.get<ActionabilityResult>();
        if (r.kb_candidate && r.feedback_usefulness != Usefulness::useful) fail("kb_candidate requires useful");
        if (r.kb_candidate) {
          if (!r.article || r.article->title.empty()) fail("kb_candidate requires an article with a title");
          auto n = count_sentences(r.article->body);
          if (n < 1 || n > 3) fail("article body must have 1-3 sentences");
        }
        return;
      }
      case TaskKind::extract_nugget:
        if (!out.contains("article")) fail("missing 'article'");
        if (!out.at("article").is_null()) {
          auto a = out.at("article").get<Article>();
          if (a.title.empty() || a.body.empty()) fail("empty title or body");
        }
        return;
      case TaskKind::generate_anchors:
        if (!out.contains("anchors") || !is_string_array(out.at("anchors"))) fail("'anchors' must be strings");
        return;
      case TaskKind::paraphrase:
        if (!out.contains("paraphrases") || !is_string_array(out.at("paraphrases"))) fail("'paraphrases' must be strings");
        return;
      case TaskKind::reflect: {
        auto r = out.get<ReflectionOutput>();
        if (r.title.empty() || r.body.empty()) fail("empty title or body");
        return;
      }
      case TaskKind::generate_answer:
        out.get<GeneratedAnswer>();
        return;
      case TaskKind::judge:
        out.get<JudgeLabels>();
        return;
    }
  } catch (const json::exception& e) {
    fail(e.what());
  } catch (const InputError& e) {
    fail(e.what());
  }
}

json Provider::execute(const TextTask& task) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  auto payload_text = task.payload.dump();
  input_tokens_.fetch_add(approx_tokens(payload_text), std::memory_order_relaxed);
  validate_payload(task.kind, task.payload);
  auto raw = run(task);
  output_tokens_.fetch_add(approx_tokens(raw), std::memory_order_relaxed);
  json out;
  try {
    out = json::parse(raw);
  } catch (const json::parse_error&) {
    throw SchemaError(to_string(task.kind) + " output is not valid JSON", raw);
  }
  validate_output(task.kind, out, raw);
  return out;
}

ProviderCounters Provider::counters() const {
  return {input_tokens_.load(), output_tokens_.load(), calls_.load()};
}

std::string SimProvider::run(const TextTask& task) {
  const auto& p = task.payload;
  json out;
  switch (task.kind) {
    case TaskKind::classify_feedback:
      out = sim_classify(p.at("event").get<FeedbackEvent>());
      break;
    case TaskKind::extract_nugget: {
      auto a = sim_extract(p.at("event").get<FeedbackEvent>());
      out = json{{"article", a ? json(*a) : json(nullptr)}};
      break;
    }
    case TaskKind::generate_anchors: {
      Article a{p.at("title").get<std::string>(), p.at("body").get<std::string>()};
      std::optional<std::string> q0;
      if (p.at("q0").is_string()) q0 = p.at("q0").get<std::string>();
      out = json{{"anchors", sim_anchors(a, q0, p.at("count").get<std::size_t>(), task.seed,
                                         p.at("lead_with_paraphrase").get<bool>())}};
      break;
    }
    case TaskKind::paraphrase:
      out = json{{"paraphrases", sim_paraphrase(p.at("query").get<std::string>(), p.at("n").get<std::size_t>(), task.seed,
                                                p.value("vocabulary", std::vector<std::string>{}))}};
      break;
    case TaskKind::reflect:
      out = sim_reflect(p.get<ReflectionInput>());
      break;
    case TaskKind::generate_answer:
      out = sim_answer(p.at("query").get<std::string>(), p.at("docs").get<std::vector<ContextDoc>>());
      break;
    case TaskKind::judge:
      out = sim_judge(p.get<JudgeInput>());
      break;
  }
  return out.dump();
}

HttpProvider::HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.backend = Backend::http;
  cfg_.validate();
  static const std::regex url(R"(^(https?://[^/\s]+)(/\S*)?$)");
  std::smatch m;
  std::regex_match(cfg_.endpoint_url, m, url);
  scheme_host_ = m[1].str();
  path_ = m[2].matched && !m[2].str().empty() ? m[2].str() : "/";
}

json HttpProvider::request_body(const TextTask& task) const {
  return json{{"model", cfg_.model_name},
              {"temperature", 0},
              {"seed", task.seed},
              {"response_format", {{"type", "json_object"}}},
              {"messages",
               json::array({json{{"role", "system"}, {"content", instructions(task.kind)}},
                            json{{"role", "user"}, {"content", task.payload.dump()}}})}};
}

std::string HttpProvider::run(const TextTask& task) {
  httplib::Client client(scheme_host_);
  auto secs = cfg_.timeout_ms / 1000;
  auto usecs = (cfg_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  auto key = getenv_or_empty(cfg_.api_key_env);
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
  auto body = request_body(task).dump();

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw TransportError("provider returned HTTP " + std::to_string(res->status));
    json envelope;
    try {
      envelope = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw SchemaError("provider response is not JSON", res->body);
    }
    const json* content = nullptr;
    if (envelope.contains("choices") && envelope["choices"].is_array() && !envelope["choices"].empty()) {
      const auto& c0 = envelope["choices"][0];
      if (c0.contains("message") && c0["message"].contains("content") && c0["message"]["content"].is_string())
        content = &c0["message"]["content"];
    }
    if (!content) throw SchemaError("provider response has no choices[0].message.content", res->body);
    return content->get<std::string>();
  }
  throw TransportError("provider unreachable after " + std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg) {
  cfg.validate();
  if (cfg.backend == Backend::http) return std::make_unique<HttpProvider>(cfg);
  return std::make_unique<SimProvider>();
}

ActionabilityResult classify_feedback(Provider& p, const FeedbackEvent& event, std::uint64_t seed) {
  return p.execute({TaskKind::classify_feedback, json{{"event", event}}, seed}).get<ActionabilityResult>();
}

std::optional<Article> extract_nugget(Provider& p, const FeedbackEvent& event, std::uint64_t seed) {
  auto out = p.execute({TaskKind::extract_nugget, json{{"event", event}}, seed});
  if (out.at("article").is_null()) return std::nullopt;
  return out.at("article").get<Article>();
}

std::vector<std::string> generate_anchors(Provider& p, const Article& nugget, const std::optional<std::string>& q0,
                                          std::size_t count, bool lead_with_paraphrase, std::uint64_t seed) {
  json payload{{"title", nugget.title},
               {"body", nugget.body},
               {"q0", q0 ? json(*q0) : json(nullptr)},
               {"count", count},
               {"lead_with_paraphrase", lead_with_paraphrase}};
  auto raw = p.execute({TaskKind::generate_anchors, payload, seed});
  auto anchors = raw.at("anchors").get<std::vector<std::string>>();
  if (anchors.size() != count)
    throw SchemaError("generate_anchors returned " + std::to_string(anchors.size()) + " anchors, expected " +
                          std::to_string(count),
                      raw.dump());
  return anchors;
}

std::vector<std::string> paraphrase(Provider& p, const std::string& query, std::size_t n, std::uint64_t seed,
                                    const std::vector<std::string>& vocabulary) {
  json payload{{"query", query}, {"n", n}, {"vocabulary", vocabulary}};
  auto raw = p.execute({TaskKind::paraphrase, payload, seed});
  auto out = raw.at("paraphrases").get<std::vector<std::string>>();
  if (out.size() != n)
    throw SchemaError("paraphrase returned " + std::to_string(out.size()) + " items, expected " + std::to_string(n),
                      raw.dump());
  return out;
}

ReflectionOutput reflect(Provider& p, const ReflectionInput& in, std::uint64_t seed) {
  return p.execute({TaskKind::reflect, json(in), seed}).get<ReflectionOutput>();
}

GeneratedAnswer generate_answer(Provider& p, const std::string& query, const std::vector<ContextDoc>& docs,
                                std::uint64_t seed) {
  // Citations outside the context are left in; extract_citations drops and counts them.
  return p.execute({TaskKind::generate_answer, json{{"query", query}, {"docs", docs}}, seed}).get<GeneratedAnswer>();
}

JudgeLabels judge(Provider& p, const JudgeInput& in, std::uint64_t seed) {
  return p.execute({TaskKind::judge, json(in), seed}).get<JudgeLabels>();
}

}  // namespace nf
