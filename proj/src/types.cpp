#include "nugget_forge/types.h"

#include <array>
#include <utility>

#include "nugget_forge/errors.h"

namespace nf {

namespace {

template <typename E, std::size_t N>
std::string enum_name(E v, const std::array<std::pair<E, const char*>, N>& table) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  throw InputError("unmapped enum value");
}

template <typename E, std::size_t N>
E enum_value(std::string_view s, const std::array<std::pair<E, const char*>, N>& table, const char* what) {
  for (const auto& [e, name] : table)
    if (s == name) return e;
  throw InputError(std::string("invalid ") + what + ": '" + std::string(s) + "'");
}

constexpr std::array<std::pair<AgentKind, const char*>, 2> kAgentKinds{
    {{AgentKind::chat, "chat"}, {AgentKind::ticket, "ticket"}}};
constexpr std::array<std::pair<Signal, const char*>, 2> kSignals{
    {{Signal::thumbs_up, "thumbs_up"}, {Signal::thumbs_down, "thumbs_down"}}};
constexpr std::array<std::pair<Variant, const char*>, 5> kVariants{
    {{Variant::A, "A"}, {Variant::B, "B"}, {Variant::C, "C"}, {Variant::D, "D"}, {Variant::E, "E"}}};
constexpr std::array<std::pair<DocSource, const char*>, 2> kSources{
    {{DocSource::kb, "kb"}, {DocSource::nugget, "nugget"}}};
constexpr std::array<std::pair<PassPolicy, const char*>, 2> kPolicies{
    {{PassPolicy::any, "any"}, {PassPolicy::all, "all"}}};

}  // namespace

void to_json(json& j, AgentKind v) { j = enum_name(v, kAgentKinds); }
void from_json(const json& j, AgentKind& v) { v = enum_value(j.get<std::string>(), kAgentKinds, "agent_kind"); }
void to_json(json& j, Signal v) { j = enum_name(v, kSignals); }
void from_json(const json& j, Signal& v) { v = enum_value(j.get<std::string>(), kSignals, "signal"); }
void to_json(json& j, Variant v) { j = enum_name(v, kVariants); }
void from_json(const json& j, Variant& v) { v = enum_value(j.get<std::string>(), kVariants, "variant"); }
void to_json(json& j, DocSource v) { j = enum_name(v, kSources); }
void from_json(const json& j, DocSource& v) { v = enum_value(j.get<std::string>(), kSources, "source"); }
void to_json(json& j, PassPolicy v) { j = enum_name(v, kPolicies); }
void from_json(const json& j, PassPolicy& v) { v = enum_value(j.get<std::string>(), kPolicies, "pass_policy"); }

std::string to_string(Variant v) { return enum_name(v, kVariants); }
Variant parse_variant(std::string_view s) { return enum_value(s, kVariants, "variant"); }
std::string to_string(PassPolicy p) { return enum_name(p, kPolicies); }
PassPolicy parse_pass_policy(std::string_view s) { return enum_value(s, kPolicies, "pass_policy"); }

std::vector<std::string> ProbeSet::queries() const {
  std::vector<std::string> out;
  out.reserve(paraphrases.size() + 1);
  out.push_back(trigger);
  out.insert(out.end(), paraphrases.begin(), paraphrases.end());
  return out;
}

std::string indexed_text(const Document& d) {
  std::string text = d.title;
  text += '\n';
  text += d.body;
  if (d.anchors && !d.anchors->empty()) {
    text += '\n';
    text += kAnchorSeparator;
    for (const auto& a : *d.anchors) {
      text += '\n';
      text += a;
    }
  }
  return text;
}

void to_json(json& j, const Turn& v) { j = json{{"role", v.role}, {"text", v.text}}; }
void from_json(const json& j, Turn& v) {
  j.at("role").get_to(v.role);
  j.at("text").get_to(v.text);
}

void to_json(json& j, const FeedbackEvent& v) {
  j = json{{"event_id", v.event_id},
           {"agent_kind", v.agent_kind},
           {"conversation", v.conversation},
           {"trigger_query", v.trigger_query},
           {"original_answer", v.original_answer},
           {"signal", v.signal},
           {"free_text", v.free_text},
           {"cited_doc_ids", v.cited_doc_ids},
           {"customer_id", v.customer_id}};
}
void from_json(const json& j, FeedbackEvent& v) {
  j.at("event_id").get_to(v.event_id);
  j.at("agent_kind").get_to(v.agent_kind);
  j.at("conversation").get_to(v.conversation);
  j.at("trigger_query").get_to(v.trigger_query);
  j.at("original_answer").get_to(v.original_answer);
  j.at("signal").get_to(v.signal);
  j.at("free_text").get_to(v.free_text);
  j.at("cited_doc_ids").get_to(v.cited_doc_ids);
  j.at("customer_id").get_to(v.customer_id);
  if (v.event_id.empty()) throw InputError("feedback event with empty event_id");
  if (v.trigger_query.empty()) throw InputError("feedback event " + v.event_id + " has empty trigger_query");
}

void to_json(json& j, const Nugget& v) {
  j = json{{"nugget_id", v.nugget_id},
           {"title", v.title},
           {"body", v.body},
           {"source_event_id", v.source_event_id},
           {"customer_id", v.customer_id}};
}
void from_json(const json& j, Nugget& v) {
  j.at("nugget_id").get_to(v.nugget_id);
  j.at("title").get_to(v.title);
  j.at("body").get_to(v.body);
  j.at("source_event_id").get_to(v.source_event_id);
  j.at("customer_id").get_to(v.customer_id);
}

void to_json(json& j, const RevisionEntry& v) { j = json{{"iteration", v.iteration}, {"summary", v.summary}}; }
void from_json(const json& j, RevisionEntry& v) {
  j.at("iteration").get_to(v.iteration);
  j.at("summary").get_to(v.summary);
}

void to_json(json& j, const IndexableNugget& v) {
  j = json{{"nugget", v.nugget},
           {"anchors", v.anchors},
           {"variant", v.variant},
           {"iterations_used", v.iterations_used},
           {"revision_log", v.revision_log}};
}
void from_json(const json& j, IndexableNugget& v) {
  j.at("nugget").get_to(v.nugget);
  j.at("anchors").get_to(v.anchors);
  j.at("variant").get_to(v.variant);
  j.at("iterations_used").get_to(v.iterations_used);
  j.at("revision_log").get_to(v.revision_log);
}

void to_json(json& j, const Document& v) {
  j = json{{"doc_id", v.doc_id}, {"title", v.title}, {"body", v.body}, {"source", v.source}};
  if (v.anchors) j["anchors"] = *v.anchors;
}
void from_json(const json& j, Document& v) {
  j.at("doc_id").get_to(v.doc_id);
  j.at("title").get_to(v.title);
  j.at("body").get_to(v.body);
  j.at("source").get_to(v.source);
  v.anchors.reset();
  if (auto it = j.find("anchors"); it != j.end() && !it->is_null()) v.anchors = it->get<std::vector<std::string>>();
  if (v.doc_id.empty()) throw InputError("document with empty doc_id");
}

void to_json(json& j, const ProbeSet& v) {
  j = json{{"trigger", v.trigger}, {"paraphrases", v.paraphrases}, {"pass_policy", v.pass_policy}};
}
void from_json(const json& j, ProbeSet& v) {
  j.at("trigger").get_to(v.trigger);
  j.at("paraphrases").get_to(v.paraphrases);
  j.at("pass_policy").get_to(v.pass_policy);
}

}  // namespace nf
