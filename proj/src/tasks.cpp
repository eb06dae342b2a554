#include "nugget_forge/tasks.h"

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
E enum_value(const json& j, const std::array<std::pair<E, const char*>, N>& table, const char* what) {
  auto s = j.get<std::string>();
  for (const auto& [e, name] : table)
    if (s == name) return e;
  throw InputError(std::string("invalid ") + what + ": '" + s + "'");
}

constexpr std::array<std::pair<TaskKind, const char*>, 7> kKinds{{
    {TaskKind::classify_feedback, "classify_feedback"},
    {TaskKind::extract_nugget, "extract_nugget"},
    {TaskKind::generate_anchors, "generate_anchors"},
    {TaskKind::paraphrase, "paraphrase"},
    {TaskKind::reflect, "reflect"},
    {TaskKind::generate_answer, "generate_answer"},
    {TaskKind::judge, "judge"},
}};
constexpr std::array<std::pair<Usefulness, const char*>, 2> kUsefulness{
    {{Usefulness::useful, "useful"}, {Usefulness::not_useful, "not_useful"}}};
constexpr std::array<std::pair<Compliance, const char*>, 4> kCompliance{{{Compliance::addresses, "addresses"},
                                                                         {Compliance::partial, "partial"},
                                                                         {Compliance::misses, "misses"},
                                                                         {Compliance::contradicts, "contradicts"}}};
constexpr std::array<std::pair<Faithfulness, const char*>, 4> kFaithfulness{{{Faithfulness::faithful, "faithful"},
                                                                             {Faithfulness::partial, "partial"},
                                                                             {Faithfulness::unfaithful, "unfaithful"},
                                                                             {Faithfulness::n_a, "n_a"}}};
constexpr std::array<std::pair<Regression, const char*>, 3> kRegression{
    {{Regression::preserved, "preserved"},
     {Regression::minor_regression, "minor_regression"},
     {Regression::major_regression, "major_regression"}}};
constexpr std::array<std::pair<Groundedness, const char*>, 3> kGroundedness{
    {{Groundedness::grounded, "grounded"},
     {Groundedness::minor_issues, "minor_issues"},
     {Groundedness::hallucinated, "hallucinated"}}};

}  // namespace

void to_json(json& j, TaskKind v) { j = enum_name(v, kKinds); }
void from_json(const json& j, TaskKind& v) { v = enum_value(j, kKinds, "task kind"); }
std::string to_string(TaskKind v) { return enum_name(v, kKinds); }
void to_json(json& j, Usefulness v) { j = enum_name(v, kUsefulness); }
void from_json(const json& j, Usefulness& v) { v = enum_value(j, kUsefulness, "feedback_usefulness"); }
void to_json(json& j, Compliance v) { j = enum_name(v, kCompliance); }
void from_json(const json& j, Compliance& v) { v = enum_value(j, kCompliance, "compliance"); }
void to_json(json& j, Faithfulness v) { j = enum_name(v, kFaithfulness); }
void from_json(const json& j, Faithfulness& v) { v = enum_value(j, kFaithfulness, "faithfulness"); }
void to_json(json& j, Regression v) { j = enum_name(v, kRegression); }
void from_json(const json& j, Regression& v) { v = enum_value(j, kRegression, "regression"); }
void to_json(json& j, Groundedness v) { j = enum_name(v, kGroundedness); }
void from_json(const json& j, Groundedness& v) { v = enum_value(j, kGroundedness, "groundedness"); }

void to_json(json& j, const Article& v) { j = json{{"title", v.title}, {"body", v.body}}; }
void from_json(const json& j, Article& v) {
  j.at("title").get_to(v.title);
  j.at("body").get_to(v.body);
}

void to_json(json& j, const ActionabilityResult& v) {
  j = json{{"feedback_usefulness", v.feedback_usefulness},
           {"kb_candidate", v.kb_candidate},
           {"reason", v.reason},
           {"article", v.article ? json(*v.article) : json(nullptr)}};
}
void from_json(const json& j, ActionabilityResult& v) {
  j.at("feedback_usefulness").get_to(v.feedback_usefulness);
  j.at("kb_candidate").get_to(v.kb_candidate);
  j.at("reason").get_to(v.reason);
  v.article.reset();
  if (j.contains("article") && !j.at("article").is_null()) v.article = j.at("article").get<Article>();
}

void to_json(json& j, const ContextDoc& v) {
  j = json{{"doc_id", v.doc_id}, {"title", v.title}, {"body", v.body}};
  if (!v.anchors.empty()) j["anchors"] = v.anchors;
}
void from_json(const json& j, ContextDoc& v) {
  j.at("doc_id").get_to(v.doc_id);
  j.at("title").get_to(v.title);
  j.at("body").get_to(v.body);
  v.anchors = j.value("anchors", std::vector<std::string>{});
}

void to_json(json& j, const Competitor& v) {
  j = v.doc;
  j["distinguishing_terms"] = v.distinguishing_terms;
}
void from_json(const json& j, Competitor& v) {
  from_json(j, v.doc);
  v.distinguishing_terms = j.value("distinguishing_terms", std::vector<std::string>{});
}

void to_json(json& j, const FailedProbe& v) {
  j = json{{"query", v.query},
           {"retrieved", v.retrieved},
           {"cited", v.cited},
           {"answer", v.answer},
           {"competitors", v.competitors}};
}
void from_json(const json& j, FailedProbe& v) {
  j.at("query").get_to(v.query);
  j.at("retrieved").get_to(v.retrieved);
  j.at("cited").get_to(v.cited);
  v.answer = j.value("answer", std::string{});
  v.competitors = j.value("competitors", std::vector<Competitor>{});
}

void to_json(json& j, const ReflectionInput& v) {
  j = json{{"title", v.title},   {"body", v.body},     {"anchors", v.anchors},  {"q0", v.q0},
           {"probes", v.probes}, {"failed", v.failed}, {"feedback", v.feedback}};
}
void from_json(const json& j, ReflectionInput& v) {
  j.at("title").get_to(v.title);
  j.at("body").get_to(v.body);
  j.at("anchors").get_to(v.anchors);
  j.at("q0").get_to(v.q0);
  j.at("probes").get_to(v.probes);
  j.at("failed").get_to(v.failed);
  v.feedback = j.value("feedback", std::string{});
}

void to_json(json& j, const ReflectionOutput& v) {
  j = json{{"title", v.title}, {"body", v.body}, {"anchors", v.anchors}, {"summary", v.summary}};
}
void from_json(const json& j, ReflectionOutput& v) {
  j.at("title").get_to(v.title);
  j.at("body").get_to(v.body);
  j.at("anchors").get_to(v.anchors);
  j.at("summary").get_to(v.summary);
}

void to_json(json& j, const GeneratedAnswer& v) { j = json{{"answer", v.answer}, {"citations", v.citations}}; }
void from_json(const json& j, GeneratedAnswer& v) {
  j.at("answer").get_to(v.answer);
  j.at("citations").get_to(v.citations);
}

void to_json(json& j, const JudgeLabels& v) {
  j = json{{"compliance", v.compliance},
           {"faithfulness", v.faithfulness},
           {"regression", v.regression},
           {"groundedness", v.groundedness}};
}
void from_json(const json& j, JudgeLabels& v) {
  j.at("compliance").get_to(v.compliance);
  j.at("faithfulness").get_to(v.faithfulness);
  j.at("regression").get_to(v.regression);
  j.at("groundedness").get_to(v.groundedness);
}

void to_json(json& j, const JudgeInput& v) {
  j = json{{"question", v.question},   {"original_answer", v.original_answer},
           {"feedback", v.feedback},   {"nugget_id", v.nugget_id},
           {"nugget", v.nugget},       {"context", v.context},
           {"answer", v.answer},       {"wrong_claim", v.wrong_claim}};
}
void from_json(const json& j, JudgeInput& v) {
  j.at("question").get_to(v.question);
  j.at("original_answer").get_to(v.original_answer);
  v.feedback = j.value("feedback", std::string{});
  j.at("nugget_id").get_to(v.nugget_id);
  j.at("nugget").get_to(v.nugget);
  j.at("context").get_to(v.context);
  j.at("answer").get_to(v.answer);
  v.wrong_claim = j.value("wrong_claim", std::string{});
}

}  // namespace nf
