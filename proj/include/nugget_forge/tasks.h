#pragma once
// Typed inputs and outputs of the text tasks served by a provider, with their
// JSON forms. Both backends exchange exactly these shapes.

#include <optional>
#include <string>
#include <vector>

#include "nugget_forge/types.h"

namespace nf {

enum class TaskKind { classify_feedback, extract_nugget, generate_anchors, paraphrase, reflect, generate_answer, judge };
void to_json(json& j, TaskKind v);
void from_json(const json& j, TaskKind& v);
std::string to_string(TaskKind v);

struct Article {
  std::string title;
  std::string body;
  bool operator==(const Article&) const = default;
};
void to_json(json& j, const Article& v);
void from_json(const json& j, Article& v);

enum class Usefulness { useful, not_useful };
void to_json(json& j, Usefulness v);
void from_json(const json& j, Usefulness& v);

/// Single-pass label plus the draft article when kb_candidate is set.
struct ActionabilityResult {
  Usefulness feedback_usefulness = Usefulness::not_useful;
  bool kb_candidate = false;
  std::string reason;
  std::optional<Article> article;
  bool operator==(const ActionabilityResult&) const = default;
};
void to_json(json& j, const ActionabilityResult& v);
void from_json(const json& j, ActionabilityResult& v);

struct ContextDoc {
  std::string doc_id;
  std::string title;
  std::string body;
  std::vector<std::string> anchors;
  bool operator==(const ContextDoc&) const = default;
};
void to_json(json& j, const ContextDoc& v);
void from_json(const json& j, ContextDoc& v);

/// A document that outranked the nugget on a failed probe.
struct Competitor {
  ContextDoc doc;
  std::vector<std::string> distinguishing_terms;
  bool operator==(const Competitor&) const = default;
};
void to_json(json& j, const Competitor& v);
void from_json(const json& j, Competitor& v);

struct FailedProbe {
  std::string query;
  bool retrieved = false;
  bool cited = false;
  std::string answer;
  std::vector<Competitor> competitors;
  bool operator==(const FailedProbe&) const = default;
};
void to_json(json& j, const FailedProbe& v);
void from_json(const json& j, FailedProbe& v);

struct ReflectionInput {
  std::string title;
  std::string body;
  std::vector<std::string> anchors;
  std::string q0;
  std::vector<std::string> probes;
  std::vector<FailedProbe> failed;
  std::string feedback;
};
void to_json(json& j, const ReflectionInput& v);
void from_json(const json& j, ReflectionInput& v);

struct ReflectionOutput {
  std::string title;
  std::string body;
  std::vector<std::string> anchors;
  std::string summary;
  bool operator==(const ReflectionOutput&) const = default;
};
void to_json(json& j, const ReflectionOutput& v);
void from_json(const json& j, ReflectionOutput& v);

struct GeneratedAnswer {
  std::string answer;
  std::vector<std::string> citations;
  bool operator==(const GeneratedAnswer&) const = default;
};
void to_json(json& j, const GeneratedAnswer& v);
void from_json(const json& j, GeneratedAnswer& v);

enum class Compliance { addresses, partial, misses, contradicts };
enum class Faithfulness { faithful, partial, unfaithful, n_a };
enum class Regression { preserved, minor_regression, major_regression };
enum class Groundedness { grounded, minor_issues, hallucinated };
void to_json(json& j, Compliance v);
void from_json(const json& j, Compliance& v);
void to_json(json& j, Faithfulness v);
void from_json(const json& j, Faithfulness& v);
void to_json(json& j, Regression v);
void from_json(const json& j, Regression& v);
void to_json(json& j, Groundedness v);
void from_json(const json& j, Groundedness& v);

struct JudgeLabels {
  Compliance compliance = Compliance::misses;
  Faithfulness faithfulness = Faithfulness::n_a;
  Regression regression = Regression::preserved;
  Groundedness groundedness = Groundedness::grounded;
  bool operator==(const JudgeLabels&) const = default;
};
void to_json(json& j, const JudgeLabels& v);
void from_json(const json& j, JudgeLabels& v);

struct JudgeInput {
  std::string question;
  std::string original_answer;
  std::string feedback;
  std::string nugget_id;
  Article nugget;
  std::vector<ContextDoc> context;
  std::string answer;
  /// The incorrect statement the feedback corrected. Empty means the first
  /// sentence of original_answer.
  std::string wrong_claim;
};
void to_json(json& j, const JudgeInput& v);
void from_json(const json& j, JudgeInput& v);

}  // namespace nf
