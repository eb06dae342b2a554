#pragma once
// Domain types shared by every module. All of them are plain values: once
// built they are never mutated in place by the pipeline, so they can be
// copied freely between threads.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nf {

using json = nlohmann::ordered_json;

enum class AgentKind { chat, ticket };
enum class Signal { thumbs_up, thumbs_down };
enum class Variant { A, B, C, D, E };
enum class DocSource { kb, nugget };
enum class PassPolicy { any, all };

// Enum (de)serialization is strict: unknown strings throw InputError.
void to_json(json& j, AgentKind v);
void from_json(const json& j, AgentKind& v);
void to_json(json& j, Signal v);
void from_json(const json& j, Signal& v);
void to_json(json& j, Variant v);
void from_json(const json& j, Variant& v);
void to_json(json& j, DocSource v);
void from_json(const json& j, DocSource& v);
void to_json(json& j, PassPolicy v);
void from_json(const json& j, PassPolicy& v);

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);
std::string to_string(PassPolicy p);
PassPolicy parse_pass_policy(std::string_view s);

struct Turn {
  std::string role;
  std::string text;
  bool operator==(const Turn&) const = default;
};

/// One post-answer feedback record. For the ticket agent trigger_query holds
/// the full transcript text.
struct FeedbackEvent {
  std::string event_id;
  AgentKind agent_kind = AgentKind::chat;
  std::vector<Turn> conversation;
  std::string trigger_query;
  std::string original_answer;
  Signal signal = Signal::thumbs_down;
  std::string free_text;
  std::vector<std::string> cited_doc_ids;
  std::string customer_id;
  bool operator==(const FeedbackEvent&) const = default;
};

struct Nugget {
  std::string nugget_id;
  std::string title;
  std::string body;
  std::string source_event_id;
  std::string customer_id;
  bool operator==(const Nugget&) const = default;
};

struct RevisionEntry {
  int iteration = 0;
  std::string summary;
  bool operator==(const RevisionEntry&) const = default;
};

struct IndexableNugget {
  Nugget nugget;
  std::vector<std::string> anchors;
  Variant variant = Variant::A;
  int iterations_used = 0;
  std::vector<RevisionEntry> revision_log;
  bool operator==(const IndexableNugget&) const = default;
};

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
  DocSource source = DocSource::kb;
  std::optional<std::vector<std::string>> anchors;
  bool operator==(const Document&) const = default;
};

struct ProbeSet {
  std::string trigger;
  std::vector<std::string> paraphrases;
  PassPolicy pass_policy = PassPolicy::any;

  std::vector<std::string> queries() const;
  bool operator==(const ProbeSet&) const = default;
};

inline constexpr std::size_t kMaxAnchors = 8;
inline constexpr int kMaxIterations = 3;
inline constexpr std::string_view kAnchorSeparator = "— related questions —";

/// Text fed to the sparse and dense channels: title, body and, when present,
/// the anchor block after the fixed separator line.
std::string indexed_text(const Document& d);

void to_json(json& j, const Turn& v);
void from_json(const json& j, Turn& v);
void to_json(json& j, const FeedbackEvent& v);
void from_json(const json& j, FeedbackEvent& v);
void to_json(json& j, const Nugget& v);
void from_json(const json& j, Nugget& v);
void to_json(json& j, const RevisionEntry& v);
void from_json(const json& j, RevisionEntry& v);
void to_json(json& j, const IndexableNugget& v);
void from_json(const json& j, IndexableNugget& v);
void to_json(json& j, const Document& v);
void from_json(const json& j, Document& v);
void to_json(json& j, const ProbeSet& v);
void from_json(const json& j, ProbeSet& v);

}  // namespace nf
