#pragma once
// Deterministic offline implementations of every text task. Used by the sim
// provider backend; each function is a pure function of its arguments.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nugget_forge/lexicon.h"
#include "nugget_forge/tasks.h"

namespace nf {

inline constexpr std::string_view kRefusal = "I could not find an answer to that in the knowledge base.";

/// n lexical paraphrases of q0: synonym swaps, clause reordering and an
/// occasional dropped function word. Each differs from q0, keeps at least one
/// of its content tokens, and the batch is pairwise distinct where the
/// lexicon permits. Alternatives whose tokens are all in vocabulary are
/// preferred.
std::vector<std::string> sim_paraphrase(std::string_view q0, std::size_t n, std::uint64_t seed,
                                        const std::vector<std::string>& vocabulary = {},
                                        const Lexicon& lexicon = Lexicon::bundled());

/// Template questions filled with key words of the nugget; none equals q0
/// when q0 is known. With lead_with_paraphrase the first anchor restates q0
/// in the article's own words and the rest are the first count-1 template
/// anchors, so the templates do not depend on the flag.
std::vector<std::string> sim_anchors(const Article& nugget, const std::optional<std::string>& q0, std::size_t count,
                                     std::uint64_t seed, bool lead_with_paraphrase,
                                     const Lexicon& lexicon = Lexicon::bundled());

/// Tokens a reflection may introduce: nugget, anchors, q0, probes,
/// competitors and feedback.
std::set<std::string> reflection_context_tokens(const ReflectionInput& in);

/// Rewrites title, anchors and body for the failed probes. Original body
/// sentences are always kept and at most kMaxAnchors anchors are returned.
ReflectionOutput sim_reflect(const ReflectionInput& in);

/// Extractive answer: for every document sharing a content token with the
/// query, quotes its best-overlapping body sentence and cites it.
GeneratedAnswer sim_answer(std::string_view query, const std::vector<ContextDoc>& docs);

ActionabilityResult sim_classify(const FeedbackEvent& event);
/// Title and body distilled from the feedback, or nullopt if nothing factual.
std::optional<Article> sim_extract(const FeedbackEvent& event);

JudgeLabels sim_judge(const JudgeInput& in);

}  // namespace nf
