#pragma once
// Shared fixtures: the password-reset worked example, small hand-built
// corpora, a random corpus generator and a brute-force BM25 scorer.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nugget_forge/errors.h"
#include "nugget_forge/index.h"
#include "nugget_forge/provider.h"
#include "nugget_forge/text.h"
#include "nugget_forge/types.h"

namespace fx {

using namespace nf;

inline const std::string kQ0 = "Why can't my analyst reset another teammate's password from the admin panel?";
inline const std::string kOriginalAnswer = "Any user with admin-panel access can reset passwords.";
inline const std::string kFeedback =
    "In portal v8.2 password reset is restricted to the Workspace Owner role; the Analyst role can view but not "
    "reset.";
inline const std::string kFailedProbe = "user reset isn't working for my team lead";

inline FeedbackEvent reset_event() {
  FeedbackEvent e;
  e.event_id = "evt-reset";
  e.agent_kind = AgentKind::chat;
  e.conversation = {{"user", kQ0}, {"assistant", kOriginalAnswer}};
  e.trigger_query = kQ0;
  e.original_answer = kOriginalAnswer;
  e.signal = Signal::thumbs_down;
  e.free_text = kFeedback;
  e.cited_doc_ids = {"kb-team"};
  e.customer_id = "acme";
  return e;
}

inline Nugget reset_nugget() {
  return {"n-evt-reset", "Password reset role restriction in portal v8.2",
          "In portal v8.2, only users with the Workspace Owner role can reset another user's password from the admin "
          "panel. Users with the Analyst role can view team members but cannot trigger a reset.",
          "evt-reset", "acme"};
}

inline Document kb(std::string id, std::string title, std::string body) {
  return {std::move(id), std::move(title), std::move(body), DocSource::kb, std::nullopt};
}

/// Support corpus around the worked example, with the generic self-reset
/// articles that compete with the nugget.
inline CorpusIndex reset_corpus() {
  CorpusIndex idx;
  idx.upsert(kb("kb-self", "Resetting your own password",
                "If reset isn't working, open the login screen and choose forgot password. A reset link is emailed to "
                "you. Reset links expire after one hour."));
  idx.upsert(kb("kb-self2", "Password reset isn't working",
                "When a reset isn't working for a user, clear the browser cache and request a new reset link from the "
                "login screen."));
  idx.upsert(kb("kb-lead", "Team lead dashboard", "A team lead sees the workload of every team member on the dashboard."));
  idx.upsert(kb("kb-team", "Managing team members",
                "Team members are listed in the admin panel. Owners can invite users and change roles."));
  idx.upsert(kb("kb-sso", "Single sign-on setup", "Configure SSO from the security settings page."));
  idx.upsert(kb("kb-bill", "Billing invoices", "Invoices are emailed monthly to the billing contact."));
  return idx;
}

/// Sim backend, except that paraphrases of q0 requested one at a time come
/// back as the failing probe for every third seed.
class ScriptedProbeProvider final : public Provider {
 public:
  std::string name() const override { return "scripted"; }

 protected:
  std::string run(const TextTask& t) override {
    if (t.kind == TaskKind::paraphrase && t.payload.at("query") == kQ0 && t.payload.at("n") == 1 && t.seed % 3 == 0)
      return json{{"paraphrases", {kFailedProbe}}}.dump();
    return sim_.execute(t).dump();
  }

 private:
  SimProvider sim_;
};

/// Provider whose every call fails.
class BrokenProvider final : public Provider {
 public:
  std::string name() const override { return "broken"; }

 protected:
  std::string run(const TextTask&) override { throw TransportError("offline"); }
};

/// Provider returning a fixed raw body for every call.
class RawProvider final : public Provider {
 public:
  explicit RawProvider(std::string raw) : raw_(std::move(raw)) {}
  std::string name() const override { return "raw"; }

 protected:
  std::string run(const TextTask&) override { return raw_; }

 private:
  std::string raw_;
};

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (int i = 0; i < 120; ++i) out.push_back("w" + std::to_string(i));
    return out;
  }();
  return v;
}

/// Documents of 3-40 tokens drawn from a skewed 120-word vocabulary, so
/// frequencies, lengths and ties all vary.
inline std::vector<Document> random_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Document> docs;
  const auto& vocab = vocabulary();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = 3 + rng.below(38);
    std::string body;
    for (std::size_t k = 0; k < len; ++k) {
      std::size_t a = rng.below(vocab.size()), b = rng.below(vocab.size());
      body += vocab[std::min(a, b)] + " ";
    }
    char id[16];
    std::snprintf(id, sizeof id, "d%04zu", i);
    docs.push_back(kb(id, "t", body));
  }
  return docs;
}

inline std::vector<std::string> random_query(Rng& rng) {
  std::vector<std::string> q;
  std::size_t len = 1 + rng.below(5);
  for (std::size_t k = 0; k < len; ++k) q.push_back(vocabulary()[rng.below(vocabulary().size())]);
  return q;
}

struct OracleHit {
  std::string doc_id;
  double score;
};

/// Exhaustive BM25 over raw documents: every document is tokenized and scored
/// from scratch, nothing is read from an index.
inline std::vector<OracleHit> brute_force_bm25(const std::vector<Document>& docs, const std::vector<std::string>& query,
                                               std::size_t k, double k1 = 1.2, double b = 0.75) {
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    toks.push_back(tokenize(indexed_text(d)));
    total += static_cast<double>(toks.back().size());
  }
  const double n = static_cast<double>(docs.size());
  const double avgdl = total / n;
  std::set<std::string> terms(query.begin(), query.end());
  std::vector<OracleHit> hits;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double score = 0;
    for (const auto& t : terms) {
      double df = 0;
      for (const auto& other : toks)
        if (std::find(other.begin(), other.end(), t) != other.end()) ++df;
      if (df == 0) continue;
      double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), t));
      if (tf == 0) continue;
      double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      double len = static_cast<double>(toks[i].size());
      score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avgdl));
    }
    if (score > 0) hits.push_back({docs[i].doc_id, score});
  }
  std::sort(hits.begin(), hits.end(), [](const OracleHit& x, const OracleHit& y) {
    return x.score != y.score ? x.score > y.score : x.doc_id < y.doc_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

}  // namespace fx
