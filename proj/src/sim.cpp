#include "nugget_forge/sim.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "nugget_forge/errors.h"
#include "nugget_forge/text.h"
#include "nugget_forge/types.h"

namespace nf {

namespace {

struct Piece {
  std::string lead, core, trail;
};

bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }

Piece split_piece(const std::string& w) {
  std::size_t b = 0, e = w.size();
  while (b < e && !alnum(w[b])) ++b;
  while (e > b && !alnum(w[e - 1])) --e;
  return {w.substr(0, b), w.substr(b, e - b), w.substr(e)};
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string lower_first(std::string s) {
  if (s.size() > 1 && upper(s[0]) && !upper(s[1])) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::string strip_terminal(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '?' || s.back() == '!' || s.back() == ',' || s.back() == ';' ||
                        s.back() == ':' || std::isspace(static_cast<unsigned char>(s.back()))))
    s.pop_back();
  return s;
}

bool shares_any(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& t : a)
    if (b.count(t)) return true;
  return false;
}

bool all_in(const std::vector<std::string>& tokens, const std::set<std::string>& pool) {
  if (tokens.empty()) return false;
  for (const auto& t : tokens)
    if (!pool.count(t)) return false;
  return true;
}

bool contains_ci(const std::vector<std::string>& items, std::string_view s) {
  for (const auto& it : items)
    if (iequals(trim(it), trim(s))) return true;
  return false;
}

// ---------------------------------------------------------------- paraphrase

const std::set<std::string> kPrepositions{"from", "in", "for", "on", "with", "when", "after", "before",
                                          "during", "while", "at", "via", "because", "since", "without"};
const std::set<std::string> kNegations{"not", "no", "nor", "cannot"};

std::vector<std::string> substitute(const std::vector<std::string>& words, double p, Rng& rng, const Lexicon& lex,
                                    const std::set<std::string>& vocab, bool& changed) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < words.size()) {
    bool advanced = false;
    std::size_t max_len = std::min(lex.max_phrase_words(), words.size() - i);
    for (std::size_t len = max_len; len >= 1 && !advanced; --len) {
      std::vector<Piece> pieces;
      bool ok = true;
      for (std::size_t k = 0; k < len && ok; ++k) {
        pieces.push_back(split_piece(words[i + k]));
        const auto& pk = pieces.back();
        if (pk.core.empty() || (k > 0 && !pk.lead.empty()) || (k + 1 < len && !pk.trail.empty())) ok = false;
      }
      if (!ok) continue;
      std::vector<std::string> cores;
      for (const auto& pk : pieces) cores.push_back(to_lower(pk.core));
      std::string key = join(cores, " ");
      std::string suffix;
      const auto* alts = lex.alternatives(key);
      if (!alts && ends_with(key, "'s") && key.size() > 2) {
        key.resize(key.size() - 2);
        suffix = "'s";
        alts = lex.alternatives(key);
      }
      if (!alts) continue;
      if (!rng.chance(p)) break;
      std::vector<std::string> preferred;
      if (!vocab.empty())
        for (const auto& a : *alts)
          if (all_in(tokenize(a), vocab)) preferred.push_back(a);
      const auto& choice = preferred.empty() ? rng.pick(*alts) : rng.pick(preferred);
      auto repl = split_words(choice);
      if (upper(pieces.front().core[0])) repl.front() = capitalize(repl.front());
      repl.front() = pieces.front().lead + repl.front();
      repl.back() += suffix + pieces.back().trail;
      out.insert(out.end(), repl.begin(), repl.end());
      i += len;
      changed = true;
      advanced = true;
    }
    if (!advanced) out.push_back(words[i++]);
  }
  return out;
}

std::vector<std::string> reorder(std::vector<std::string> w, Rng& rng, bool force) {
  if (w.size() < 2) return w;
  std::string term;
  while (!w.back().empty() && (w.back().back() == '?' || w.back().back() == '.' || w.back().back() == '!')) {
    term.insert(term.begin(), w.back().back());
    w.back().pop_back();
  }
  std::vector<std::size_t> cuts;
  for (std::size_t j = 1; j < w.size(); ++j)
    if (kPrepositions.count(to_lower(split_piece(w[j]).core))) cuts.push_back(j);
  std::size_t j;
  if (!cuts.empty()) {
    j = rng.pick(cuts);
  } else if (force) {
    j = w.size() / 2;
  } else {
    w.back() += term;
    return w;
  }
  if (w[0] != "I") w[0] = lower_first(w[0]);
  std::vector<std::string> out(w.begin() + static_cast<std::ptrdiff_t>(j), w.end());
  out.insert(out.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(j));
  while (!out.back().empty() && (out.back().back() == ',' || out.back().back() == ';' || out.back().back() == ':'))
    out.back().pop_back();
  out[0] = capitalize(out[0]);
  out.back() += term;
  return out;
}

void drop_stopword(std::vector<std::string>& w, Rng& rng) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k < w.size(); ++k) {
    auto pc = split_piece(w[k]);
    auto lc = to_lower(pc.core);
    if (!pc.trail.empty() || !pc.lead.empty() || lc.empty()) continue;
    if (kNegations.count(lc) || lc.find("n't") != std::string::npos) continue;
    auto toks = tokenize(lc);
    bool stop = !toks.empty();
    for (const auto& t : toks) stop = stop && is_stopword(t);
    if (stop) idx.push_back(k);
  }
  if (!idx.empty()) w.erase(w.begin() + static_cast<std::ptrdiff_t>(rng.pick(idx)));
}

std::string paraphrase_once(std::string_view q0, std::uint64_t seed, double p, const Lexicon& lex,
                            const std::set<std::string>& vocab) {
  Rng rng(seed);
  auto words = split_words(q0);
  bool changed = false;
  auto w = substitute(words, p, rng, lex, vocab, changed);
  if (rng.chance(0.5) || !changed) w = reorder(std::move(w), rng, !changed);
  if (w.size() >= 4 && rng.chance(0.3)) drop_stopword(w, rng);
  auto out = join(w, " ");
  if (!out.empty()) out = capitalize(out);
  return out;
}

// ------------------------------------------------------------------- anchors

// {t} topic, {s} scope, {e}/{f} entities, {w} any other key word.
const std::array<const char*, 8> kTemplates{
    "How do I {t} in {s}?",
    "Who can {t} in {s}?",
    "{t} for {e} in {s}?",
    "Is {t} {w} in {s}?",
    "{e} vs {f} {t}",
    "{t} permissions in {s}",
    "Why can't a {e} {t}?",
    "{t} {w} for {e}?",
};

// Question styles a support user would bring to a nugget of each kind.
const std::vector<const char*> kLimitFrames{"How many times can I {t} in {s}?", "Is there a daily limit on {t}?",
                                            "{t} keeps failing in {s}"};
const std::vector<const char*> kLocationFrames{"Where is the {t} option in {s}?", "Can't find how to {t} in {s}",
                                               "{t} option missing for {e}"};
const std::vector<const char*> kPermissionFrames{"Why can't my {e} {t}?", "Is there a way for a {e} to {t}?",
                                                 "Who is allowed to {t} in {s}?"};

const std::vector<const char*>& fitting_frames(const Article& a) {
  static const std::vector<const char*> none;
  auto body = to_lower(a.body);
  if (body.find("per day") != std::string::npos || body.find("limit") != std::string::npos) return kLimitFrames;
  if (body.find("greyed out") != std::string::npos || body.find("console") != std::string::npos ||
      body.find("button") != std::string::npos)
    return kLocationFrames;
  if (body.find("restricted to") != std::string::npos || body.find(" role") != std::string::npos)
    return kPermissionFrames;
  return none;
}

const std::set<std::string> kPPStarts{"in", "on", "for", "within", "under", "from"};
const std::set<std::string> kGenericTitleWords{"restriction", "option", "overview", "guide", "settings", "the"};

std::vector<std::string> key_words(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& w : split_words(text)) {
    auto core = to_lower(split_piece(w).core);
    if (ends_with(core, "'s") && core.size() > 2) core.resize(core.size() - 2);
    auto toks = tokenize(core);
    bool useful = false;
    for (const auto& t : toks)
      if (!is_stopword(t) && !std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        useful = true;
    if (useful && std::find(out.begin(), out.end(), core) == out.end()) out.push_back(core);
  }
  return out;
}

std::string synonym_or_self(const std::string& word, Rng& rng, const Lexicon& lex, double p) {
  const auto* alts = lex.alternatives(word);
  if (!alts || !rng.chance(p)) return word;
  return rng.pick(*alts);
}

std::string pick_other(const std::vector<std::string>& pool, const std::set<std::string>& taken, Rng& rng) {
  std::vector<std::string> free;
  for (const auto& w : pool)
    if (!taken.count(w)) free.push_back(w);
  return free.empty() ? rng.pick(pool) : rng.pick(free);
}

struct AnchorParts {
  std::vector<std::string> topic;     // lowercase words
  std::string scope;                  // as written
  std::vector<std::string> entities;  // lowercase
  std::vector<std::string> others;    // lowercase key words
};

/// Topic: leading title words up to the first preposition, minus generic
/// words. Scope: the title's trailing prepositional phrase. Entities:
/// capitalized body words that do not start a sentence.
AnchorParts anchor_parts(const Article& a) {
  AnchorParts p;
  auto title_words = split_words(strip_terminal(a.title));
  std::size_t i = 0;
  for (; i < title_words.size(); ++i) {
    auto core = to_lower(split_piece(title_words[i]).core);
    if (kPPStarts.count(core)) break;
    if (core.empty() || kGenericTitleWords.count(core) || is_stopword(core)) continue;
    p.topic.push_back(core);
  }
  if (i < title_words.size()) {
    std::vector<std::string> rest(title_words.begin() + static_cast<std::ptrdiff_t>(i) + 1, title_words.end());
    p.scope = join(rest, " ");
  }
  std::set<std::string> title_tokens = token_set(a.title);
  for (const auto& sentence : split_sentences(a.body)) {
    auto words = split_words(sentence);
    for (std::size_t k = 1; k < words.size(); ++k) {
      auto core = split_piece(words[k]).core;
      if (core.empty() || !std::isupper(static_cast<unsigned char>(core[0]))) continue;
      if (core.size() > 1 && std::all_of(core.begin(), core.end(), [](char c) { return std::isupper(static_cast<unsigned char>(c)); }))
        continue;  // acronyms name units and zones, not people
      auto lc = to_lower(core);
      if (title_tokens.count(lc) || is_stopword(lc)) continue;
      if (std::find(p.entities.begin(), p.entities.end(), lc) == p.entities.end()) p.entities.push_back(lc);
    }
  }
  for (const auto& w : key_words(a.title + " " + a.body)) {
    bool used = std::find(p.topic.begin(), p.topic.end(), w) != p.topic.end() ||
                std::find(p.entities.begin(), p.entities.end(), w) != p.entities.end() || icontains(p.scope, w) ||
                kGenericTitleWords.count(w);
    if (!used) p.others.push_back(w);
  }
  if (p.topic.empty()) p.topic = key_words(a.title);
  if (p.topic.empty()) p.topic = key_words(a.body);
  if (p.topic.empty()) throw InputError("nugget has no words to build anchors from");
  if (p.topic.size() > 3) p.topic.resize(3);
  if (p.scope.empty()) p.scope = p.others.empty() ? p.topic.front() : p.others.front();
  if (p.others.empty()) p.others = p.topic;
  return p;
}

std::string fill_anchor(std::string tpl, const std::map<char, std::string>& slots) {
  std::string out;
  for (std::size_t k = 0; k < tpl.size(); ++k) {
    if (tpl[k] == '{' && k + 2 < tpl.size() && tpl[k + 2] == '}') {
      out += slots.at(tpl[k + 1]);
      k += 2;
    } else {
      out += tpl[k];
    }
  }
  return capitalize(out);
}

std::vector<std::string> template_anchors(const Article& a, const std::optional<std::string>& q0, std::size_t count,
                                          std::uint64_t seed, const Lexicon& lex) {
  auto parts = anchor_parts(a);
  const auto& frames = fitting_frames(a);
  std::size_t base = static_cast<std::size_t>(mix_seed(seed, "template") % kTemplates.size());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(mix_seed(mix_seed(seed, "anchor"), i));
    std::string text;
    for (int attempt = 0; attempt < 10; ++attempt) {
      std::size_t slot = base + i + static_cast<std::size_t>(attempt / 5);
      std::string_view tpl = kTemplates[slot % kTemplates.size()];
      if (i < 2 && !frames.empty() && attempt < 5) tpl = frames[(base + i) % frames.size()];
      // Templates about people need someone named in the nugget.
      auto unfit = [&](std::string_view t) {
        return (parts.entities.empty() && t.find("{e}") != std::string_view::npos) ||
               (parts.entities.size() < 2 && t.find("{f}") != std::string_view::npos);
      };
      for (std::size_t k = 1; unfit(tpl); ++k) tpl = kTemplates[(slot + k) % kTemplates.size()];
      std::vector<std::string> topic;
      for (const auto& w : parts.topic) topic.push_back(synonym_or_self(w, rng, lex, 0.5));
      auto e = parts.entities.empty() ? std::string{} : rng.pick(parts.entities);
      auto f = parts.entities.empty() ? std::string{} : pick_other(parts.entities, {e}, rng);
      auto w = rng.pick(parts.others);
      text = fill_anchor(std::string(tpl), {{'t', join(topic, " ")},
                               {'s', parts.scope},
                               {'e', e.empty() ? e : synonym_or_self(e, rng, lex, 0.5)},
                               {'f', f.empty() ? f : synonym_or_self(f, rng, lex, 0.5)},
                               {'w', synonym_or_self(w, rng, lex, 0.5)}});
      bool ok = !(q0 && iequals(trim(*q0), text)) && !icontains(a.body, text) && !contains_ci(out, text);
      if (ok) break;
      if (attempt == 9) text += " (" + std::to_string(i + 1) + ")";
    }
    out.push_back(text);
  }
  return out;
}

/// The customer's words when q0 is a "Customer: ... Agent: ..." transcript.
std::string user_turn(std::string_view q0) {
  std::string text = trim(q0);
  for (const char* label : {"customer:", "user:"}) {
    std::string_view l(label);
    if (text.size() <= l.size() || !iequals(text.substr(0, l.size()), l)) continue;
    auto rest = text.substr(l.size());
    auto lower = to_lower(rest);
    auto end = lower.find(" agent:");
    return trim(end == std::string::npos ? rest : rest.substr(0, end));
  }
  return text;
}

/// q0 restated in the article's words: each word is kept if the article uses
/// it, otherwise swapped for a lexicon alternative the article uses; other
/// function words are dropped half of the time. Negations always stay.
std::string restate_query(std::string_view q0, const Article& a, std::uint64_t seed, const Lexicon& lex) {
  Rng rng(mix_seed(seed, "restate"));
  auto vocab = token_set(a.title + " " + a.body);
  auto all_known = [&](std::string_view text) {
    auto toks = tokenize(text);
    if (toks.empty()) return false;
    for (const auto& t : toks)
      if (!vocab.count(t)) return false;
    return true;
  };
  std::vector<std::string> out;
  for (const auto& w : split_words(user_turn(q0))) {
    auto core = split_piece(w).core;
    std::string poss;
    if (core.size() > 2 && ends_with(to_lower(core), "'s")) {
      poss = core.substr(core.size() - 2);
      core.resize(core.size() - 2);
    }
    auto lc = to_lower(core);
    if (lc.empty()) continue;
    bool negation = kNegations.count(lc) || lc.find("n't") != std::string::npos;
    bool known = all_known(lc);
    if (!known)
      if (const auto* alts = lex.alternatives(lc))
        for (const auto& alt : *alts)
          if (all_known(alt)) {
            core = alt;
            known = true;
            break;
          }
    bool function_word = true;
    for (const auto& t : tokenize(lc)) function_word = function_word && is_stopword(t);
    if (!known && !negation && function_word && rng.chance(0.5)) continue;
    out.push_back(core + poss);
  }
  auto text = capitalize(join(out, " "));
  if (text.empty() || iequals(text, trim(q0))) return sim_paraphrase(q0, 1, seed, {}, lex).front();
  return text;
}

// ---------------------------------------------------------------- reflection

bool covers(std::string_view anchor, std::string_view probe) {
  auto p = content_token_set(probe);
  if (p.empty()) return true;
  auto a = token_set(anchor);
  std::size_t hit = 0;
  for (const auto& t : p) hit += a.count(t);
  return 2 * hit >= p.size();
}

std::string probe_anchor(std::string_view probe) {
  std::vector<std::string> kept;
  for (const auto& w : split_words(probe)) {
    auto core = to_lower(split_piece(w).core);
    auto toks = tokenize(core);
    bool content = false;
    for (const auto& t : toks) content = content || !is_stopword(t);
    if (content) kept.push_back(core);
  }
  if (kept.empty()) return {};
  return capitalize(join(kept, " ")) + "?";
}

struct Phrase {
  std::string text;
  std::string object;
};

std::optional<Phrase> disambiguating_phrase(const std::string& body, const std::set<std::string>& probe_tokens,
                                            const std::set<std::string>& competitor_tokens) {
  auto words = split_words(body);
  for (std::size_t i = 1; i < words.size(); ++i) {
    auto cur = split_piece(words[i]);
    auto prev = split_piece(words[i - 1]);
    if (cur.core.empty() || prev.core.empty() || !prev.trail.empty() || !cur.lead.empty()) continue;
    auto cur_tokens = token_set(cur.core);
    if (!shares_any(cur_tokens, probe_tokens)) continue;
    auto prev_tokens = tokenize(prev.core);
    bool ok = !prev_tokens.empty();
    for (const auto& t : prev_tokens) ok = ok && !is_stopword(t) && !competitor_tokens.count(t);
    if (!ok) continue;
    Phrase ph{to_lower(prev.core) + " " + to_lower(cur.core), {}};
    if (cur.trail.empty() && i + 1 < words.size()) {
      auto next = split_piece(words[i + 1]);
      auto nt = tokenize(next.core);
      if (next.lead.empty() && !nt.empty() && !is_stopword(nt.front())) ph.object = to_lower(next.core);
    }
    return ph;
  }
  return std::nullopt;
}

// -------------------------------------------------------------------- judge

std::string first_sentence(std::string_view text) {
  auto s = split_sentences(text);
  return s.empty() ? std::string{} : s.front();
}

double coverage(const std::set<std::string>& of, const std::set<std::string>& in) {
  if (of.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& t : of) hit += in.count(t);
  return static_cast<double>(hit) / static_cast<double>(of.size());
}

// ------------------------------------------------------------ actionability

const std::set<std::string> kVague{
    "helpful", "unhelpful", "wrong",  "bad",     "answer", "answers", "useless",  "incorrect", "good",
    "great",   "thanks",    "thank",  "terrible", "poor",  "response", "correct", "right",     "ok",
    "okay",    "awful",     "confusing", "hate",  "like",  "love",    "nope",     "work",      "works",
    "worked",  "working",   "bot",    "help",    "really", "even",    "totally",  "completely", "super",
    "answered", "question", "sure",   "fine",    "idea",   "clue",    "nothing",  "useful",    "informative",
    "pointless", "waste",   "time",   "try",     "tried",  "again",   "still",    "info",      "information"};
const std::set<std::string> kModal{"is",  "are",  "was",    "were",  "can",  "cannot", "must", "requires",
                                   "require", "needs", "need", "should", "will", "does", "has",  "have"};
const std::set<std::string> kFactualMarkers{"is",  "are", "was", "were", "can", "cannot", "must", "only",
                                            "requires", "require", "required", "restricted", "limited",
                                            "allowed", "needs", "need", "should", "will", "does", "has", "have"};
const std::set<std::string> kFillers{"actually", "no", "nope", "wrong", "fyi", "note", "correction", "incorrect",
                                     "but", "well", "so", "also", "and"};

std::vector<std::string> factual_clauses(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& sentence : split_sentences(text)) {
    std::size_t start = 0;
    while (start <= sentence.size()) {
      auto semi = sentence.find(';', start);
      if (semi == std::string::npos) semi = sentence.size();
      auto clause = trim(std::string_view(sentence).substr(start, semi - start));
      start = semi + 1;
      auto words = split_words(clause);
      std::size_t lead = 0;
      while (lead < words.size() && kFillers.count(to_lower(split_piece(words[lead]).core))) ++lead;
      words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(lead));
      clause = strip_terminal(join(words, " "));
      if (clause.empty()) continue;
      auto toks = tokenize(clause);
      bool marker = false;
      std::size_t content = 0;
      for (const auto& t : toks) {
        marker = marker || kFactualMarkers.count(t);
        if (!is_stopword(t) && !kVague.count(t)) ++content;
      }
      if (marker && content >= 2) out.push_back(capitalize(clause) + ".");
    }
  }
  return out;
}

std::string title_from_clause(const std::string& clause) {
  auto words = split_words(strip_terminal(clause));
  bool restricted = false;
  for (const auto& t : tokenize(clause))
    restricted = restricted || t == "restricted" || t == "only" || t == "limited" || t == "restriction";

  std::string pp;
  std::size_t i = 0;
  if (!words.empty() && kPPStarts.count(to_lower(split_piece(words[0]).core))) {
    std::size_t end = 0;
    for (std::size_t k = 1; k < words.size() && k < 5; ++k) {
      bool digit = std::any_of(words[k].begin(), words[k].end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      if (!split_piece(words[k]).trail.empty() || digit) {
        end = k;
        break;
      }
    }
    if (end == 0) end = std::min<std::size_t>(2, words.size() - 1);
    std::vector<std::string> ppw(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(end + 1));
    pp = strip_terminal(join(ppw, " "));
    pp = lower_first(pp);
    i = end + 1;
  }
  std::vector<std::string> subject;
  for (; i < words.size(); ++i) {
    auto lc = to_lower(split_piece(words[i]).core);
    if (kModal.count(lc) || lc.find("n't") != std::string::npos) break;
    if (subject.empty() && lc == "only") continue;
    subject.push_back(split_piece(words[i]).core);
  }
  if (subject.size() > 8) subject.resize(8);
  std::string title;
  if (subject.empty()) {
    auto ct = content_tokens(clause);
    if (ct.size() > 5) ct.resize(5);
    title = join(ct, " ");
  } else {
    title = join(subject, " ");
  }
  if (restricted) title += " restriction";
  if (!pp.empty()) title += " " + pp;
  return capitalize(trim(title));
}

}  // namespace

std::vector<std::string> sim_paraphrase(std::string_view q0, std::size_t n, std::uint64_t seed,
                                        const std::vector<std::string>& vocabulary, const Lexicon& lexicon) {
  if (trim(q0).empty()) throw InputError("paraphrase source is empty");
  std::set<std::string> vocab;
  for (const auto& v : vocabulary)
    for (const auto& t : tokenize(v)) vocab.insert(t);
  auto q_content = content_token_set(q0);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string fallback;
    std::string chosen;
    for (std::uint64_t attempt = 0; attempt < 24 && chosen.empty(); ++attempt) {
      double p = attempt < 12 ? 0.67 : 0.33;
      auto cand = paraphrase_once(q0, mix_seed(mix_seed(seed, "paraphrase"), i * 64 + attempt), p, lexicon, vocab);
      if (cand.empty() || iequals(trim(cand), trim(q0))) continue;
      if (!q_content.empty() && !shares_any(content_token_set(cand), q_content)) continue;
      if (fallback.empty()) fallback = cand;
      if (!contains_ci(out, cand)) chosen = cand;
    }
    if (chosen.empty()) chosen = fallback.empty() ? "Regarding " + lower_first(trim(q0)) : fallback;
    out.push_back(chosen);
  }
  return out;
}

std::vector<std::string> sim_anchors(const Article& nugget, const std::optional<std::string>& q0, std::size_t count,
                                     std::uint64_t seed, bool lead_with_paraphrase, const Lexicon& lexicon) {
  if (count == 0) return {};
  if (lead_with_paraphrase && (!q0 || trim(*q0).empty()))
    throw InputError("a trigger query is required to lead anchors with its paraphrase");
  std::vector<std::string> out;
  if (lead_with_paraphrase) out.push_back(restate_query(*q0, nugget, seed, lexicon));
  auto rest = template_anchors(nugget, q0, count - out.size(), seed, lexicon);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::set<std::string> reflection_context_tokens(const ReflectionInput& in) {
  std::set<std::string> ctx;
  auto add = [&](std::string_view s) {
    for (const auto& t : tokenize(s)) ctx.insert(t);
  };
  add(in.title);
  add(in.body);
  for (const auto& a : in.anchors) add(a);
  add(in.q0);
  for (const auto& p : in.probes) add(p);
  add(in.feedback);
  for (const auto& f : in.failed) {
    add(f.query);
    for (const auto& c : f.competitors) {
      add(c.doc.title);
      add(c.doc.body);
      for (const auto& t : c.distinguishing_terms) add(t);
    }
  }
  return ctx;
}

ReflectionOutput sim_reflect(const ReflectionInput& in) {
  ReflectionOutput out{in.title, in.body, in.anchors, {}};
  if (out.anchors.size() > kMaxAnchors) out.anchors.resize(kMaxAnchors);
  if (in.failed.empty()) {
    out.summary = "no failed probes; unchanged";
    return out;
  }

  std::set<std::string> nugget_tokens = token_set(in.title + " " + in.body + " " + join(in.anchors, " "));
  const Competitor* comp = nullptr;
  for (const auto& f : in.failed)
    if (!comp && !f.competitors.empty()) comp = &f.competitors.front();
  std::set<std::string> comp_tokens;
  std::string comp_title;
  if (comp) {
    comp_tokens = token_set(comp->doc.title + " " + comp->doc.body);
    comp_title = strip_terminal(comp->doc.title);
  }

  std::set<std::string> probe_tokens;
  std::vector<std::string> missing;
  for (const auto& f : in.failed)
    for (const auto& t : content_tokens(f.query)) {
      probe_tokens.insert(t);
      if (!nugget_tokens.count(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) missing.push_back(t);
    }
  if (missing.size() > 2) missing.resize(2);

  std::vector<std::string> notes;
  auto phrase = disambiguating_phrase(in.body, probe_tokens, comp_tokens);
  std::string title = strip_terminal(in.title);
  if (phrase && !icontains(title, phrase->text)) {
    title += ": " + phrase->text;
    notes.push_back("title +'" + phrase->text + "'");
  }
  if (!missing.empty()) {
    title += " (" + join(missing, " ") + ")";
    notes.push_back("title +(" + join(missing, " ") + ")");
  }
  out.title = title;

  // Anchors: every failed probe must end up covered; index 0 and anchors
  // covering a failed probe are never evicted.
  std::vector<bool> pinned(out.anchors.size(), false);
  if (!pinned.empty()) pinned[0] = true;
  auto pin_covering = [&] {
    for (std::size_t k = 0; k < out.anchors.size(); ++k)
      for (const auto& f : in.failed)
        if (covers(out.anchors[k], f.query)) pinned[k] = true;
  };
  pin_covering();
  std::size_t added = 0, replaced = 0;
  auto add_anchor = [&](const std::string& text, bool pin) {
    if (text.empty() || contains_ci(out.anchors, text) || iequals(trim(text), trim(in.q0))) return;
    if (out.anchors.size() < kMaxAnchors) {
      out.anchors.push_back(text);
      pinned.push_back(pin);
      ++added;
      return;
    }
    std::optional<std::size_t> victim;
    double worst = 2.0;
    for (std::size_t k = 1; k < out.anchors.size(); ++k) {
      if (pinned[k]) continue;
      double best = 0.0;
      for (const auto& p : in.probes) best = std::max(best, token_jaccard(out.anchors[k], p));
      if (best <= worst) {
        worst = best;
        victim = k;
      }
    }
    if (!victim) return;
    out.anchors[*victim] = text;
    pinned[*victim] = pin;
    ++replaced;
  };
  for (const auto& f : in.failed) {
    bool covered = false;
    for (const auto& a : out.anchors) covered = covered || covers(a, f.query);
    if (!covered) add_anchor(probe_anchor(f.query), true);
  }
  if (comp && phrase && !comp_title.empty()) {
    std::string contrast = phrase->text + (phrase->object.empty() ? "" : " " + phrase->object) + " vs " + to_lower(comp_title);
    add_anchor(capitalize(contrast), false);
  }
  if (added || replaced)
    notes.push_back("anchors +" + std::to_string(added) + (replaced ? " (" + std::to_string(replaced) + " replaced)" : ""));

  if (comp && !comp_title.empty() && count_sentences(in.body) <= 2 && !icontains(in.body, "This is not the same as")) {
    out.body = trim(in.body);
    if (!out.body.empty() && out.body.back() != '.' && out.body.back() != '!' && out.body.back() != '?') out.body += '.';
    out.body += " This is not the same as " + lower_first(comp_title) + ".";
    notes.push_back("body +scope sentence");
  }
  out.summary = notes.empty() ? "no applicable edits" : join(notes, "; ");
  return out;
}

GeneratedAnswer sim_answer(std::string_view query, const std::vector<ContextDoc>& docs) {
  GeneratedAnswer ans;
  auto q = content_token_set(query);
  std::vector<std::string> quotes;
  for (const auto& d : docs) {
    auto doc_tokens = content_token_set(d.title + " " + d.body + " " + join(d.anchors, " "));
    if (!shares_any(q, doc_tokens)) continue;
    auto sentences = split_sentences(d.body);
    if (sentences.empty()) continue;
    std::size_t best = 0, best_hit = 0;
    for (std::size_t k = 0; k < sentences.size(); ++k) {
      std::size_t hit = 0;
      for (const auto& t : content_token_set(sentences[k])) hit += q.count(t);
      if (hit > best_hit) {
        best_hit = hit;
        best = k;
      }
    }
    if (std::find(quotes.begin(), quotes.end(), sentences[best]) == quotes.end()) quotes.push_back(sentences[best]);
    ans.citations.push_back(d.doc_id);
  }
  ans.answer = quotes.empty() ? std::string(kRefusal) : join(quotes, " ");
  return ans;
}

ActionabilityResult sim_classify(const FeedbackEvent& event) {
  auto content = content_tokens(event.free_text);
  if (content.size() < 3) return {Usefulness::not_useful, false, "free text too short to act on", std::nullopt};
  bool specific = false;
  for (const auto& t : content) specific = specific || !kVague.count(t);
  if (!specific) return {Usefulness::not_useful, false, "only generic sentiment", std::nullopt};
  auto article = sim_extract(event);
  if (!article) return {Usefulness::useful, false, "specific but states no reusable fact", std::nullopt};
  return {Usefulness::useful, true, "states a reusable fact", article};
}

std::optional<Article> sim_extract(const FeedbackEvent& event) {
  auto clauses = factual_clauses(event.free_text);
  if (clauses.empty()) return std::nullopt;
  if (clauses.size() > 3) clauses.resize(3);
  return Article{title_from_clause(clauses.front()), join(clauses, " ")};
}

JudgeLabels sim_judge(const JudgeInput& in) {
  JudgeLabels out;
  bool present = false;
  for (const auto& d : in.context) present = present || d.doc_id == in.nugget_id;
  bool refused = trim(in.answer).empty() || trim(in.answer) == kRefusal;

  std::string wrong = strip_terminal(in.wrong_claim.empty() ? first_sentence(in.original_answer) : in.wrong_claim);
  bool contradicts = !wrong.empty() && !refused && icontains(in.answer, wrong);
  auto answer_tokens = content_token_set(in.answer);

  if (!present) {
    out.compliance = Compliance::misses;
    out.faithfulness = Faithfulness::n_a;
  } else if (contradicts) {
    out.compliance = Compliance::contradicts;
    out.faithfulness = Faithfulness::unfaithful;
  } else {
    double cov = coverage(content_token_set(in.nugget.body), answer_tokens);
    if (cov >= 0.7) {
      out.compliance = Compliance::addresses;
      out.faithfulness = Faithfulness::faithful;
    } else if (cov >= 0.3) {
      out.compliance = Compliance::partial;
      out.faithfulness = Faithfulness::partial;
    } else {
      out.compliance = Compliance::misses;
      out.faithfulness = Faithfulness::unfaithful;
    }
  }

  std::set<std::string> keep;
  for (const auto& s : split_sentences(in.original_answer)) {
    if (!wrong.empty() && icontains(s, wrong)) continue;
    for (const auto& t : content_tokens(s)) keep.insert(t);
  }
  double retained = coverage(keep, answer_tokens);
  out.regression = retained >= 0.7 ? Regression::preserved
                   : retained >= 0.3 ? Regression::minor_regression
                                     : Regression::major_regression;

  out.groundedness = Groundedness::grounded;
  if (!refused) {
    for (const auto& s : split_sentences(in.answer)) {
      bool contained = false;
      double best = 0.0;
      auto st = token_set(s);
      for (const auto& d : in.context) {
        auto text = d.title + " " + d.body;
        if (icontains(text, strip_terminal(s))) contained = true;
        best = std::max(best, coverage(st, token_set(text)));
      }
      if (contained) continue;
      if (best < 0.3) {
        out.groundedness = Groundedness::hallucinated;
        break;
      }
      out.groundedness = Groundedness::minor_issues;
    }
  }
  return out;
}

}  // namespace nf
