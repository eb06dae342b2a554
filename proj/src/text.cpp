#include "nugget_forge/text.h"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace nf {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "about",   "above",   "after",   "again",    "against", "all",     "am",      "an",
      "and",     "any",     "are",     "aren",     "as",      "at",      "be",      "because",
      "been",    "before",  "being",   "below",    "between", "both",    "but",     "by",
      "can",     "cannot",  "could",   "couldn",   "did",     "didn",    "do",      "does",
      "doesn",   "doing",   "don",     "down",     "during",  "each",    "few",     "for",
      "from",    "further", "had",     "hadn",     "has",     "hasn",    "have",    "haven",
      "having",  "he",      "her",     "here",     "hers",    "herself", "him",     "himself",
      "his",     "how",     "if",      "in",       "into",    "is",      "isn",     "it",
      "its",     "itself",  "just",    "ll",       "me",      "might",   "mightn",  "more",
      "most",    "must",    "mustn",   "my",       "myself",  "no",      "nor",     "not",
      "now",     "of",      "off",     "on",       "once",    "only",    "or",      "other",
      "our",     "ours",    "ourselves", "out",    "over",    "own",     "re",      "same",
      "shan",    "she",     "should",  "shouldn",  "so",      "some",    "such",    "than",
      "that",    "the",     "their",   "theirs",   "them",    "themselves", "then", "there",
      "these",   "they",    "this",    "those",    "through", "to",      "too",     "under",
      "until",   "up",      "ve",      "very",     "was",     "wasn",    "we",      "were",
      "weren",   "what",    "when",    "where",    "which",   "while",   "who",     "whom",
      "why",     "will",    "with",    "won",      "would",   "wouldn",  "you",     "your",
      "yours",   "yourself", "yourselves", "vs",   "versus",  "via",     "also",    "please",
      "get",     "way",     "use",
  };
  return words;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (is_alnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool is_stopword(std::string_view token) { return stopwords().contains(token); }

std::vector<std::string> content_tokens(std::string_view text) {
  auto toks = tokenize(text);
  std::erase_if(toks, [](const std::string& t) { return is_stopword(t); });
  return toks;
}

std::set<std::string> token_set(std::string_view text) {
  auto toks = tokenize(text);
  return {toks.begin(), toks.end()};
}

std::set<std::string> content_token_set(std::string_view text) {
  auto toks = content_tokens(text);
  return {toks.begin(), toks.end()};
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool boundary = i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (!boundary) continue;
    auto s = trim(text.substr(start, i + 1 - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = i + 1;
  }
  auto tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::size_t count_sentences(std::string_view text) { return split_sentences(text).size(); }

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double token_jaccard(std::string_view a, std::string_view b) { return jaccard(token_set(a), token_set(b)); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::string_view salt) { return mix_seed(a, fnv1a64(salt)); }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool iequals(std::string_view a, std::string_view b) { return to_lower(a) == to_lower(b); }

bool icontains(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace nf
