#pragma once
// Text utilities shared by the index, the simulator and the evaluators.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace nf {

/// Lowercases, splits on every non-alphanumeric byte and drops tokens shorter
/// than two characters. No stemming, no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

bool is_stopword(std::string_view token);

/// tokenize() minus stopwords, order and duplicates preserved.
std::vector<std::string> content_tokens(std::string_view text);
std::set<std::string> token_set(std::string_view text);
std::set<std::string> content_token_set(std::string_view text);

/// Splits on '.', '!' or '?' when followed by whitespace or end of text.
/// "v8.2" stays one sentence.
std::vector<std::string> split_sentences(std::string_view text);
std::size_t count_sentences(std::string_view text);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);
double token_jaccard(std::string_view a, std::string_view b);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::string_view salt);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split_words(std::string_view text);
std::string capitalize(std::string s);

/// Seeded generator. The engine is fully specified by the standard; bounded
/// draws avoid <random> distributions, whose output differs between
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nf
