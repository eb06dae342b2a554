#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nf {

/// Symmetric synonym groups keyed by lowercase phrase (one to three words).
class Lexicon {
 public:
  /// The versioned asset compiled into the library.
  static const Lexicon& bundled();
  static Lexicon parse(std::string_view text);

  /// Other members of every group the phrase belongs to, or nullptr.
  const std::vector<std::string>* alternatives(std::string_view phrase) const;
  std::size_t max_phrase_words() const { return max_words_; }
  std::size_t group_count() const { return groups_; }
  std::size_t pair_count() const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> alts_;
  std::size_t max_words_ = 1;
  std::size_t groups_ = 0;
};

}  // namespace nf
