#include "nugget_forge/lexicon.h"

#include <algorithm>

#include "nugget_forge/errors.h"
#include "nugget_forge/text.h"

namespace nf {

namespace detail {
extern const std::string_view kLexiconText;
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lex = parse(detail::kLexiconText);
  return lex;
}

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> members;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto bar = line.find('|', start);
      if (bar == std::string::npos) bar = line.size();
      auto m = to_lower(trim(std::string_view(line).substr(start, bar - start)));
      if (!m.empty()) members.push_back(m);
      start = bar + 1;
    }
    if (members.size() < 2) throw InputError("lexicon group needs at least two members: " + line);
    ++lex.groups_;
    for (const auto& m : members) {
      lex.max_words_ = std::max(lex.max_words_, split_words(m).size());
      auto& alts = lex.alts_[m];
      for (const auto& other : members)
        if (other != m && std::find(alts.begin(), alts.end(), other) == alts.end()) alts.push_back(other);
    }
  }
  return lex;
}

const std::vector<std::string>* Lexicon::alternatives(std::string_view phrase) const {
  auto it = alts_.find(phrase);
  return it == alts_.end() ? nullptr : &it->second;
}

std::size_t Lexicon::pair_count() const {
  std::size_t n = 0;
  for (const auto& [_, alts] : alts_) n += alts.size();
  return n / 2;
}

}  // namespace nf
