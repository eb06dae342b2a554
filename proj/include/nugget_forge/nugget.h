#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nugget_forge/types.h"

namespace nf {

/// Invariant violations are data: an empty list means the value is valid.
struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Title nonempty, body of one to three sentences.
ValidationResult validate_nugget(const Nugget& n);

/// Nugget shape plus the variant/anchor-count mapping, the iteration budget
/// and, when q0 is given, the no-verbatim-trigger rule for anchors.
ValidationResult validate_indexable(const IndexableNugget& c, std::optional<std::string_view> q0 = std::nullopt);

std::string nugget_doc_id(const Nugget& n);

/// Pure mapping to the retrievable document. Throws InputError when the
/// candidate fails validate_indexable.
Document render_indexable(const IndexableNugget& c);

}  // namespace nf
