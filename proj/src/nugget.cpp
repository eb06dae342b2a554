#include "nugget_forge/nugget.h"

#include "nugget_forge/errors.h"
#include "nugget_forge/text.h"

namespace nf {

ValidationResult validate_nugget(const Nugget& n) {
  ValidationResult r;
  if (trim(n.title).empty()) r.violations.push_back("empty title");
  auto sentences = count_sentences(n.body);
  if (sentences == 0) {
    r.violations.push_back("empty body");
  } else if (sentences > 3) {
    r.violations.push_back("body has " + std::to_string(sentences) + " sentences (allowed 1-3)");
  }
  return r;
}

namespace {

bool anchor_count_ok(Variant v, std::size_t n) {
  switch (v) {
    case Variant::A: return n == 0;
    case Variant::B: return n == 1;
    case Variant::C:
    case Variant::D: return n == 5;
    case Variant::E: return n >= 1 && n <= kMaxAnchors;
  }
  return false;
}

}  // namespace

ValidationResult validate_indexable(const IndexableNugget& c, std::optional<std::string_view> q0) {
  auto r = validate_nugget(c.nugget);
  if (!anchor_count_ok(c.variant, c.anchors.size()))
    r.violations.push_back("variant " + to_string(c.variant) + " cannot carry " + std::to_string(c.anchors.size()) +
                           " anchors");
  if (c.iterations_used < 0 || c.iterations_used > kMaxIterations)
    r.violations.push_back("iterations_used out of range: " + std::to_string(c.iterations_used));
  for (const auto& a : c.anchors) {
    if (trim(a).empty()) r.violations.push_back("empty anchor");
    if (q0 && iequals(trim(a), trim(*q0))) r.violations.push_back("anchor copies the trigger query verbatim");
  }
  return r;
}

std::string nugget_doc_id(const Nugget& n) { return "nugget:" + n.nugget_id; }

Document render_indexable(const IndexableNugget& c) {
  auto v = validate_indexable(c);
  if (!v.ok()) throw InputError("cannot render nugget " + c.nugget.nugget_id + ": " + join(v.violations, "; "));
  Document d;
  d.doc_id = nugget_doc_id(c.nugget);
  d.title = c.nugget.title;
  d.body = c.nugget.body;
  d.source = DocSource::nugget;
  d.anchors = c.anchors;
  return d;
}

}  // namespace nf
