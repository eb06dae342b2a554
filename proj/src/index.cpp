#include "nugget_forge/index.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "nugget_forge/errors.h"
#include "nugget_forge/store.h"
#include "nugget_forge/text.h"

namespace nf {

DenseVector HashingEmbedder::embed(std::string_view text) const {
  DenseVector v(dim_, 0.0);
  for (const auto& tok : tokenize(text)) {
    std::uint64_t h = fnv1a64(tok);
    double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % dim_] += sign;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::shared_ptr<const Embedder> default_embedder() {
  static const auto instance = std::make_shared<const HashingEmbedder>(256);
  return instance;
}

DenseVector embed(std::string_view text) { return default_embedder()->embed(text); }

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

double bm25_idf(std::size_t n_docs, std::size_t df) {
  double n = static_cast<double>(n_docs), d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

CorpusIndex::CorpusIndex(std::shared_ptr<const Embedder> embedder) : embedder_(std::move(embedder)) {
  if (!embedder_) throw InputError("CorpusIndex needs an embedder");
}

const Document* CorpusIndex::find(const std::string& doc_id) const {
  auto it = documents_.find(doc_id);
  return it == documents_.end() ? nullptr : &it->second;
}

const std::vector<Posting>* CorpusIndex::postings(const std::string& token) const {
  auto it = inverted_.find(token);
  return it == inverted_.end() ? nullptr : &it->second;
}

std::size_t CorpusIndex::df(const std::string& token) const {
  auto p = postings(token);
  return p ? p->size() : 0;
}

std::uint32_t CorpusIndex::doc_length(const std::string& doc_id) const {
  auto it = slot_of_.find(doc_id);
  if (it == slot_of_.end()) throw NotFoundError("unknown document: " + doc_id);
  return slots_[it->second].length;
}

double CorpusIndex::avg_doc_length() const {
  return documents_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(documents_.size());
}

const DenseVector& CorpusIndex::dense_vector(const std::string& doc_id) const {
  auto it = slot_of_.find(doc_id);
  if (it == slot_of_.end()) throw NotFoundError("unknown document: " + doc_id);
  return slots_[it->second].vec;
}

double CorpusIndex::idf(const std::string& token) const {
  auto it = idf_cache_.find(token);
  return it == idf_cache_.end() ? bm25_idf(size(), 0) : it->second;
}

void CorpusIndex::insert_new(const Document& d) {
  const std::string text = indexed_text(d);
  const auto tokens = tokenize(text);
  std::map<std::string, std::uint32_t> tf;
  for (const auto& t : tokens) ++tf[t];

  std::uint32_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
  } else {
    slot = static_cast<std::uint32_t>(slots_.size());
    slots_.emplace_back();
  }
  auto& s = slots_[slot];
  s.doc_id = d.doc_id;
  s.length = static_cast<std::uint32_t>(tokens.size());
  s.vec = embedder_->embed(text);
  s.live = true;
  slot_of_[d.doc_id] = slot;
  documents_[d.doc_id] = d;
  total_length_ += s.length;

  for (const auto& [term, count] : tf) {
    auto& list = inverted_[term];
    auto pos = std::lower_bound(list.begin(), list.end(), d.doc_id,
                                [](const Posting& p, const std::string& id) { return p.doc_id < id; });
    list.insert(pos, Posting{d.doc_id, count, slot});
  }
}

void CorpusIndex::erase_existing(const std::string& doc_id) {
  auto slot_it = slot_of_.find(doc_id);
  const std::uint32_t slot = slot_it->second;
  const Document& d = documents_.at(doc_id);
  for (const auto& term : token_set(indexed_text(d))) {
    auto it = inverted_.find(term);
    if (it == inverted_.end()) continue;
    auto& list = it->second;
    auto pos = std::lower_bound(list.begin(), list.end(), doc_id,
                                [](const Posting& p, const std::string& id) { return p.doc_id < id; });
    if (pos != list.end() && pos->doc_id == doc_id) list.erase(pos);
    if (list.empty()) inverted_.erase(it);
  }
  total_length_ -= slots_[slot].length;
  slots_[slot] = Slot{};
  if (slot + 1 == slots_.size()) {
    slots_.pop_back();
  } else {
    free_slots_.push_back(slot);
  }
  slot_of_.erase(slot_it);
  documents_.erase(doc_id);
}

void CorpusIndex::recompute_idf() {
  idf_cache_.clear();
  const std::size_t n = documents_.size();
  for (const auto& [term, list] : inverted_) idf_cache_.emplace_hint(idf_cache_.end(), term, bm25_idf(n, list.size()));
}

void CorpusIndex::upsert(const Document& d) {
  if (d.doc_id.empty()) throw InputError("document with empty doc_id");
  if (auto existing = find(d.doc_id)) {
    if (*existing == d) return;
    erase_existing(d.doc_id);
  }
  insert_new(d);
  recompute_idf();
}

void CorpusIndex::upsert_many(const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    if (d.doc_id.empty()) throw InputError("document with empty doc_id");
    if (auto existing = find(d.doc_id)) {
      if (*existing == d) continue;
      erase_existing(d.doc_id);
    }
    insert_new(d);
  }
  recompute_idf();
}

void CorpusIndex::remove(const std::string& doc_id) {
  if (!contains(doc_id)) throw NotFoundError("cannot remove unknown document: " + doc_id);
  erase_existing(doc_id);
  recompute_idf();
}

namespace {

struct StateHasher {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    auto c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  void str(std::string_view s) {
    std::uint64_t n = s.size();
    bytes(&n, sizeof n);
    bytes(s.data(), s.size());
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
};

}  // namespace

std::uint64_t CorpusIndex::state_hash() const {
  StateHasher hs;
  for (const auto& [id, d] : documents_) {
    hs.str(json(d).dump());
    hs.pod(doc_length(id));
    for (double x : dense_vector(id)) hs.pod(x);
  }
  for (const auto& [term, list] : inverted_) {
    hs.str(term);
    for (const auto& p : list) {
      hs.str(p.doc_id);
      hs.pod(p.tf);
    }
  }
  for (const auto& [term, v] : idf_cache_) {
    hs.str(term);
    hs.pod(v);
  }
  hs.pod(total_length_);
  return hs.h;
}

bool CorpusIndex::operator==(const CorpusIndex& o) const {
  if (documents_ != o.documents_ || inverted_ != o.inverted_ || idf_cache_ != o.idf_cache_ ||
      total_length_ != o.total_length_ || avg_doc_length() != o.avg_doc_length())
    return false;
  for (const auto& [id, _] : documents_) {
    if (doc_length(id) != o.doc_length(id)) return false;
    if (dense_vector(id) != o.dense_vector(id)) return false;
  }
  return true;
}

double IndexView::avg_doc_length() const {
  std::size_t n = size();
  if (n == 0) return 0.0;
  std::uint64_t total = base_->total_length() + (overlay_ ? overlay_->total_length() : 0);
  return static_cast<double>(total) / static_cast<double>(n);
}

std::size_t IndexView::df(const std::string& token) const {
  return base_->df(token) + (overlay_ ? overlay_->df(token) : 0);
}

const Document* IndexView::find(const std::string& doc_id) const {
  if (overlay_)
    if (auto d = overlay_->find(doc_id)) return d;
  return base_->find(doc_id);
}

const DenseVector* IndexView::dense_vector(const std::string& doc_id) const {
  if (overlay_ && overlay_->contains(doc_id)) return &overlay_->dense_vector(doc_id);
  if (base_->contains(doc_id)) return &base_->dense_vector(doc_id);
  return nullptr;
}

ScopedInsertion::ScopedInsertion(const CorpusIndex& base, const std::vector<Document>& docs)
    : base_(&base), overlay_(std::make_unique<CorpusIndex>(base.embedder_ptr())) {
  for (const auto& d : docs) {
    if (base.contains(d.doc_id))
      throw InputError("scoped insertion would shadow base document " + d.doc_id);
    if (overlay_->contains(d.doc_id)) throw InputError("duplicate candidate document " + d.doc_id);
  }
  overlay_->upsert_many(docs);
}

ScopedInsertion::ScopedInsertion(const CorpusIndex& base, const std::vector<Document>& docs,
                                 std::shared_lock<std::shared_mutex> lock)
    : ScopedInsertion(base, docs) {
  lock_ = std::move(lock);
}

ScopedInsertion SharedCorpus::insert_scoped(const std::vector<Document>& docs) const {
  std::shared_lock lock(mu_);
  return ScopedInsertion(index_, docs, std::move(lock));
}

void save_index(const CorpusIndex& index, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Document> docs;
  docs.reserve(index.size());
  for (const auto& [_, d] : index.documents()) docs.push_back(d);
  write_jsonl(dir / "documents.jsonl", docs);
}

CorpusIndex load_index(const std::filesystem::path& dir_or_file, std::shared_ptr<const Embedder> embedder) {
  auto file = std::filesystem::is_directory(dir_or_file) ? dir_or_file / "documents.jsonl" : dir_or_file;
  auto docs = read_jsonl<Document>(file);
  std::set<std::string> seen;
  for (const auto& d : docs)
    if (!seen.insert(d.doc_id).second) throw InputError("duplicate doc_id in corpus: " + d.doc_id);
  CorpusIndex index(std::move(embedder));
  index.upsert_many(docs);
  return index;
}

}  // namespace nf
