#pragma once
// Corpus index: documents, BM25 postings and dense vectors.
//
// CorpusIndex is the mutable store. IndexView is the read-only surface every
// search goes through; it can stack a small overlay index on top of a base
// index, which is how scoped insertion works: candidates live in the overlay,
// corpus statistics (N, df, average length) are computed over base+overlay
// exactly as if the candidates had been inserted, and the base is never
// touched.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nugget_forge/types.h"

namespace nf {

using DenseVector = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  /// Unit vector, or all zeros for text without tokens.
  virtual DenseVector embed(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Signed feature hashing over tokens: FNV-1a 64 of each token picks the
/// coordinate (h mod dim) and the sign (bit 63 set means -1).
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  DenseVector embed(std::string_view text) const override;
  std::string name() const override { return "hashing-" + std::to_string(dim_); }

 private:
  std::size_t dim_;
};

std::shared_ptr<const Embedder> default_embedder();

/// Default embedder shortcut.
DenseVector embed(std::string_view text);

/// Dot product of two unit (or zero) vectors; 0 when either is zero.
double cosine(std::span<const double> a, std::span<const double> b);

struct Posting {
  std::string doc_id;
  std::uint32_t tf = 0;
  std::uint32_t slot = 0;  // internal position, not part of the logical state
  bool operator==(const Posting& o) const { return doc_id == o.doc_id && tf == o.tf; }
};

class CorpusIndex {
 public:
  explicit CorpusIndex(std::shared_ptr<const Embedder> embedder = default_embedder());

  /// Inserts or replaces. Upserting an identical document is a no-op.
  void upsert(const Document& d);
  void upsert_many(const std::vector<Document>& docs);
  /// Throws NotFoundError for unknown ids.
  void remove(const std::string& doc_id);

  bool contains(const std::string& doc_id) const { return documents_.contains(doc_id); }
  const Document* find(const std::string& doc_id) const;
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  const std::map<std::string, Document>& documents() const { return documents_; }
  const std::vector<Posting>* postings(const std::string& token) const;
  std::size_t df(const std::string& token) const;
  std::uint32_t doc_length(const std::string& doc_id) const;
  std::uint64_t total_length() const { return total_length_; }
  double avg_doc_length() const;
  const DenseVector& dense_vector(const std::string& doc_id) const;
  const std::map<std::string, std::vector<Posting>>& inverted_index() const { return inverted_; }
  const std::map<std::string, double>& idf_cache() const { return idf_cache_; }
  double idf(const std::string& token) const;
  const Embedder& embedder() const { return *embedder_; }
  std::shared_ptr<const Embedder> embedder_ptr() const { return embedder_; }

  /// Hash over the logical state (documents, postings, lengths, vectors, idf).
  std::uint64_t state_hash() const;

  /// Field-by-field equality of the logical state.
  bool operator==(const CorpusIndex& o) const;

  // Slot-level access for the search kernels.
  struct Slot {
    std::string doc_id;
    std::uint32_t length = 0;
    DenseVector vec;
    bool live = false;
  };
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  void insert_new(const Document& d);
  void erase_existing(const std::string& doc_id);
  void recompute_idf();

  std::shared_ptr<const Embedder> embedder_;
  std::map<std::string, Document> documents_;
  std::map<std::string, std::vector<Posting>> inverted_;
  std::map<std::string, std::uint32_t> slot_of_;
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> free_slots_;
  std::uint64_t total_length_ = 0;
  std::map<std::string, double> idf_cache_;
};

/// BM25 idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(std::size_t n_docs, std::size_t df);

/// Read-only view over a base index with an optional overlay.
class IndexView {
 public:
  IndexView(const CorpusIndex& base) : base_(&base) {}  // NOLINT(google-explicit-constructor)
  IndexView(const CorpusIndex& base, const CorpusIndex* overlay) : base_(&base), overlay_(overlay) {}

  std::size_t size() const { return base_->size() + (overlay_ ? overlay_->size() : 0); }
  bool empty() const { return size() == 0; }
  double avg_doc_length() const;
  std::size_t df(const std::string& token) const;
  double idf(const std::string& token) const { return bm25_idf(size(), df(token)); }
  const Document* find(const std::string& doc_id) const;
  bool contains(const std::string& doc_id) const { return find(doc_id) != nullptr; }
  const DenseVector* dense_vector(const std::string& doc_id) const;
  const Embedder& embedder() const { return base_->embedder(); }

  /// Segment 0 is the base, segment 1 the overlay (if any).
  std::size_t segment_count() const { return overlay_ ? 2 : 1; }
  const CorpusIndex& segment(std::size_t i) const { return i == 0 ? *base_ : *overlay_; }

 private:
  const CorpusIndex* base_;
  const CorpusIndex* overlay_ = nullptr;
};

/// Candidate documents held in an overlay for the lifetime of the object.
/// Nothing is written to the base; when the object goes away the candidates
/// are gone. Optionally holds a shared lock on the base.
class ScopedInsertion {
 public:
  ScopedInsertion(const CorpusIndex& base, const std::vector<Document>& docs);
  ScopedInsertion(const CorpusIndex& base, const std::vector<Document>& docs, std::shared_lock<std::shared_mutex> lock);
  ScopedInsertion(ScopedInsertion&&) noexcept = default;
  ScopedInsertion& operator=(ScopedInsertion&&) noexcept = default;

  IndexView view() const { return IndexView(*base_, overlay_.get()); }
  const CorpusIndex& overlay() const { return *overlay_; }

 private:
  std::shared_lock<std::shared_mutex> lock_;
  const CorpusIndex* base_;
  std::unique_ptr<CorpusIndex> overlay_;
};

/// Many concurrent readers or one exclusive writer.
class SharedCorpus {
 public:
  explicit SharedCorpus(CorpusIndex index) : index_(std::move(index)) {}

  template <typename F>
  decltype(auto) read(F&& f) const {
    std::shared_lock lock(mu_);
    return std::forward<F>(f)(static_cast<const CorpusIndex&>(index_));
  }

  template <typename F>
  decltype(auto) write(F&& f) {
    std::unique_lock lock(mu_);
    return std::forward<F>(f)(index_);
  }

  /// Isolated session: the returned object keeps a read lock on the base
  /// and sees only its own candidates.
  ScopedInsertion insert_scoped(const std::vector<Document>& docs) const;

 private:
  mutable std::shared_mutex mu_;
  CorpusIndex index_;
};

/// documents.jsonl is the only canonical file; postings and vectors are
/// rebuilt on load.
void save_index(const CorpusIndex& index, const std::filesystem::path& dir);
CorpusIndex load_index(const std::filesystem::path& dir_or_file,
                       std::shared_ptr<const Embedder> embedder = default_embedder());

}  // namespace nf
