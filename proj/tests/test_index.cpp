// Corpus index: embedding, upsert/remove, persistence, scoped insertion.
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "fixtures.h"
#include "nugget_forge/errors.h"
#include "nugget_forge/retrieval.h"

using namespace nf;

namespace {

std::vector<double> reference_embedding(std::string_view text) {
  std::vector<double> v(256, 0.0);
  for (const auto& t : tokenize(text)) {
    std::uint64_t h = fnv1a64(t);
    v[h % 256] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0;
  for (double x : v) norm += x * x;
  if (norm > 0)
    for (double& x : v) x /= std::sqrt(norm);
  return v;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nf_test_index_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("embed matches a direct feature-hashing computation") {
  for (auto text : {"password reset role", "Reset SSO!", "a", "the the the owner", "v8.2 admin-panel"}) {
    auto got = embed(text);
    auto want = reference_embedding(text);
    REQUIRE(got.size() == 256);
    for (std::size_t i = 0; i < 256; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("embedding examples") {
  CHECK(cosine(embed("reset the password"), embed("reset the password")) == doctest::Approx(1.0));
  auto zero = embed("");
  CHECK(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));
  CHECK(cosine(zero, embed("anything")) == 0.0);
  CHECK(cosine(embed("password reset role"), embed("role reset password")) == doctest::Approx(1.0));
  auto v = embed("workspace owner role");
  double n = 0;
  for (double x : v) n += x * x;
  CHECK(n == doctest::Approx(1.0));
}

TEST_CASE("avg_doc_length is the mean of document lengths") {
  CorpusIndex idx;
  idx.upsert(fx::kb("a", "one two", "three four"));
  idx.upsert(fx::kb("b", "one two", "three four five six"));
  CHECK(idx.doc_length("a") == 4);
  CHECK(idx.doc_length("b") == 6);
  CHECK(idx.avg_doc_length() == doctest::Approx(5.0));
}

TEST_CASE("upsert is idempotent and remove is its inverse") {
  auto docs = fx::random_corpus(60, 3);
  CorpusIndex idx;
  idx.upsert_many(docs);
  const CorpusIndex before = idx;
  const auto h = idx.state_hash();

  auto extra = fx::kb("zz-new", "new doc", "w1 w2 w3 unique_token_qq");
  idx.upsert(extra);
  auto once = idx.state_hash();
  idx.upsert(extra);
  CHECK(idx.state_hash() == once);
  CHECK(idx.size() == before.size() + 1);

  idx.remove("zz-new");
  CHECK(idx == before);
  CHECK(idx.state_hash() == h);
  CHECK(idx.postings("unique_token_qq") == nullptr);
  CHECK_THROWS_AS(idx.remove("zz-new"), NotFoundError);
}

TEST_CASE("upsert replacing a document updates postings and lengths") {
  CorpusIndex idx;
  idx.upsert(fx::kb("a", "alpha", "beta"));
  idx.upsert(fx::kb("a", "gamma", "delta delta"));
  CHECK(idx.size() == 1);
  CHECK(idx.df("alpha") == 0);
  CHECK(idx.df("delta") == 1);
  CHECK(idx.postings("delta")->front().tf == 2);
  CHECK(idx.doc_length("a") == 3);
}

TEST_CASE("insert/remove symmetry property over random corpora and documents") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto docs = fx::random_corpus(30, seed);
    CorpusIndex idx;
    idx.upsert_many(docs);
    const CorpusIndex before = idx;
    Rng rng(seed * 7);
    Document d = fx::kb("nugget:x" + std::to_string(seed), "title " + fx::vocabulary()[rng.below(120)],
                        fx::vocabulary()[rng.below(120)] + " " + fx::vocabulary()[rng.below(120)]);
    d.source = DocSource::nugget;
    d.anchors = std::vector<std::string>{"anchor " + fx::vocabulary()[rng.below(120)]};
    idx.upsert(d);
    idx.remove(d.doc_id);
    CHECK(idx == before);
    CHECK(idx.state_hash() == before.state_hash());
  }
}

TEST_CASE("index invariants") {
  CorpusIndex idx;
  idx.upsert_many(fx::random_corpus(80, 5));
  idx.remove("d0003");
  idx.remove("d0040");
  double total = 0;
  for (const auto& [id, doc] : idx.documents()) {
    total += idx.doc_length(id);
    CHECK(idx.dense_vector(id).size() == 256);
  }
  CHECK(idx.avg_doc_length() == doctest::Approx(total / static_cast<double>(idx.size())));
  for (const auto& [tok, list] : idx.inverted_index()) {
    CHECK(std::is_sorted(list.begin(), list.end(),
                         [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; }));
    for (const auto& p : list) CHECK(idx.contains(p.doc_id));
    CHECK(idx.idf(tok) == doctest::Approx(bm25_idf(idx.size(), list.size())));
  }
}

TEST_CASE("removing the last document leaves an empty index") {
  CorpusIndex idx;
  idx.upsert(fx::kb("only", "t", "b"));
  idx.remove("only");
  CHECK(idx.empty());
  CHECK(idx.inverted_index().empty());
  CHECK(idx == CorpusIndex{});
}

TEST_CASE("removal changes other documents' scores only through idf and average length") {
  std::vector<Document> docs{fx::kb("a", "reset", "password reset link"), fx::kb("b", "billing", "invoice email"),
                             fx::kb("c", "sso", "configure sso"), fx::kb("d", "owner", "workspace owner role"),
                             fx::kb("e", "reset", "reset owner password")};
  CorpusIndex idx;
  idx.upsert_many(docs);
  std::vector<Document> rest(docs.begin(), docs.end() - 1);
  idx.remove("e");
  for (const auto& q : std::vector<std::vector<std::string>>{{"password"}, {"invoice"}, {"owner", "role"}, {"reset"}}) {
    auto got = bm25_search(idx, q, 10);
    auto want = fx::brute_force_bm25(rest, q, 10);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].doc_id == want[i].doc_id);
      CHECK(got[i].sparse_score == doctest::Approx(want[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("persistence keeps only documents.jsonl and rebuilds the rest") {
  CorpusIndex idx = fx::reset_corpus();
  auto dir = temp_dir("persist");
  save_index(idx, dir);
  CHECK(std::filesystem::exists(dir / "documents.jsonl"));
  auto loaded = load_index(dir);
  CHECK(loaded == idx);
  CHECK(loaded.state_hash() == idx.state_hash());
  CHECK(load_index(dir / "documents.jsonl") == idx);
  CHECK_THROWS(load_index(dir / "missing.jsonl"));
}

TEST_CASE("scoped insertion behaves like an insert without touching the base") {
  CorpusIndex base;
  base.upsert_many(fx::random_corpus(50, 8));
  const auto h = base.state_hash();
  Document cand = fx::kb("nugget:c", "w1 w2", "w3 w4 w5 w99");
  cand.source = DocSource::nugget;

  CorpusIndex inserted = base;
  inserted.upsert(cand);
  {
    ScopedInsertion s(base, {cand});
    auto view = s.view();
    CHECK(view.size() == inserted.size());
    CHECK(view.avg_doc_length() == doctest::Approx(inserted.avg_doc_length()));
    CHECK(view.contains("nugget:c"));
    for (auto tok : {"w1", "w3", "w99", "w50"}) CHECK(view.df(tok) == inserted.df(tok));
    Rng rng(4);
    for (int i = 0; i < 30; ++i) {
      auto q = fx::random_query(rng);
      auto a = bm25_search(view, q, 10);
      auto b = bm25_search(inserted, q, 10);
      REQUIRE(a.size() == b.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].doc_id == b[k].doc_id);
        CHECK(a[k].sparse_score == doctest::Approx(b[k].sparse_score).epsilon(1e-12));
      }
    }
    CHECK(base.state_hash() == h);
  }
  CHECK_FALSE(base.contains("nugget:c"));
  CHECK(base.state_hash() == h);
}

TEST_CASE("concurrent scoped sessions do not see each other's candidates") {
  SharedCorpus shared(fx::reset_corpus());
  const auto h = shared.read([](const CorpusIndex& i) { return i.state_hash(); });
  std::vector<std::thread> threads;
  std::atomic<int> leaks{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int round = 0; round < 20; ++round) {
        Document d = fx::kb("nugget:t" + std::to_string(t), "candidate", "unique" + std::to_string(t));
        d.source = DocSource::nugget;
        auto s = shared.insert_scoped({d});
        auto view = s.view();
        for (int o = 0; o < 8; ++o)
          if (o != t && view.contains("nugget:t" + std::to_string(o))) ++leaks;
        if (!view.contains(d.doc_id)) ++leaks;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(leaks == 0);
  CHECK(shared.read([](const CorpusIndex& i) { return i.state_hash(); }) == h);
}
