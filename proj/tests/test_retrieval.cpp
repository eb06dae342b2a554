// Retrieval stack: BM25, dense channel, fusion, re-ranking, calibration, gate.
#include "doctest.h"
#include "fixtures.h"
#include "nugget_forge/errors.h"
#include "nugget_forge/retrieval.h"

using namespace nf;

namespace {

struct Collision {
  std::string same_sign, opposite_sign;
};

// Tokens whose hash lands on the coordinate of `token`, one with the same sign
// and one with the opposite sign.
Collision find_collisions(const std::string& token) {
  auto h = fnv1a64(token);
  Collision c;
  for (int i = 0; i < 100000 && (c.same_sign.empty() || c.opposite_sign.empty()); ++i) {
    std::string cand = "zq" + std::to_string(i);
    auto g = fnv1a64(cand);
    if (g % 256 != h % 256) continue;
    ((g >> 63) == (h >> 63) ? c.same_sign : c.opposite_sign) = cand;
  }
  return c;
}

class AddingReranker final : public Reranker {
 public:
  void score(std::string_view, std::vector<ScoredDoc>& c, const IndexView&) const override { c.push_back({"intruder"}); }
  std::string name() const override { return "adding"; }
};

}  // namespace

TEST_CASE("BM25 single-document formula") {
  CorpusIndex idx;
  idx.upsert(fx::kb("only", "reset", "password"));
  auto r = bm25_search(idx, {"reset"}, 10);
  REQUIRE(r.size() == 1);
  // len == avglen and tf == 1, so the saturation term is 2.2 / 2.2.
  CHECK(r[0].sparse_score == doctest::Approx(std::log(1.0 + 0.5 / 1.5)).epsilon(1e-12));
  CHECK(bm25_search(idx, {"absent"}, 10).empty());
  CHECK(bm25_search(idx, {}, 10).empty());
  CHECK_THROWS_AS(bm25_search(idx, {"reset"}, 0), InputError);
}

TEST_CASE("BM25 top-10 equals brute-force scoring on a 200-document corpus") {
  auto docs = fx::random_corpus(200, 42);
  CorpusIndex idx;
  idx.upsert_many(docs);
  Rng rng(7);
  for (int q = 0; q < 50; ++q) {
    auto query = fx::random_query(rng);
    auto got = bm25_search(idx, query, 10);
    auto want = fx::brute_force_bm25(docs, query, 10);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].doc_id == want[i].doc_id);
      CHECK(std::abs(got[i].sparse_score - want[i].score) <= 1e-9);
    }
  }
}

TEST_CASE("BM25 ties break by ascending doc_id") {
  CorpusIndex idx;
  for (auto id : {"c", "a", "b"}) idx.upsert(fx::kb(id, "same", "text here"));
  auto r = bm25_search(idx, {"same"}, 10);
  REQUIRE(r.size() == 3);
  CHECK(r[0].doc_id == "a");
  CHECK(r[1].doc_id == "b");
  CHECK(r[2].doc_id == "c");
}

TEST_CASE("reciprocal-rank fusion values") {
  auto col = find_collisions("aa");
  REQUIRE_FALSE(col.opposite_sign.empty());
  CorpusIndex idx;
  // x matches the sparse channel on "aa" while its opposite-sign partner
  // cancels the dense dot product to exactly zero.
  idx.upsert(fx::kb("x", "", "aa " + col.opposite_sign));
  idx.upsert(fx::kb("y", "", "qq rr ss"));
  RetrievalStack stack;
  auto fused = stack.hybrid_search(idx, "aa");
  auto x = std::find_if(fused.begin(), fused.end(), [](const ScoredDoc& d) { return d.doc_id == "x"; });
  REQUIRE(x != fused.end());
  CHECK(x->dense_score == doctest::Approx(0.0));
  CHECK(x->fused_score == doctest::Approx(1.0 / 61.0).epsilon(1e-15));

  CorpusIndex both;
  both.upsert(fx::kb("dup", "", "password reset owner"));
  both.upsert(fx::kb("other", "", "billing invoice"));
  both.upsert(fx::kb("third", "", "password billing"));
  auto f2 = stack.hybrid_search(both, "password reset owner");
  REQUIRE_FALSE(f2.empty());
  CHECK(f2[0].doc_id == "dup");
  CHECK(f2[0].fused_rank == 1);
  CHECK(f2[0].fused_score == doctest::Approx(2.0 / 61.0).epsilon(1e-15));
  CHECK(f2.size() <= 3);
}

TEST_CASE("fused list is bounded by k_fuse and has unique ranks") {
  CorpusIndex idx;
  idx.upsert_many(fx::random_corpus(400, 11));
  RetrievalStack stack;
  Rng rng(12);
  for (int i = 0; i < 40; ++i) {
    auto q = join(fx::random_query(rng), " ");
    auto fused = stack.hybrid_search(idx, q);
    CHECK(fused.size() <= 60);
    for (std::size_t k = 0; k < fused.size(); ++k) CHECK(fused[k].fused_rank == k + 1);
    CHECK(std::is_sorted(fused.begin(), fused.end(),
                         [](const ScoredDoc& a, const ScoredDoc& b) { return a.fused_score > b.fused_score; }));
  }
}

TEST_CASE("default re-ranker values") {
  CorpusIndex idx;
  LexicalDenseReranker rr;
  SUBCASE("singleton minmax is 1") {
    std::vector<ScoredDoc> c{{"a", 0.0, 0.6}};
    rr.score("q", c, idx);
    CHECK(c[0].rerank_score == doctest::Approx(0.8));
  }
  SUBCASE("minmax over the list and clipped cosine") {
    std::vector<ScoredDoc> c{{"a", 2.0, 0.2}, {"b", 4.0, -0.5}, {"c", 3.0, 0.9}};
    rr.score("q", c, idx);
    CHECK(c[0].doc_id == "c");
    CHECK(c[0].rerank_score == doctest::Approx(0.5 * 0.5 + 0.5 * 0.9));
    CHECK(c[1].doc_id == "b");
    CHECK(c[1].rerank_score == doctest::Approx(0.5));
    CHECK(c[2].doc_id == "a");
    CHECK(c[2].rerank_score == doctest::Approx(0.1));
  }
  SUBCASE("identical scores keep the fused order") {
    std::vector<ScoredDoc> c{{"z", 1.0, 0.3}, {"a", 1.0, 0.3}, {"m", 1.0, 0.3}};
    rr.score("q", c, idx);
    CHECK(c[0].doc_id == "z");
    CHECK(c[1].doc_id == "a");
    CHECK(c[2].doc_id == "m");
  }
  SUBCASE("all-zero sparse list normalizes to 0") {
    std::vector<ScoredDoc> c{{"a", 0.0, 0.4}, {"b", 0.0, 0.2}};
    rr.score("q", c, idx);
    CHECK(c[0].rerank_score == doctest::Approx(0.2));
  }
}

TEST_CASE("a document first in both channels stays first after re-ranking") {
  CorpusIndex idx;
  idx.upsert(fx::kb("best", "workspace owner", "reset password"));
  idx.upsert(fx::kb("mid", "password", "change password email"));
  idx.upsert(fx::kb("low", "billing", "owner invoices"));
  RetrievalStack stack;
  auto ranked = stack.rank(idx, "workspace owner reset password");
  REQUIRE_FALSE(ranked.empty());
  CHECK(ranked[0].doc_id == "best");
}

TEST_CASE("re-rankers may not change the candidate set") {
  CorpusIndex idx = fx::reset_corpus();
  RetrievalStack stack({}, std::make_shared<AddingReranker>());
  CHECK_THROWS_AS(stack.rank(idx, "reset password"), IntegrityError);
}

TEST_CASE("calibration") {
  CHECK(calibrate(0.5) == doctest::Approx(0.5));
  CHECK(calibrate(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(calibrate(1.0) == doctest::Approx(0.8808).epsilon(1e-4));
  for (double s : {-1e9, -50.0, 0.0, 50.0, 1e9}) {
    CHECK(calibrate(s) > 0.0);
    CHECK(calibrate(s) < 1.0);
  }
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    double a = rng.uniform() * 4 - 1.5, b = rng.uniform() * 4 - 1.5;
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    CHECK(calibrate(a) < calibrate(b));
  }
}

TEST_CASE("gate thresholds") {
  CorpusIndex idx;
  idx.upsert_many(fx::random_corpus(120, 21));
  Rng rng(22);
  for (int i = 0; i < 20; ++i) {
    auto q = join(fx::random_query(rng), " ");
    StackConfig zero;
    zero.gate_threshold = 0.0;
    auto all = RetrievalStack(zero).retrieve(idx, q);
    CHECK(json(all) == json(RetrievalStack(zero).rank(idx, q)));
    StackConfig one;
    one.gate_threshold = 1.0;
    CHECK(RetrievalStack(one).retrieve(idx, q).empty());
    for (const auto& d : RetrievalStack().retrieve(idx, q)) {
      CHECK(d.calibrated >= 0.5);
      CHECK(d.calibrated > 0.0);
      CHECK(d.calibrated < 1.0);
    }
  }
}

TEST_CASE("an exact-duplicate document is rank 1 and gated") {
  auto docs = fx::random_corpus(500, 31);
  const std::string q = "w3 w17 w40 w88";
  docs.push_back(fx::kb("planted", "", q));
  CorpusIndex idx;
  idx.upsert_many(docs);
  // Neither channel can beat the duplicate: cosine is 1 and the brute-force
  // BM25 ranking puts it first.
  auto oracle = fx::brute_force_bm25(docs, tokenize(q), 1);
  REQUIRE(oracle.size() == 1);
  CHECK(oracle[0].doc_id == "planted");
  auto gated = RetrievalStack().retrieve(idx, q);
  REQUIRE_FALSE(gated.empty());
  CHECK(gated[0].doc_id == "planted");
  CHECK(gated[0].rerank_score == doctest::Approx(1.0));
}

TEST_CASE("fusion soundness and determinism") {
  CorpusIndex idx;
  idx.upsert_many(fx::random_corpus(300, 41));
  RetrievalStack stack;
  Rng rng(43);
  for (int i = 0; i < 30; ++i) {
    auto toks = fx::random_query(rng);
    auto q = join(toks, " ");
    auto gated = stack.retrieve(idx, q);
    auto sparse = bm25_search(idx, toks, 200);
    auto dense = dense_search(idx, q, 200);
    for (const auto& g : gated) {
      bool found = false;
      for (const auto& s : sparse) found = found || s.doc_id == g.doc_id;
      for (const auto& d : dense) found = found || d.doc_id == g.doc_id;
      CHECK(found);
    }
    CHECK(json(stack.retrieve(idx, q)).dump() == json(gated).dump());
  }
}

TEST_CASE("dense channel lists only positive cosines") {
  CorpusIndex idx;
  idx.upsert_many(fx::random_corpus(100, 51));
  for (const auto& d : dense_search(idx, "w1 w2 w3", 200)) CHECK(d.dense_score > 0.0);
  CHECK(dense_search(idx, "", 200).empty());
}

TEST_CASE("stack configuration") {
  StackConfig c;
  CHECK(c.k_fuse == 60);
  CHECK(c.rrf_constant == 60.0);
  CHECK(c.bm25_k1 == 1.2);
  CHECK(c.bm25_b == 0.75);
  CHECK(c.gate_threshold == 0.5);
  CHECK(c.embed_dim == 256);
  apply_overrides(c, json{{"gate_threshold", 0.7}});
  CHECK(c.gate_threshold == 0.7);
  CHECK_THROWS_AS(apply_overrides(c, json{{"gate", 0.7}}), InputError);
  StackConfig bad;
  bad.gate_threshold = 1.5;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = {};
  bad.k_fuse = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = {};
  bad.channel_depth = 10;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
