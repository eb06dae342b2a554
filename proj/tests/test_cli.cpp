// Command line: exit codes, stored artifacts and reproducibility.
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "fixtures.h"
#include "nugget_forge/cli.h"
#include "nugget_forge/eval.h"
#include "nugget_forge/nugget.h"
#include "nugget_forge/store.h"

using namespace nf;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

FeedbackEvent event(std::string id, std::string query, std::string text) {
  auto e = fx::reset_event();
  e.event_id = std::move(id);
  e.trigger_query = query;
  e.conversation = {{"user", query}, {"assistant", "Please check the settings page."}};
  e.original_answer = "Please check the settings page.";
  e.free_text = std::move(text);
  return e;
}

std::vector<FeedbackEvent> ten_events() {
  std::vector<FeedbackEvent> out{fx::reset_event()};
  out.push_back(event("evt-sso", "how can an admin enable single sign-on for the company workspace account",
                      "Single sign-on is limited to the Enterprise plan in portal v8.2."));
  out.push_back(event("evt-bill", "when will the billing invoices be emailed to our finance contact",
                      "Invoices are emailed on the first business day of every month."));
  for (int i = 0; i < 7; ++i)
    out.push_back(event("evt-vague" + std::to_string(i), "where is the dashboard",
                        i % 2 ? "not helpful" : "wrong answer, useless"));
  return out;
}

std::vector<Document> corpus_docs() {
  auto idx = fx::reset_corpus();
  std::vector<Document> docs;
  for (const auto& id : {"kb-self", "kb-self2", "kb-lead", "kb-team", "kb-sso", "kb-bill"}) docs.push_back(*idx.find(id));
  return docs;
}

/// A scratch world on disk with one config per call.
class World {
 public:
  explicit World(const std::string& name, const std::vector<FeedbackEvent>& feedback = ten_events())
      : dir_(fs::temp_directory_path() / ("nf_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_jsonl(dir_ / "documents.jsonl", corpus_docs());
    write_jsonl(dir_ / "feedback.jsonl", feedback);
    std::vector<QueryRecord> negatives;
    for (int i = 0; i < 120; ++i)
      negatives.push_back({"neg" + std::to_string(i),
                           i % 40 == 0 ? fx::kQ0 : "how many seats are on the " + std::to_string(i) + " seat plan",
                           "other"});
    write_jsonl(dir_ / "negatives.jsonl", negatives);
  }
  ~World() { fs::remove_all(dir_); }

  std::string config(const std::string& name, json extra = json::object()) const {
    json j{{"corpus_path", "documents.jsonl"},
           {"feedback_path", "feedback.jsonl"},
           {"negative_queries_path", "negatives.jsonl"},
           {"output_dir", "out"},
           {"seeds", {1}}};
    j.update(extra);
    auto path = dir_ / (name + ".json");
    write_text(path, j.dump(2));
    return path.string();
  }
  fs::path out() const { return dir_ / "out"; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitInput);
  CHECK(cli({"frobnicate"}).code == kExitInput);
  CHECK(cli({"extract"}).code == kExitInput);
  CHECK(cli({"extract", "--config", "/nonexistent/config.json"}).code == kExitInput);
  CHECK(cli({"--help"}).code == kExitOk);
  World w("usage");
  auto bad = w.config("bad", {{"no_such_key", 1}});
  CHECK(cli({"extract", "--config", bad}).code == kExitInput);
}

TEST_CASE("extract reports the actionable rate") {
  SUBCASE("no events") {
    World w("empty", {});
    auto r = cli({"extract", "--config", w.config("c")});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("n/a") != std::string::npos);
  }
  SUBCASE("ten events, three corrections") {
    World w("ten");
    auto r = cli({"extract", "--config", w.config("c")});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("3/10 (30.0%)") != std::string::npos);
    auto nuggets = read_jsonl<Nugget>(w.out() / "nuggets.jsonl");
    REQUIRE(nuggets.size() == 3);
    CHECK(nuggets[0].nugget_id == "n-evt-reset");
    CHECK(read_jsonl<json>(w.out() / "skipped.jsonl").size() == 7);
  }
  SUBCASE("the worked example alone") {
    World w("one", {fx::reset_event()});
    REQUIRE(cli({"extract", "--config", w.config("c")}).code == kExitOk);
    auto nuggets = read_jsonl<Nugget>(w.out() / "nuggets.jsonl");
    REQUIRE(nuggets.size() == 1);
    CHECK(nuggets[0].source_event_id == "evt-reset");
    CHECK(validate_nugget(nuggets[0]).ok());
  }
}

TEST_CASE("build and optimize") {
  World w("opt");
  auto cfg = w.config("c", {{"pass_policy", "all"}});
  REQUIRE(cli({"extract", "--config", cfg}).code == kExitOk);

  auto b = cli({"build", "--config", cfg, "--variant", "D"});
  CHECK(b.code == kExitOk);
  auto built = read_jsonl<IndexableNugget>(w.out() / "variants" / "D.jsonl");
  REQUIRE(built.size() == 3);
  for (const auto& c : built) CHECK(c.anchors.size() == 5);
  CHECK(cli({"build", "--config", cfg, "--variant", "E"}).code == kExitInput);

  CHECK(cli({"optimize", "--config", cfg, "--event", "evt-unknown"}).code == kExitInput);
  CHECK(cli({"optimize", "--config", cfg}).code == kExitInput);

  REQUIRE(cli({"optimize", "--config", cfg, "--event", "evt-reset"}).code == kExitOk);
  auto log_path = w.out() / "runs" / "n-evt-reset" / "log.json";
  auto first = read_text(log_path);
  REQUIRE(cli({"optimize", "--config", cfg, "--event", "evt-reset"}).code == kExitOk);
  CHECK(read_text(log_path) == first);
  auto log = json::parse(first).get<InoRunLog>();
  CHECK(log.iterations_used >= 1);

  auto all = cli({"optimize", "--config", cfg, "--all"});
  INFO(all.err);
  REQUIRE(all.code == kExitOk);
  std::size_t logs = 0;
  for (const auto& e : fs::directory_iterator(w.out() / "runs")) logs += fs::exists(e.path() / "log.json");
  CHECK(logs == 3);
  CHECK(read_jsonl<IndexableNugget>(w.out() / "optimized" / "nuggets.jsonl").size() == 3);

  auto replay = cli({"replay", "--config", cfg, "--query", fx::kQ0, "--nugget", "evt-reset"});
  REQUIRE(replay.code == kExitOk);
  auto trace = json::parse(replay.out).get<RagTrace>();
  CHECK(trace.input_query == fx::kQ0);
  CHECK(trace.nugget_retrieved);
}

TEST_CASE("a candidate that never converges is flagged") {
  World w("noconv");
  auto cfg = w.config("c", {{"stack", {{"gate_threshold", 1.0}}}});
  REQUIRE(cli({"extract", "--config", cfg}).code == kExitOk);
  auto r = cli({"optimize", "--config", cfg, "--event", "evt-reset"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("NOT CONVERGED: n-evt-reset") != std::string::npos);
  auto log = json::parse(read_text(w.out() / "runs" / "n-evt-reset" / "log.json")).get<InoRunLog>();
  CHECK_FALSE(log.converged);
  CHECK(log.iterations_used == 3);
}

TEST_CASE("stored nuggets from another configuration are refused") {
  World w("fp");
  REQUIRE(cli({"extract", "--config", w.config("a")}).code == kExitOk);
  auto other = w.config("b", {{"seeds", {7}}});
  auto r = cli({"optimize", "--config", other, "--all"});
  CHECK(r.code == kExitIntegrity);
  CHECK(r.err.find("fingerprint") != std::string::npos);
  CHECK(cli({"build", "--config", other}).code == kExitIntegrity);
}

TEST_CASE("eval writes a report per variant and source") {
  World w("eval");
  auto cfg = w.config("c", {{"seeds", {1, 2}}});
  REQUIRE(cli({"extract", "--config", cfg}).code == kExitOk);
  auto r = cli({"eval", "--config", cfg, "--variants", "A,E", "--sources", "in_sample"});
  REQUIRE(r.code == kExitOk);
  auto rep = json::parse(read_text(w.out() / "report.json")).get<EvalReport>();
  CHECK(rep.rows.size() == 2);
  CHECK(rep.find(Variant::A, "in_sample"));
  CHECK(rep.find(Variant::E, "in_sample"));
  CHECK(rep.seeds == std::vector<std::uint64_t>{1, 2});
  auto csv = read_text(w.out() / "report.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 1 * 2);

  auto again = cli({"eval", "--config", cfg, "--variants", "A,E", "--sources", "in_sample"});
  REQUIRE(again.code == kExitOk);
  CHECK(json(json::parse(read_text(w.out() / "report.json")).get<EvalReport>()).dump() == json(rep).dump());

  auto text = cli({"report", "--in", (w.out() / "report.json").string(), "--format", "csv"});
  CHECK(text.code == kExitOk);
  CHECK(text.out == csv);
  CHECK(cli({"report", "--in", (w.out() / "report.json").string(), "--format", "xml"}).code == kExitInput);
  CHECK(cli({"eval", "--config", cfg, "--variants", "Z"}).code == kExitInput);
  CHECK(cli({"eval", "--config", cfg, "--sources", "tickets"}).code == kExitInput);
}

TEST_CASE("negctl writes flagged traces") {
  World w("neg");
  auto cfg = w.config("c");
  REQUIRE(cli({"extract", "--config", cfg}).code == kExitOk);
  CHECK(cli({"negctl", "--config", cfg, "--n", "100"}).code == kExitInput);
  REQUIRE(cli({"optimize", "--config", cfg, "--all"}).code == kExitOk);
  auto r = cli({"negctl", "--config", cfg, "--n", "100"});
  REQUIRE(r.code == kExitOk);
  auto summary = json::parse(read_text(w.out() / "negctl" / "summary.json"));
  CHECK(summary.at("queries") == 100);
  std::size_t flagged = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(w.out() / "negctl" / "flagged")) ++flagged;
  CHECK(flagged == summary.at("retrieved").get<std::size_t>());
  // q0 is planted at positions 0, 40 and 80.
  CHECK(flagged >= 3);
}

TEST_CASE("gen-bench writes a runnable world") {
  auto dir = fs::temp_directory_path() / "nf_cli_bench";
  fs::remove_all(dir);
  auto r = cli({"gen-bench", "--out", dir.string(), "--seed", "5"});
  REQUIRE(r.code == kExitOk);
  for (auto f : {"documents.jsonl", "feedback.jsonl", "query_log.jsonl", "annotations.jsonl", "negative_queries.jsonl",
                 "config.json"})
    CHECK(fs::exists(dir / f));
  auto first = read_text(dir / "feedback.jsonl");
  fs::remove_all(dir);
  REQUIRE(cli({"gen-bench", "--out", dir.string(), "--seed", "5"}).code == kExitOk);
  CHECK(read_text(dir / "feedback.jsonl") == first);
  fs::remove_all(dir);
}
