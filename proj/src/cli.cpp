#include "nugget_forge/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "nugget_forge/config.h"
#include "nugget_forge/experiment.h"
#include "nugget_forge/nugget.h"
#include "nugget_forge/text.h"

namespace nf {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.json";

struct Inputs {
  RunConfig cfg;
  std::vector<Document> documents;
  std::vector<FeedbackEvent> feedback;
  std::vector<Annotation> annotations;
  std::vector<QueryRecord> query_log;
};

Inputs load_inputs(const fs::path& config_file) {
  Inputs in;
  in.cfg = RunConfig::load(config_file);
  in.documents = read_jsonl<Document>(in.cfg.corpus_path);
  in.feedback = read_jsonl<FeedbackEvent>(in.cfg.feedback_path);
  if (!in.cfg.annotations_path.empty()) in.annotations = read_jsonl<Annotation>(in.cfg.annotations_path);
  if (!in.cfg.query_log_path.empty()) in.query_log = read_jsonl<QueryRecord>(in.cfg.query_log_path);
  return in;
}

/// Base index, provider and agent for one command.
struct Runtime {
  CorpusIndex base;
  std::unique_ptr<Provider> provider;
  std::unique_ptr<Agent> agent;

  explicit Runtime(const Inputs& in) : provider(make_provider(in.cfg.provider)) {
    base.upsert_many(in.documents);
    agent = std::make_unique<Agent>(RetrievalStack(in.cfg.stack), *provider, in.cfg.agent);
  }
};

CaseConfig case_config(const RunConfig& cfg) {
  CaseConfig c;
  c.heldout_seed = cfg.heldout_seed;
  c.synthetic_per_case = cfg.synthetic_per_case;
  return c;
}

InoConfig ino_config(const RunConfig& cfg) {
  InoConfig c;
  c.pass_policy = cfg.pass_policy;
  return c;
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

std::string percent(std::size_t k, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * static_cast<double>(k) / static_cast<double>(n));
  return buf;
}

/// Stored nuggets must come from the same configuration.
void check_manifest(const RunConfig& cfg) {
  auto path = cfg.output_dir / kManifest;
  if (!fs::exists(path)) throw InputError("no nugget store in " + cfg.output_dir.string() + "; run extract first");
  json m;
  try {
    m = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  auto stored = m.value("config_fingerprint", std::string{});
  auto current = config_fingerprint(cfg);
  if (stored != current)
    throw IntegrityError("config fingerprint " + current + " does not match stored nuggets (" + stored + ")");
}

std::vector<Nugget> load_nuggets(const RunConfig& cfg) {
  check_manifest(cfg);
  return read_jsonl<Nugget>(cfg.output_dir / "nuggets.jsonl");
}

const FeedbackEvent& event_for(const std::vector<FeedbackEvent>& feedback, const Nugget& n) {
  for (const auto& ev : feedback)
    if (ev.event_id == n.source_event_id) return ev;
  throw InputError("nugget " + n.nugget_id + " refers to unknown event " + n.source_event_id);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      auto t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

// ------------------------------------------------------------------ commands

int cmd_gen_bench(const fs::path& dir, std::uint64_t seed, std::ostream& out) {
  DirLock lock(dir);
  BenchmarkConfig bc;
  bc.seed = seed;
  auto b = generate_benchmark(bc);
  save_benchmark(b, dir);
  json cfg{{"corpus_path", "documents.jsonl"},
           {"feedback_path", "feedback.jsonl"},
           {"query_log_path", "query_log.jsonl"},
           {"annotations_path", "annotations.jsonl"},
           {"negative_queries_path", "negative_queries.jsonl"},
           {"output_dir", "out"},
           {"pass_policy", "all"}};
  write_text(dir / "config.json", pretty(cfg));
  out << "benchmark: " << b.documents.size() << " documents, " << b.feedback.size() << " feedback events, "
      << b.query_log.size() << " logged queries, " << b.negative_queries.size() << " unrelated queries -> "
      << dir.string() << "\n";
  return kExitOk;
}

int cmd_extract(const fs::path& config_file, std::ostream& out) {
  auto in = load_inputs(config_file);
  DirLock lock(in.cfg.output_dir);
  auto provider = make_provider(in.cfg.provider);
  std::vector<Nugget> nuggets;
  std::vector<json> skipped;
  for (const auto& ev : in.feedback) {
    auto rec = filter_actionable(*provider, ev, in.cfg.heldout_seed);
    if (rec.processed && rec.result.kb_candidate && rec.result.article) {
      nuggets.push_back(make_nugget(ev, *rec.result.article));
      continue;
    }
    std::string reason = !rec.processed ? "error: " + rec.error
                         : rec.result.kb_candidate ? "no article extracted"
                                                   : rec.result.reason;
    skipped.push_back(json{{"event_id", ev.event_id}, {"reason", reason}});
  }
  write_jsonl(in.cfg.output_dir / "nuggets.jsonl", nuggets);
  write_jsonl(in.cfg.output_dir / "skipped.jsonl", skipped);
  write_text(in.cfg.output_dir / kManifest, pretty(json{{"config_fingerprint", config_fingerprint(in.cfg)},
                                                        {"events", in.feedback.size()},
                                                        {"actionable", nuggets.size()},
                                                        {"skipped", skipped.size()}}));
  out << "actionable: ";
  if (in.feedback.empty())
    out << "n/a (0 events)\n";
  else
    out << nuggets.size() << "/" << in.feedback.size() << " (" << percent(nuggets.size(), in.feedback.size()) << ")\n";
  return kExitOk;
}

int cmd_build(const fs::path& config_file, const std::string& variant_name, std::ostream& out) {
  auto in = load_inputs(config_file);
  auto variant = parse_variant(variant_name);
  if (variant == Variant::E) throw InputError("variant E comes from optimize");
  DirLock lock(in.cfg.output_dir);
  auto nuggets = load_nuggets(in.cfg);
  auto provider = make_provider(in.cfg.provider);
  std::vector<IndexableNugget> built;
  for (const auto& n : nuggets) {
    const auto& ev = event_for(in.feedback, n);
    built.push_back(build_variant(*provider, n, ev.trigger_query, variant, mix_seed(in.cfg.seeds.front(), n.nugget_id)));
  }
  auto path = in.cfg.output_dir / "variants" / (to_string(variant) + ".jsonl");
  write_jsonl(path, built);
  out << "built " << built.size() << " variant " << to_string(variant) << " nuggets -> " << path.string() << "\n";
  return kExitOk;
}

int cmd_optimize(const fs::path& config_file, const std::string& event_id, bool all, std::ostream& out) {
  if (all == !event_id.empty()) throw InputError("optimize takes exactly one of --event or --all");
  auto in = load_inputs(config_file);
  DirLock lock(in.cfg.output_dir);
  auto nuggets = load_nuggets(in.cfg);
  if (!all) {
    auto it = std::find_if(nuggets.begin(), nuggets.end(), [&](const Nugget& n) {
      return n.source_event_id == event_id || n.nugget_id == event_id;
    });
    if (it == nuggets.end()) throw InputError("no stored nugget for event " + event_id);
    nuggets = {*it};
  }
  Runtime rt(in);
  auto store_path = in.cfg.output_dir / "optimized" / "nuggets.jsonl";
  std::map<std::string, IndexableNugget> store;
  if (fs::exists(store_path))
    for (auto& c : read_jsonl<IndexableNugget>(store_path)) store[c.nugget.nugget_id] = std::move(c);

  std::vector<std::string> not_converged;
  for (const auto& n : nuggets) {
    const auto& ev = event_for(in.feedback, n);
    auto [cand, log] = ino_optimize(rt.base, *rt.agent, n, ev.trigger_query, ino_config(in.cfg),
                                    mix_seed(in.cfg.seeds.front(), n.nugget_id), ev.free_text);
    if (!log.converged) not_converged.push_back(n.nugget_id);
    store[n.nugget_id] = cand;
    write_text(in.cfg.output_dir / "runs" / n.nugget_id / "log.json", pretty(log));
  }
  std::vector<IndexableNugget> ordered;
  for (auto& [_, c] : store) ordered.push_back(c);
  write_jsonl(store_path, ordered);
  write_text(in.cfg.output_dir / "optimized" / kManifest,
             pretty(json{{"config_fingerprint", config_fingerprint(in.cfg)}, {"nuggets", ordered.size()}}));
  out << "optimized " << nuggets.size() << " nugget(s); converged " << nuggets.size() - not_converged.size();
  if (!not_converged.empty()) out << "; NOT CONVERGED: " << join(not_converged, ", ");
  out << "\n";
  return kExitOk;
}

std::vector<IndexableNugget> load_optimized(const RunConfig& cfg, bool required) {
  auto path = cfg.output_dir / "optimized" / "nuggets.jsonl";
  if (!fs::exists(path)) {
    if (required) throw InputError("no optimized nuggets in " + cfg.output_dir.string() + "; run optimize first");
    return {};
  }
  check_manifest(cfg);
  return read_jsonl<IndexableNugget>(path);
}

int cmd_replay(const fs::path& config_file, const std::string& query, const std::string& nugget, std::ostream& out) {
  if (trim(query).empty()) throw InputError("replay needs a non-empty --query");
  auto in = load_inputs(config_file);
  Runtime rt(in);
  std::vector<Document> docs;
  std::optional<std::string> nugget_doc;
  for (const auto& c : load_optimized(in.cfg, false)) {
    docs.push_back(render_indexable(c));
    if (!nugget.empty() && (c.nugget.nugget_id == nugget || c.nugget.source_event_id == nugget))
      nugget_doc = docs.back().doc_id;
  }
  if (!nugget.empty() && !nugget_doc) throw InputError("no optimized nugget " + nugget);
  ScopedInsertion session(rt.base, docs);
  out << pretty(rt.agent->run(session.view(), query, nugget_doc));
  return kExitOk;
}

int cmd_eval(const fs::path& config_file, const std::string& variants, const std::string& sources, std::ostream& out) {
  auto in = load_inputs(config_file);
  ExperimentConfig ec;
  ec.variants.clear();
  for (const auto& v : split_list(variants)) ec.variants.push_back(parse_variant(v));
  if (ec.variants.empty()) throw InputError("--variants is empty");
  std::set<QuerySource> wanted;
  for (const auto& s : split_list(sources)) {
    try {
      wanted.insert(json(s).get<QuerySource>());
    } catch (const json::exception&) {
      throw InputError("unknown query source: " + s);
    }
  }
  if (wanted.empty()) throw InputError("--sources is empty");
  ec.seeds = in.cfg.seeds;
  ec.eval.ino = ino_config(in.cfg);
  ec.negative_nuggets = 0;

  DirLock lock(in.cfg.output_dir);
  auto nuggets = load_nuggets(in.cfg);
  if (nuggets.empty()) throw InputError("nugget store is empty; nothing to evaluate");
  Runtime rt(in);
  auto cases = build_cases(*rt.provider, rt.agent->stack(), rt.base, nuggets, in.feedback, in.annotations,
                           in.query_log, case_config(in.cfg));
  for (auto& c : cases)
    std::erase_if(c.queries, [&](const EvalQuery& q) { return !wanted.count(q.source); });

  auto res = run_experiment(rt.base, *rt.agent, cases, {}, ec);
  write_text(in.cfg.output_dir / "report.json", pretty(res.report));
  write_text(in.cfg.output_dir / "report.csv", render_csv(res.report));
  auto text = render_text(res.report);
  write_text(in.cfg.output_dir / "report.txt", text);
  out << text;
  return kExitOk;
}

int cmd_negctl(const fs::path& config_file, std::size_t n, std::ostream& out) {
  auto in = load_inputs(config_file);
  if (in.cfg.negative_queries_path.empty()) throw InputError("config has no negative_queries_path");
  auto negatives = read_jsonl<QueryRecord>(in.cfg.negative_queries_path);
  if (negatives.size() > n) negatives.resize(n);
  DirLock lock(in.cfg.output_dir);
  auto optimized = load_optimized(in.cfg, true);
  if (optimized.size() > in.cfg.negative_nuggets) optimized.resize(in.cfg.negative_nuggets);
  Runtime rt(in);
  std::vector<Document> docs;
  std::vector<std::string> ids;
  for (const auto& c : optimized) {
    docs.push_back(render_indexable(c));
    ids.push_back(docs.back().doc_id);
  }
  std::vector<std::string> queries;
  for (const auto& q : negatives) queries.push_back(q.text);
  ScopedInsertion session(rt.base, docs);
  auto r = negative_control(session.view(), *rt.agent, queries, ids);

  auto dir = in.cfg.output_dir / "negctl";
  fs::remove_all(dir / "flagged");
  fs::create_directories(dir / "flagged");
  for (std::size_t i = 0; i < r.flagged.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.json", i + 1);
    write_text(dir / "flagged" / name, pretty(r.flagged[i]));
  }
  json summary = r;
  summary["nuggets"] = ids.size();
  summary["retrieval_rate"] = r.retrieval_rate();
  write_text(dir / "summary.json", pretty(summary));
  out << "negative control: " << r.retrieved << "/" << r.queries << " queries retrieved a nugget";
  if (r.queries) out << " (" << percent(r.retrieved, r.queries) << ")";
  out << ", " << r.cited << " cited, " << ids.size() << " nuggets inserted; flagged traces in "
      << (dir / "flagged").string() << "\n";
  return kExitOk;
}

int cmd_report(const fs::path& file, const std::string& format, std::ostream& out) {
  EvalReport r;
  try {
    r = json::parse(read_text(file)).get<EvalReport>();
  } catch (const json::exception& e) {
    throw InputError(file.string() + ": " + e.what());
  }
  if (format == "text")
    out << render_text(r);
  else if (format == "csv")
    out << render_csv(r);
  else if (format == "json")
    out << pretty(r);
  else
    throw InputError("unknown report format: " + format);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Turn user feedback into discoverable knowledge-base nuggets and measure them.", "nugget-forge"};
  app.require_subcommand(1);

  std::string config, out_dir, variant = "D", event, query, nugget, variants = "A,B,C,D,E",
                                 sources = "in_sample,historical,synthetic", format = "text", report_file;
  std::uint64_t bench_seed = BenchmarkConfig{}.seed;
  std::size_t negctl_n = 1000;
  bool all = false;

  auto* gen = app.add_subcommand("gen-bench", "Write the synthetic benchmark and a matching config.json");
  gen->add_option("--out", out_dir, "Destination directory")->required();
  gen->add_option("--seed", bench_seed, "World seed");

  auto* extract = app.add_subcommand("extract", "Filter feedback and store actionable nuggets");
  auto* build = app.add_subcommand("build", "Build variant A-D candidates for stored nuggets");
  build->add_option("--variant", variant, "A, B, C or D");
  auto* optimize = app.add_subcommand("optimize", "Run the optimization loop on stored nuggets");
  optimize->add_option("--event", event, "Event or nugget id");
  optimize->add_flag("--all", all, "Every stored nugget");
  auto* replay = app.add_subcommand("replay", "Run one query through the agent with optimized nuggets inserted");
  replay->add_option("--query", query)->required();
  replay->add_option("--nugget", nugget, "Event or nugget id to flag in the trace");
  auto* eval = app.add_subcommand("eval", "Evaluate variants over every configured seed");
  eval->add_option("--variants", variants, "Comma-separated variants");
  eval->add_option("--sources", sources, "Comma-separated query sources");
  auto* negctl = app.add_subcommand("negctl", "Replay unrelated queries against optimized nuggets");
  negctl->add_option("--n", negctl_n, "Number of queries");
  for (auto* sub : {extract, build, optimize, replay, eval, negctl})
    sub->add_option("--config", config, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  auto* report = app.add_subcommand("report", "Render a stored report.json");
  report->add_option("--in", report_file, "report.json")->required()->check(CLI::ExistingFile);
  report->add_option("--format", format, "text, csv or json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (gen->parsed()) return cmd_gen_bench(out_dir, bench_seed, out);
    if (extract->parsed()) return cmd_extract(config, out);
    if (build->parsed()) return cmd_build(config, variant, out);
    if (optimize->parsed()) return cmd_optimize(config, event, all, out);
    if (replay->parsed()) return cmd_replay(config, query, nugget, out);
    if (eval->parsed()) return cmd_eval(config, variants, sources, out);
    if (negctl->parsed()) return cmd_negctl(config, negctl_n, out);
    if (report->parsed()) return cmd_report(report_file, format, out);
  } catch (const IntegrityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ProbeConstructionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitInput;
}

}  // namespace nf
