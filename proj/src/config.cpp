#include "nugget_forge/config.h"

#include <cstdio>
#include <set>

#include "nugget_forge/errors.h"
#include "nugget_forge/store.h"
#include "nugget_forge/text.h"

namespace nf {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKeys = {"corpus_path",   "feedback_path", "query_log_path", "annotations_path",
                                     "negative_queries_path", "output_dir", "provider", "stack",
                                     "agent",         "seeds",         "heldout_seed",   "synthetic_per_case",
                                     "pass_policy",   "negative_nuggets"};

fs::path resolve(const json& j, const char* key, const fs::path& base, bool must_exist) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  fs::path p = j.at(key).get<std::string>();
  if (p.is_relative()) p = base / p;
  if (must_exist && !fs::exists(p)) throw InputError(std::string(key) + " does not exist: " + p.string());
  return p;
}

std::string path_text(const fs::path& p) { return p.empty() ? std::string{} : p.generic_string(); }

}  // namespace

void apply_overrides(AgentConfig& v, const json& j) {
  if (!j.is_object()) throw InputError("agent overrides must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key == "expansions")
      v.expansions = val.get<std::size_t>();
    else if (key == "max_rounds")
      v.max_rounds = val.get<int>();
    else if (key == "min_docs")
      v.min_docs = val.get<std::size_t>();
    else if (key == "seed")
      v.seed = val.get<std::uint64_t>();
    else
      throw InputError("unknown agent key: " + key);
  }
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKeys.count(key)) throw InputError("unknown config key: " + key);
  for (const char* key : {"corpus_path", "feedback_path", "output_dir"})
    if (!j.contains(key)) throw InputError(std::string("missing config key: ") + key);
  RunConfig c;
  try {
    c.corpus_path = resolve(j, "corpus_path", base_dir, true);
    c.feedback_path = resolve(j, "feedback_path", base_dir, true);
    c.query_log_path = resolve(j, "query_log_path", base_dir, true);
    c.annotations_path = resolve(j, "annotations_path", base_dir, true);
    c.negative_queries_path = resolve(j, "negative_queries_path", base_dir, true);
    c.output_dir = resolve(j, "output_dir", base_dir, false);
    if (j.contains("provider")) c.provider = j.at("provider").get<ProviderConfig>();
    if (j.contains("stack")) nf::apply_overrides(c.stack, j.at("stack"));
    if (j.contains("agent")) apply_overrides(c.agent, j.at("agent"));
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.heldout_seed = j.value("heldout_seed", c.heldout_seed);
    c.synthetic_per_case = j.value("synthetic_per_case", c.synthetic_per_case);
    if (j.contains("pass_policy")) c.pass_policy = j.at("pass_policy").get<PassPolicy>();
    c.negative_nuggets = j.value("negative_nuggets", c.negative_nuggets);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  if (c.seeds.empty()) throw InputError("seeds must not be empty");
  c.provider.validate();
  c.stack.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  json j;
  try {
    j = json::parse(read_text(file));
  } catch (const json::parse_error& e) {
    throw InputError(file.string() + ": " + e.what());
  }
  return from_json(j, file.has_parent_path() ? file.parent_path() : fs::path("."));
}

json RunConfig::to_json() const {
  json j{{"corpus_path", path_text(corpus_path)},
         {"feedback_path", path_text(feedback_path)},
         {"query_log_path", path_text(query_log_path)},
         {"annotations_path", path_text(annotations_path)},
         {"negative_queries_path", path_text(negative_queries_path)},
         {"output_dir", path_text(output_dir)},
         {"provider", provider},
         {"stack", stack},
         {"agent", agent},
         {"seeds", seeds},
         {"heldout_seed", heldout_seed},
         {"synthetic_per_case", synthetic_per_case},
         {"pass_policy", pass_policy},
         {"negative_nuggets", negative_nuggets}};
  return j;
}

std::string config_fingerprint(const RunConfig& cfg) {
  json provider{{"backend", cfg.provider.backend == Backend::sim ? "sim" : "http"}, {"model", cfg.provider.model_name}};
  json j{{"stack", cfg.stack},         {"agent", cfg.agent},       {"provider", provider},
         {"seeds", cfg.seeds},         {"heldout_seed", cfg.heldout_seed},
         {"pass_policy", cfg.pass_policy}, {"synthetic_per_case", cfg.synthetic_per_case}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace nf
