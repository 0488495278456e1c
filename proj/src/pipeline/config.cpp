#include "kc/pipeline/config.hpp"

#include <set>

#include "kc/common/error.hpp"
#include "kc/pipeline/toml.hpp"

namespace kc::pipeline {

namespace {

std::string wilcoxon_name(eval::WilcoxonMode m) {
  switch (m) {
    case eval::WilcoxonMode::Exact: return "exact";
    case eval::WilcoxonMode::Approx: return "approx";
    case eval::WilcoxonMode::Auto: break;
  }
  return "auto";
}

eval::WilcoxonMode wilcoxon_from(const std::string& s) {
  if (s == "exact") return eval::WilcoxonMode::Exact;
  if (s == "approx") return eval::WilcoxonMode::Approx;
  if (s == "auto") return eval::WilcoxonMode::Auto;
  throw ConfigError("evaluate.wilcoxon must be exact, approx or auto, not '" + s + "'");
}

void reject_unknown(const Json& table, const std::string& where, std::initializer_list<const char*> known) {
  if (!table.is_object()) throw ConfigError("'" + where + "' must be a table");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, v] : table.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const Json& table, const char* key, T& out, const std::string& where) {
  if (!table.contains(key)) return;
  try {
    out = table.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

void read_path(const Json& table, const char* key, std::filesystem::path& out, const std::string& where,
               const std::filesystem::path& base) {
  std::string s;
  read(table, key, s, where);
  if (s.empty()) return;
  std::filesystem::path p(s);
  out = p.is_relative() && !base.empty() ? base / p : p;
}

std::string str(const std::filesystem::path& p) { return p.generic_string(); }

}  // namespace

Json to_json(const PipelineConfig& c) {
  Json llm = genkit::to_json(c.llm);
  llm.erase("parallelism");
  return Json{
      {"seed", c.seed},
      {"output_root", str(c.output_root)},
      {"corpus",
       {{"path", str(c.corpus_path)},
        {"problems", str(c.problems_path)},
        {"sample_problems", c.sample_problems},
        {"sample_n", c.sample_n}}},
      {"ast", {{"min_nodes", c.bounds.min_nodes}, {"max_nodes", c.bounds.max_nodes}}},
      {"sann", sann::to_json(c.sann)},
      {"vae", discovery::to_json(c.vae)},
      {"kc", {{"k", c.k}, {"threshold", c.threshold}, {"cap", c.target_cap}, {"max_iters", c.kmeans_max_iters}}},
      {"generate", {{"templates", str(c.template_dir)}}},
      {"llm", llm},
      {"evaluate",
       {{"ratings", str(c.ratings_path)}, {"pairs", str(c.pairs_path)}, {"wilcoxon", wilcoxon_name(c.wilcoxon)}}},
  };
}

PipelineConfig config_from_json(const Json& j, const std::filesystem::path& base) {
  PipelineConfig c;
  reject_unknown(j, "", {"seed", "output_root", "corpus", "ast", "sann", "vae", "kc", "generate", "llm", "evaluate"});
  read(j, "seed", c.seed, "");
  read_path(j, "output_root", c.output_root, "", base);
  if (!j.contains("output_root") && !base.empty()) c.output_root = base / c.output_root;

  const Json empty = Json::object();
  const Json& corpus = j.contains("corpus") ? j["corpus"] : empty;
  reject_unknown(corpus, "corpus", {"path", "problems", "sample_problems", "sample_n"});
  read_path(corpus, "path", c.corpus_path, "corpus", base);
  read_path(corpus, "problems", c.problems_path, "corpus", base);
  read(corpus, "sample_problems", c.sample_problems, "corpus");
  read(corpus, "sample_n", c.sample_n, "corpus");

  const Json& ast = j.contains("ast") ? j["ast"] : empty;
  reject_unknown(ast, "ast", {"min_nodes", "max_nodes"});
  read(ast, "min_nodes", c.bounds.min_nodes, "ast");
  read(ast, "max_nodes", c.bounds.max_nodes, "ast");

  const Json& sann = j.contains("sann") ? j["sann"] : empty;
  reject_unknown(sann, "sann", {"d_emb", "d_enc", "learning_rate", "epochs", "batch_size", "holdout_fraction"});
  read(sann, "d_emb", c.sann.d_emb, "sann");
  read(sann, "d_enc", c.sann.d_enc, "sann");
  read(sann, "learning_rate", c.sann.learning_rate, "sann");
  read(sann, "epochs", c.sann.epochs, "sann");
  read(sann, "batch_size", c.sann.batch_size, "sann");
  read(sann, "holdout_fraction", c.sann.holdout_fraction, "sann");

  const Json& vae = j.contains("vae") ? j["vae"] : empty;
  reject_unknown(vae, "vae", {"d_hidden", "d_z", "beta", "learning_rate", "epochs", "batch_size"});
  read(vae, "d_hidden", c.vae.d_hidden, "vae");
  read(vae, "d_z", c.vae.d_z, "vae");
  read(vae, "beta", c.vae.beta, "vae");
  read(vae, "learning_rate", c.vae.learning_rate, "vae");
  read(vae, "epochs", c.vae.epochs, "vae");
  read(vae, "batch_size", c.vae.batch_size, "vae");

  const Json& kc = j.contains("kc") ? j["kc"] : empty;
  reject_unknown(kc, "kc", {"k", "threshold", "cap", "max_iters"});
  read(kc, "k", c.k, "kc");
  read(kc, "threshold", c.threshold, "kc");
  read(kc, "cap", c.target_cap, "kc");
  read(kc, "max_iters", c.kmeans_max_iters, "kc");

  const Json& gen = j.contains("generate") ? j["generate"] : empty;
  reject_unknown(gen, "generate", {"templates"});
  read_path(gen, "templates", c.template_dir, "generate", base);

  const Json& llm = j.contains("llm") ? j["llm"] : empty;
  reject_unknown(llm, "llm", {"endpoint", "model", "api_key_env", "timeout_s", "max_retries", "parallelism",
                              "backoff_initial_s", "backoff_max_s"});
  c.llm = genkit::llm_config_from_json(llm, c.llm);

  const Json& ev = j.contains("evaluate") ? j["evaluate"] : empty;
  reject_unknown(ev, "evaluate", {"ratings", "pairs", "wilcoxon"});
  read_path(ev, "ratings", c.ratings_path, "evaluate", base);
  read_path(ev, "pairs", c.pairs_path, "evaluate", base);
  std::string mode = wilcoxon_name(c.wilcoxon);
  read(ev, "wilcoxon", mode, "evaluate");
  c.wilcoxon = wilcoxon_from(mode);

  validate(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return config_from_json(parse_toml(text), path.parent_path());
}

void validate(const PipelineConfig& c) {
  if (c.k < 1) throw ConfigError("kc.k must be at least 1");
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw ConfigError("kc.threshold must lie in (0, 1)");
  if (c.target_cap < 1) throw ConfigError("kc.cap must be at least 1");
  if (c.sample_n < 1) throw ConfigError("corpus.sample_n must be at least 1");
  if (c.bounds.min_nodes < 1 || c.bounds.min_nodes > c.bounds.max_nodes)
    throw ConfigError("ast bounds must satisfy 1 <= min_nodes <= max_nodes");
  if (c.sann.d_emb < 1 || c.sann.d_enc < 1 || c.sann.epochs < 0 || c.sann.batch_size < 1 ||
      !(c.sann.learning_rate > 0) || !(c.sann.holdout_fraction >= 0 && c.sann.holdout_fraction < 1))
    throw ConfigError("sann hyperparameters out of range");
  if (c.vae.d_hidden < 1 || c.vae.d_z < 2 || c.vae.epochs < 0 || c.vae.batch_size < 1 ||
      !(c.vae.learning_rate > 0) || !(c.vae.beta >= 0))
    throw ConfigError("vae hyperparameters out of range (d_z must be at least 2)");
  genkit::validate(c.llm);
}

std::string run_id(const PipelineConfig& c) { return sha256_hex(canonical_dump(to_json(c))).substr(0, 16); }

}  // namespace kc::pipeline
