// One line per acceptance criterion; exit status is non-zero if any fails.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"
#include "kc/discovery/inventory.hpp"
#include "kc/discovery/kmeans.hpp"
#include "kc/discovery/vae.hpp"
#include "kc/eval/rubric.hpp"
#include "kc/eval/stats.hpp"
#include "kc/genkit/coverage.hpp"
#include "kc/genkit/prompts.hpp"
#include "kc/genkit/response.hpp"
#include "kc/pipeline/pipeline.hpp"
#include "kc/pipeline/stages.hpp"
#include "kc/sann/sann.hpp"
#include "planted_fixture.hpp"
#include "stub_llm.hpp"

using namespace kc;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures(KC_FIXTURE_DIR);
const fs::path kCorpus = fs::path(KC_DATA_DIR) / "synthetic" / "submissions.jsonl";

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("kc_accept_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

Eigen::VectorXd random_vec(Rng& rng, long n, double sd = 1.0) {
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = rng.normal(0.0, sd);
  return v;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    if (nl == std::string::npos) nl = s.size();
    out.push_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

// ---- determinism ----

void determinism(Outcome& o) {
  TempDir a("det_a"), b("det_b");
  const std::vector stages{pipeline::Stage::Sample, pipeline::Stage::Discover, pipeline::Stage::Infer};
  double slowest = 0;
  auto run = [&](const fs::path& root) {
    const auto start = std::chrono::steady_clock::now();
    pipeline::PipelineConfig c;
    c.corpus_path = kCorpus;
    c.output_root = root;
    auto m = pipeline::run_pipeline(c, stages);
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return m;
  };
  const auto m1 = run(a.path());
  const auto m2 = run(b.path());
  const auto& inv1 = m1.stages.at("discover").outputs.at("inventory");
  const auto& as1 = m1.stages.at("infer").outputs.at("assignments");
  const bool same_inventory = read_file(a.path() / inv1.path) ==
                              read_file(b.path() / m2.stages.at("discover").outputs.at("inventory").path);
  const bool same_assignments =
      read_file(a.path() / as1.path) == read_file(b.path() / m2.stages.at("infer").outputs.at("assignments").path);
  o.detail << "inventory " << inv1.sha256.substr(0, 12) << ", assignments " << as1.sha256.substr(0, 12) << ", "
           << "slowest run " << slowest << " s";
  o.require(same_inventory, "inventory bytes differ");
  o.require(same_assignments, "assignment bytes differ");
  o.require(slowest < 300, "a run took 5 min or more");
}

// ---- planted-pattern discovery ----

void planted(Outcome& o) {
  const auto programs = testing::labeled_planted_corpus(2000, 2019);
  const auto result = sann::train_sann(programs, sann::Hyperparams{}, 7);
  const auto split = testing::attention_split(result.model, programs);
  const double margin = split.planted_mean - split.other_mean;
  o.detail << "holdout accuracy " << result.report.holdout_accuracy << " (n = " << result.report.holdout_size
           << "), attention planted " << split.planted_mean << " vs other " << split.other_mean;
  o.require(result.report.holdout_accuracy >= 0.90, "holdout accuracy >= 0.90");
  o.require(margin >= 0.15, "attention margin >= 0.15");
}

// ---- gradient checks ----

ast::NormalizedSubtree token_subtree(std::vector<std::string> tokens) {
  ast::NormalizedSubtree s;
  s.tokens = std::move(tokens);
  s.kind = "BinaryExpression";
  s.span = ast::Span{0, 10};
  return s;
}

void gradients(Outcome& o) {
  Rng rng(17);
  double worst_sann = 0;
  for (int draw = 0; draw < 20; ++draw) {
    sann::Vocabulary v;
    for (const char* t : {"=", ";", "+", "<", "(", ")", "if", "==", "&&", "||"}) v.add(t);
    sann::SannModel m(v, 4, 3);
    Rng init(200 + static_cast<std::uint64_t>(draw));
    for (long i = 0; i < m.params().size(); ++i) m.params()[i] = init.normal(0.0, 0.7);
    const auto& vocab = m.vocab().tokens();
    std::vector<sann::LabeledProgram> batch;
    for (int p = 0; p < 3; ++p) {
      sann::LabeledProgram prog;
      prog.is_correct = rng.uniform01() < 0.5;
      const auto n = 1 + rng.uniform_index(3);
      for (std::uint64_t s = 0; s < n; ++s) {
        std::vector<std::string> toks;
        const auto len = 1 + rng.uniform_index(5);
        for (std::uint64_t t = 0; t < len; ++t) toks.push_back(vocab[rng.uniform_index(vocab.size())]);
        prog.subtrees.push_back(token_subtree(toks));
      }
      batch.push_back(prog);
    }
    Eigen::VectorXd grad;
    sann::batch_loss(m, batch, &grad);
    for (long i = 0; i < m.params().size(); ++i) {
      const double saved = m.params()[i];
      m.params()[i] = saved + 1e-5;
      const double up = sann::batch_loss(m, batch, nullptr);
      m.params()[i] = saved - 1e-5;
      const double down = sann::batch_loss(m, batch, nullptr);
      m.params()[i] = saved;
      worst_sann = std::max(worst_sann, rel_err(grad[i], (up - down) / 2e-5));
    }
  }

  double worst_vae = 0;
  for (int draw = 0; draw < 20; ++draw) {
    discovery::VaeModel m(5, 4, 3);
    Rng init(50 + static_cast<std::uint64_t>(draw));
    for (long i = 0; i < m.params().size(); ++i) m.params()[i] = init.normal(0.0, 0.5);
    Eigen::MatrixXd x(5, 3), eps(3, 3);
    for (long c = 0; c < 3; ++c) {
      x.col(c) = random_vec(rng, 5);
      eps.col(c) = random_vec(rng, 3);
    }
    const double beta = draw % 2 == 0 ? 1.0 : 0.3;
    Eigen::VectorXd grad;
    discovery::vae_objective(m, x, eps, beta, &grad);
    for (long i = 0; i < m.params().size(); ++i) {
      const double saved = m.params()[i];
      m.params()[i] = saved + 1e-5;
      const double up = discovery::vae_objective(m, x, eps, beta, nullptr).loss;
      m.params()[i] = saved - 1e-5;
      const double down = discovery::vae_objective(m, x, eps, beta, nullptr).loss;
      m.params()[i] = saved;
      worst_vae = std::max(worst_vae, rel_err(grad[i], (up - down) / 2e-5));
    }
  }
  o.detail << "20 draws each, worst relative error SANN " << worst_sann << ", VAE " << worst_vae;
  o.require(worst_sann < 1e-4, "SANN gradient");
  o.require(worst_vae < 1e-4, "VAE gradient");
}

// ---- clustering ----

void clustering(Outcome& o) {
  Rng rng(13);
  std::size_t monotone = 0, fixpoints = 0;
  for (int ds = 0; ds < 50; ++ds) {
    const auto n = 60 + rng.uniform_index(140);
    const auto k = 2 + rng.uniform_index(12);
    const long dim = 1 + static_cast<long>(rng.uniform_index(5));
    std::vector<Eigen::VectorXd> pts;
    for (std::uint64_t i = 0; i < n; ++i) pts.push_back(random_vec(rng, dim));
    const auto r = discovery::kmeans_fit(pts, k, static_cast<std::uint64_t>(ds));
    bool mono = true;
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) mono &= r.inertia_trace[i] <= r.inertia_trace[i - 1];
    monotone += mono;
    bool fix = r.converged;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t c = 0; c < r.centroids.size(); ++c) {
        const double d = (pts[i] - r.centroids[c]).squaredNorm();
        if (d < best_d) best_d = d, best = c;
      }
      fix &= best == r.assignments[i];
    }
    fixpoints += fix;
  }

  discovery::KcInventory inv;
  inv.k = 50;
  inv.d_z = 16;
  for (int c = 0; c < 50; ++c) inv.centroids.push_back(random_vec(rng, 16));
  std::size_t agree = 0;
  for (int q = 0; q < 1000; ++q) {
    const auto z = random_vec(rng, 16, 1.3);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < 50; ++c) {
      double d = 0;
      for (long i = 0; i < 16; ++i) d += (inv.centroids[c][i] - z[i]) * (inv.centroids[c][i] - z[i]);
      if (d < best_d) best_d = d, best = c;
    }
    agree += discovery::assign_kc(inv, z) == best;
  }

  // The inventory a default discover run produces on the bundled corpus.
  TempDir dir("inventory");
  pipeline::PipelineConfig c;
  c.corpus_path = kCorpus;
  c.output_root = dir.path();
  const auto m = pipeline::run_pipeline(c, std::vector{pipeline::Stage::Discover});
  const auto produced = discovery::inventory_from_json(
      Json::parse(read_file(dir.path() / m.stages.at("discover").outputs.at("inventory").path)));

  o.detail << monotone << "/50 monotone, " << fixpoints << "/50 fixpoints, " << agree
           << "/1000 assign_kc agreements, default inventory k = " << produced.k << " with "
           << produced.centroids.size() << " centroids";
  o.require(monotone == 50, "inertia monotone");
  o.require(fixpoints == 50, "fixpoints");
  o.require(agree == 1000, "assign_kc vs brute force");
  o.require(produced.k == 50 && produced.centroids.size() == 50, "inventory of 50 centroids");
}

// ---- statistics oracles ----

double kappa_direct(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  double po = 0, pe = 0;
  for (std::size_t i = 0; i < a.size(); ++i) po += a[i] == b[i];
  po /= n;
  for (int c = 0; c <= 2; ++c) {
    double ca = 0, cb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ca += a[i] == c, cb += b[i] == c;
    pe += (ca / n) * (cb / n);
  }
  return pe == 1.0 ? 1.0 : (po - pe) / (1 - pe);
}

double enumerated_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  if (d.empty()) return 1.0;
  std::vector<double> rank(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double below = 0, equal = 0;
    for (double v : d) below += std::abs(v) < std::abs(d[i]), equal += std::abs(v) == std::abs(d[i]);
    rank[i] = below + (equal + 1) / 2;
  }
  const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
  double wp = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) wp += rank[i];
  const double w = std::min(wp, total - wp);
  double extreme = 0;
  for (std::uint64_t mask = 0; mask < (1ull << d.size()); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (mask >> i & 1) s += rank[i];
    if (std::min(s, total - s) <= w + 1e-9) extreme += 1;
  }
  return std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(d.size())));
}

void statistics(Outcome& o) {
  Rng rng(2024);
  double worst_p = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(12);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = trial % 2 == 0 ? static_cast<double>(rng.uniform_index(3)) : rng.normal();
      y[i] = trial % 2 == 0 ? static_cast<double>(rng.uniform_index(3)) : rng.normal(0.3, 1.0);
    }
    worst_p = std::max(worst_p, std::abs(eval::wilcoxon_signed_rank(x, y, eval::WilcoxonMode::Exact).p_value -
                                         enumerated_p(x, y)));
  }
  double worst_k = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(40);
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.uniform_index(3));
      b[i] = rng.uniform01() < 0.6 ? a[i] : static_cast<int>(rng.uniform_index(3));
    }
    worst_k = std::max(worst_k, std::abs(eval::cohen_kappa(a, b) - kappa_direct(a, b)));
  }
  const auto holm = eval::holm_correct(std::vector<double>{0.01, 0.04, 0.03});
  const bool holm_ok = holm.size() == 3 && std::abs(holm[0] - 0.03) < 1e-12 && std::abs(holm[1] - 0.06) < 1e-12 &&
                       std::abs(holm[2] - 0.06) < 1e-12;
  const auto ratings = eval::load_ratings(kFixtures / "eval" / "ratings.jsonl");
  const auto specs = eval::load_pairs(kFixtures / "eval" / "pairs.jsonl");
  const auto table = eval::to_text(eval::summarize(eval::build_pairs(ratings, specs), ratings));
  const bool golden = table == read_file(kFixtures / "eval" / "summary_golden.txt");
  o.detail << "worst |p - enumeration| " << worst_p << ", worst kappa error " << worst_k << ", holm ["
           << (holm.size() == 3 ? std::to_string(holm[0]) + ", " + std::to_string(holm[1]) + ", " +
                                      std::to_string(holm[2])
                                : "?")
           << "], golden table " << (golden ? "identical" : "differs");
  o.require(worst_p <= 1e-12, "exact wilcoxon");
  o.require(worst_k <= 1e-12, "kappa");
  o.require(holm_ok, "holm");
  o.require(golden, "golden table");
}

// ---- format contract ----

void format_contract(Outcome& o) {
  using namespace genkit;
  const auto fixture = [](const char* name) { return read_file(kFixtures / "genkit" / name); };
  const auto steps_of = [&](const char* name) -> long {
    try {
      return static_cast<long>(parse_worked_example(fixture(name), Variant::Baseline, {}).steps.size());
    } catch (const DataError&) {
      return -1;
    }
  };
  const long s3 = steps_of("steps_3.txt"), s10 = steps_of("steps_10.txt");
  const long s2 = steps_of("steps_2.txt"), s11 = steps_of("steps_11.txt"), prose = steps_of("prose_step3.txt");

  const auto t = load_templates(default_template_dir());
  const corpus::Problem problem{"fix45", "fix45", "Return an array where every 4 is immediately followed by a 5."};
  corpus::Submission sub;
  sub.submission_id = "43552";
  sub.student_id = "u1";
  sub.problem_id = "fix45";
  sub.code = read_file(kFixtures / "java" / "fix45_excerpt.java");
  KcLabel target;
  target.kc_id = 7;
  target.label = "Boolean operator precedence";
  target.description = "The student mixes && and || without parentheses.";
  const auto base = build_worked_example_prompt(t, problem, sub, Variant::Baseline, {});
  const auto cond = build_worked_example_prompt(t, problem, sub, Variant::KcConditioned, std::vector<KcLabel>{target});
  const auto bl = lines_of(base.user_text), cl = lines_of(cond.user_text);
  std::size_t pre = 0, suf = 0;
  while (pre < bl.size() && pre < cl.size() && bl[pre] == cl[pre]) ++pre;
  while (suf < bl.size() - pre && suf < cl.size() - pre && bl[bl.size() - 1 - suf] == cl[cl.size() - 1 - suf]) ++suf;
  std::vector<std::string> added(cl.begin() + static_cast<long>(pre), cl.end() - static_cast<long>(suf));
  while (!added.empty() && added.front().empty()) added.erase(added.begin());
  while (!added.empty() && added.back().empty()) added.pop_back();
  const bool only_block = base.system_text == cond.system_text && bl.size() == pre + suf && added.size() >= 2 &&
                          added.front() == kKcSectionBegin && added.back() == kKcSectionEnd;

  const auto label_ok = [](const std::string& label) {
    try {
      parse_enrichment_response("LABEL: " + label + "\nDESC: A pattern.");
      return true;
    } catch (const DataError&) {
      return false;
    }
  };
  const bool words_ok = !label_ok("Loops") && label_ok("Loop bounds") && label_ok("one two three four five six") &&
                        !label_ok("one two three four five six seven");

  o.detail << "steps 3/10 -> " << s3 << "/" << s10 << ", 2/11/missing code rejected "
           << (s2 < 0 && s11 < 0 && prose < 0 ? "yes" : "no") << ", prompts differ only in the KC block "
           << (only_block ? "yes" : "no") << ", label word bounds " << (words_ok ? "enforced" : "not enforced");
  o.require(s3 == 3 && s10 == 10, "accept 3 and 10 steps");
  o.require(s2 < 0 && s11 < 0 && prose < 0, "reject 2, 11 and code-less steps");
  o.require(only_block, "prompt diff");
  o.require(words_ok, "label length");
}

// ---- end-to-end stub run ----

void end_to_end(Outcome& o) {
  ::setenv("KC_ACCEPTANCE_KEY", "sk-accept", 1);
  testing::StubLlmServer stub(testing::canned_handler(read_file(kFixtures / "genkit" / "precedence_worked_example.txt")));
  TempDir dir("e2e");
  pipeline::PipelineConfig c;
  c.corpus_path = kCorpus;
  c.output_root = dir.path();
  c.sample_n = 5;
  c.llm.endpoint = stub.endpoint();
  c.llm.api_key_env = "KC_ACCEPTANCE_KEY";
  const auto m = pipeline::run_pipeline(
      c, std::vector{pipeline::Stage::Sample, pipeline::Stage::Discover, pipeline::Stage::Infer,
                     pipeline::Stage::Enrich, pipeline::Stage::Generate});
  std::size_t submissions = 0, examples = 0;
  for_each_jsonl(dir.path() / m.stages.at("sample").outputs.at("submissions").path,
                 [&](std::size_t, const Json&) { ++submissions; });
  for_each_jsonl(dir.path() / m.stages.at("generate").outputs.at("worked_examples").path,
                 [&](std::size_t, const Json& j) {
                   const auto g = pipeline::generated_from_json(j);
                   examples += !g.example.steps.empty();
                 });
  ::unsetenv("KC_ACCEPTANCE_KEY");

  const auto cases = Json::parse(read_file(kFixtures / "genkit" / "coverage_cases.json"));
  std::size_t agree = 0;
  for (const auto& cs : cases) {
    const auto w = genkit::worked_example_from_json(cs.at("example"));
    const auto r = genkit::kc_coverage_heuristic(w, std::vector<genkit::KcLabel>{genkit::kc_label_from_json(cs.at("target"))});
    agree += r.targets[0].in_code == cs.at("hand").at("in_code").get<bool>() &&
             r.targets[0].in_text == cs.at("hand").at("in_text").get<bool>();
  }
  o.detail << submissions << " submissions -> " << examples << " parsed worked examples, coverage heuristic agrees on "
           << agree << "/" << cases.size() << " hand-labeled fixtures";
  o.require(submissions == 10 && examples == 20, "10 submissions give 20 worked examples");
  o.require(cases.size() == 20 && agree >= 18, "coverage agreement >= 18/20");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"determinism", determinism},
      {"planted-pattern discovery", planted},
      {"gradient checks", gradients},
      {"clustering", clustering},
      {"statistics oracles", statistics},
      {"format contract", format_contract},
      {"end-to-end stub run", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
