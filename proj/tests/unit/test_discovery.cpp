#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"
#include "kc/discovery/inventory.hpp"
#include "kc/discovery/kmeans.hpp"
#include "kc/discovery/vae.hpp"
#include "planted_fixture.hpp"

using namespace kc;
using namespace kc::discovery;

namespace {

Eigen::VectorXd random_vec(Rng& rng, long n, double sd = 1.0) {
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = rng.normal(0.0, sd);
  return v;
}

sann::ScoredSubtree scored(Eigen::VectorXd enc, double attention, std::size_t begin = 0) {
  sann::ScoredSubtree s;
  s.encoding = std::move(enc);
  s.attention = attention;
  s.subtree.tokens = {"VAR"};
  s.subtree.kind = "BinaryExpression";
  s.subtree.span = ast::Span{begin, begin + 1};
  return s;
}

VaeModel random_vae(std::uint64_t seed, int d_in, int d_h, int d_z, double sd = 0.5) {
  VaeModel m(d_in, d_h, d_z);
  Rng rng(seed);
  for (long i = 0; i < m.params().size(); ++i) m.params()[i] = rng.normal(0.0, sd);
  return m;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

double brute_nearest_distance(const std::vector<Eigen::VectorXd>& cs, const Eigen::VectorXd& z, std::size_t* idx) {
  double best = 1e300;
  for (std::size_t c = 0; c < cs.size(); ++c) {
    double d = 0;
    for (long i = 0; i < z.size(); ++i) d += (cs[c][i] - z[i]) * (cs[c][i] - z[i]);
    if (d < best) {
      best = d;
      *idx = c;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("context representation") {
  Rng rng(1);
  const auto self = scored(random_vec(rng, 4), 0.7);
  const auto none = context_representation(self, {});
  REQUIRE(none.size() == 8);
  CHECK(none.head(4) == self.encoding);
  CHECK(none.tail(4).isZero(0.0));

  for (double a : {0.01, 0.5, 0.99}) {
    const std::vector<sann::ScoredSubtree> one{scored(random_vec(rng, 4), a)};
    CHECK((context_representation(self, one).tail(4) - one[0].encoding).norm() < 1e-15);
  }

  const std::vector<sann::ScoredSubtree> three{scored(random_vec(rng, 4), 0.2), scored(random_vec(rng, 4), 0.9),
                                               scored(random_vec(rng, 4), 0.55)};
  const auto rep = context_representation(self, three);
  for (long i = 0; i < 4; ++i) {
    const double num = 0.2 * three[0].encoding[i] + 0.9 * three[1].encoding[i] + 0.55 * three[2].encoding[i];
    CHECK(rep[4 + i] == doctest::Approx(num / (0.2 + 0.9 + 0.55)).epsilon(1e-14));
  }
  const auto all = context_representations(three);
  REQUIRE(all.size() == 3);
  CHECK(all[1] == context_representation(three[1], std::vector{three[0], three[2]}));
}

TEST_CASE("KL of the standard normal is zero") {
  CHECK(kl_standard_normal(Eigen::VectorXd::Zero(16), Eigen::VectorXd::Zero(16)) == 0.0);
  Eigen::VectorXd mu(1), lv(1);
  mu << 1.0;
  lv << std::log(2.0);
  CHECK(kl_standard_normal(mu, lv) == doctest::Approx(0.5 * (1.0 + 2.0 - 1.0 - std::log(2.0))));
}

TEST_CASE("encode_latent matches the encoder layers") {
  const auto m = random_vae(3, 6, 5, 3);
  Rng rng(4);
  const auto x = random_vec(rng, 6);
  const auto mu = encode_latent(m, x);
  const auto& p = m.params();
  const auto& bl = m.blocks();
  for (long z = 0; z < 3; ++z) {
    double acc = p[static_cast<long>(bl[3].offset) + z];
    for (long h = 0; h < 5; ++h) {
      double pre = p[static_cast<long>(bl[1].offset) + h];
      for (long i = 0; i < 6; ++i) pre += p[static_cast<long>(bl[0].offset) + i * 5 + h] * x[i];
      acc += p[static_cast<long>(bl[2].offset) + h * 3 + z] * std::tanh(pre);
    }
    CHECK(mu[z] == doctest::Approx(acc).epsilon(1e-13));
  }
  CHECK(encode_latent(m, x) == mu);
  CHECK_THROWS_AS(encode_latent(m, Eigen::VectorXd::Zero(5)), DataError);
}

TEST_CASE("VAE gradient matches central differences") {
  Rng rng(5);
  for (int draw = 0; draw < 20; ++draw) {
    auto m = random_vae(50 + static_cast<std::uint64_t>(draw), 5, 4, 3);
    const long n = 3;
    Eigen::MatrixXd x(5, n), eps(3, n);
    for (long c = 0; c < n; ++c) {
      x.col(c) = random_vec(rng, 5);
      eps.col(c) = random_vec(rng, 3);
    }
    const double beta = draw % 2 == 0 ? 1.0 : 0.3;
    Eigen::VectorXd grad;
    vae_objective(m, x, eps, beta, &grad);
    const double step = 1e-5;
    double worst = 0;
    for (long i = 0; i < m.params().size(); ++i) {
      const double saved = m.params()[i];
      m.params()[i] = saved + step;
      const double up = vae_objective(m, x, eps, beta, nullptr).loss;
      m.params()[i] = saved - step;
      const double down = vae_objective(m, x, eps, beta, nullptr).loss;
      m.params()[i] = saved;
      worst = std::max(worst, rel_err(grad[i], (up - down) / (2 * step)));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("VAE training") {
  Rng rng(6);
  Eigen::MatrixXd x(64, 100);
  for (long c = 0; c < 100; ++c) x.col(c) = random_vec(rng, 64).array().tanh().matrix();

  SUBCASE("beta = 0 reconstruction strictly decreases over the first 10 epochs") {
    VaeHyperparams hp;
    hp.beta = 0.0;
    hp.epochs = 10;
    const auto r = train_vae(x, hp, 7);
    const auto& rec = r.report.reconstruction_trace;
    REQUIRE(rec.size() == 10);
    for (std::size_t i = 1; i < rec.size(); ++i) CHECK(rec[i] < rec[i - 1]);
  }

  SUBCASE("per-sample mean is invariant under duplication") {
    const auto m = random_vae(8, 64, 64, 16, 0.1);
    Eigen::MatrixXd dup(64, 300);
    dup << x, x, x;
    const auto a = vae_evaluate(m, x, 1.0);
    const auto b = vae_evaluate(m, dup, 1.0);
    CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-12));
    CHECK(b.kl == doctest::Approx(a.kl).epsilon(1e-12));
  }

  SUBCASE("deterministic, finite, persisted") {
    VaeHyperparams hp;
    hp.epochs = 3;
    const auto a = train_vae(x, hp, 9);
    const auto b = train_vae(x, hp, 9);
    CHECK(a.model.checksum() == b.model.checksum());
    CHECK(a.report.elbo_trace == b.report.elbo_trace);
    CHECK(a.model.all_finite());
    const auto path = std::filesystem::temp_directory_path() / "kc_test_vae.bin";
    save_vae(path, a.model);
    const auto loaded = load_vae(path);
    CHECK(loaded.params() == a.model.params());
    CHECK(encode_latent(loaded, x.col(0)) == encode_latent(a.model, x.col(0)));
    std::filesystem::remove(path);
  }

  SUBCASE("bad inputs") {
    Eigen::MatrixXd bad = x;
    bad(3, 4) = std::nan("");
    CHECK_THROWS_AS(train_vae(bad, VaeHyperparams{}, 1), DataError);
    CHECK_THROWS_AS(train_vae(std::vector<Eigen::VectorXd>{}, VaeHyperparams{}, 1), DataError);
  }
}

TEST_CASE("k-means basics") {
  Rng rng(10);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 7; ++i) pts.push_back(random_vec(rng, 3));
  const auto r = kmeans_fit(pts, 7, 1);
  CHECK(r.converged);
  CHECK(r.inertia_trace.back() == 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(r.centroids[r.assignments[i]] == pts[i]);

  CHECK_THROWS_AS(kmeans_fit(pts, 8, 1), DataError);
  CHECK_THROWS_AS(kmeans_fit(pts, 0, 1), UsageError);
  std::vector<Eigen::VectorXd> dup(10, pts[0]);
  dup.push_back(pts[1]);
  CHECK_THROWS_AS(kmeans_fit(dup, 3, 1), DataError);
}

TEST_CASE("k-means recovers two blobs") {
  Rng rng(11);
  Eigen::VectorXd ma = Eigen::VectorXd::Zero(2), mb(2);
  mb << 1.0, 0.0;
  std::vector<Eigen::VectorXd> pts;
  Eigen::VectorXd sa = Eigen::VectorXd::Zero(2), sb = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 500; ++i) {
    pts.push_back(ma + random_vec(rng, 2, 0.05));
    sa += pts.back();
  }
  for (int i = 0; i < 500; ++i) {
    pts.push_back(mb + random_vec(rng, 2, 0.05));
    sb += pts.back();
  }
  sa /= 500;
  sb /= 500;
  const auto r = kmeans_fit(pts, 2, 12);
  REQUIRE(r.centroids.size() == 2);
  const bool order = r.centroids[0][0] < r.centroids[1][0];
  const auto& ca = order ? r.centroids[0] : r.centroids[1];
  const auto& cb = order ? r.centroids[1] : r.centroids[0];
  CHECK((ca - ma).norm() < 0.1);
  CHECK((cb - mb).norm() < 0.1);
  CHECK((ca - sa).norm() < 1e-12);
  CHECK((cb - sb).norm() < 1e-12);

  const auto again = kmeans_fit(pts, 2, 12);
  CHECK(again.centroids == r.centroids);
}

TEST_CASE("k-means inertia is monotone and the result is a fixpoint") {
  Rng rng(13);
  for (int ds = 0; ds < 50; ++ds) {
    const auto n = 60 + rng.uniform_index(140);
    const auto k = 2 + rng.uniform_index(12);
    const long dim = 1 + static_cast<long>(rng.uniform_index(5));
    std::vector<Eigen::VectorXd> pts;
    for (std::uint64_t i = 0; i < n; ++i) pts.push_back(random_vec(rng, dim));
    const auto r = kmeans_fit(pts, k, static_cast<std::uint64_t>(ds));
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
      CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1]);
    REQUIRE(r.converged);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(nearest_centroid(r.centroids, pts[i]) == r.assignments[i]);
  }
}

TEST_CASE("assign_kc") {
  Rng rng(14);
  KcInventory inv;
  inv.k = 50;
  inv.d_z = 16;
  for (int c = 0; c < 50; ++c) inv.centroids.push_back(random_vec(rng, 16));
  validate(inv);
  CHECK(assign_kc(inv, inv.centroids[17]) == 17);

  for (int q = 0; q < 1000; ++q) {
    const auto z = random_vec(rng, 16, 1.3);
    std::size_t idx = 0;
    brute_nearest_distance(inv.centroids, z, &idx);
    CHECK(assign_kc(inv, z) == idx);
  }
  CHECK_THROWS_AS(assign_kc(inv, Eigen::VectorXd::Zero(15)), DataError);

  // Equidistant from centroids 3 and 9.
  KcInventory tie = inv;
  tie.centroids[3] = Eigen::VectorXd::Zero(16);
  tie.centroids[9] = Eigen::VectorXd::Zero(16);
  tie.centroids[3][0] = 100.0;
  tie.centroids[9][0] = 102.0;
  Eigen::VectorXd mid = Eigen::VectorXd::Zero(16);
  mid[0] = 101.0;
  CHECK(assign_kc(tie, mid) == 3);
}

TEST_CASE("inventory JSON") {
  Rng rng(15);
  KcInventory inv;
  inv.k = 3;
  inv.d_z = 2;
  for (int c = 0; c < 3; ++c) inv.centroids.push_back(random_vec(rng, 2));
  inv.kc_meta[1] = KcMeta{"Boolean operator precedence", "Groups mixed operators with parentheses."};
  inv.provenance = Json{{"seed", 7}};
  const auto back = inventory_from_json(Json::parse(to_json(inv).dump()));
  CHECK(back.centroids == inv.centroids);
  CHECK(back.kc_meta.at(1).label == "Boolean operator precedence");
  CHECK(back.provenance == inv.provenance);

  auto j = to_json(inv);
  j["k"] = 4;
  CHECK_THROWS_AS(inventory_from_json(j), DataError);
  j = to_json(inv);
  j["centroids"][2] = j["centroids"][0];
  CHECK_THROWS_AS(inventory_from_json(j), DataError);
}

TEST_CASE("target deduplication") {
  Rng rng(16);
  std::vector<KcTarget> raw;
  raw.push_back(KcTarget{4, scored(random_vec(rng, 2), 0.6, 10), "a"});
  raw.push_back(KcTarget{4, scored(random_vec(rng, 2), 0.9, 30), "b"});
  raw.push_back(KcTarget{2, scored(random_vec(rng, 2), 0.7, 20), "c"});
  const auto out = dedupe_targets(raw, 5);
  REQUIRE(out.size() == 2);
  CHECK(out[0].kc_id == 4);
  CHECK(out[0].snippet == "b");
  CHECK(out[1].kc_id == 2);
  CHECK(dedupe_targets(raw, 1).size() == 1);
}

TEST_CASE("kc_targets composition") {
  const auto progs = testing::labeled_planted_corpus(200, 17);
  sann::Hyperparams hp;
  hp.epochs = 3;
  const auto model = sann::train_sann(progs, hp, 1).model;
  const auto vae = random_vae(18, 2 * model.d_enc(), 8, 4, 0.3);

  corpus::Submission sub;
  sub.submission_id = "s1";
  sub.code = "public int f(int[] nums, int n) {\n  int total = 0;\n  if (n > 2 && total < 10 || n == 3) {\n    total++;\n  }\n  return total;\n}\n";
  TargetOptions opt;
  opt.threshold = 0.999999;  // forces the single-best fallback
  const auto subtrees = ast::normalized_subtrees(sub.code);
  const auto high = sann::high_attention_subtrees(model, subtrees, opt.threshold);
  REQUIRE(high.size() == 1);
  const auto z = encode_latent(vae, context_representation(high[0], {}));

  Rng rng(19);
  KcInventory inv;
  inv.k = 8;
  inv.d_z = 4;
  for (int c = 0; c < 8; ++c) inv.centroids.push_back(random_vec(rng, 4) * 50.0);
  inv.centroids[5] = z;
  const auto a = kc_targets(sub, model, vae, inv, opt);
  REQUIRE(a.targets.size() == 1);
  CHECK(a.targets[0].kc_id == 5);
  CHECK(a.targets[0].snippet == ast::snippet_for(high[0].subtree.span, sub.code));
  CHECK(a.submission_id == "s1");

  const auto again = kc_targets(sub, model, vae, inv, opt);
  CHECK(to_json(again) == to_json(a));
  CHECK(assignment_from_json(to_json(a)).targets[0].kc_id == 5);

  corpus::Submission broken = sub;
  broken.code = "public int f( {";
  CHECK_THROWS_WITH_AS(kc_targets(broken, model, vae, inv, opt), doctest::Contains("s1"), DataError);
}

TEST_CASE("similar correct patterns embed nearby") {
  const auto progs = testing::labeled_planted_corpus(800, 21);
  const auto model = sann::train_sann(progs, sann::Hyperparams{}, 2).model;

  std::vector<Eigen::VectorXd> train;
  struct Tagged {
    int pattern;
    Eigen::VectorXd rep;
  };
  std::vector<Tagged> probes;
  for (const auto& prog : progs) {
    if (!prog.is_correct) continue;
    const auto pred = sann::predict_correctness(model, prog.subtrees);
    const auto high = sann::select_high_attention(pred.scored, 0.5);
    for (auto& rep : context_representations(high)) train.push_back(rep);
    // Smallest near-miss subtree of each type, placed in its program context.
    for (int p = 0; p < synth::kPlantedPatternCount; ++p) {
      const sann::ScoredSubtree* best = nullptr;
      for (const auto& s : pred.scored)
        if (synth::contains_sequence(s.subtree.tokens, synth::near_miss_sequence(p)) &&
            (!best || s.subtree.tokens.size() < best->subtree.tokens.size()))
          best = &s;
      if (best) probes.push_back(Tagged{p, context_representation(*best, high)});
    }
  }
  REQUIRE(probes.size() > 40);
  const auto vae = train_vae(train, VaeHyperparams{}, 3).model;
  std::vector<Eigen::VectorXd> z;
  for (const auto& t : probes) z.push_back(encode_latent(vae, t.rep));
  double intra = 0, inter = 0;
  std::size_t ni = 0, nx = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      const double d = (z[i] - z[j]).norm();
      if (probes[i].pattern == probes[j].pattern) {
        intra += d;
        ++ni;
      } else {
        inter += d;
        ++nx;
      }
    }
  MESSAGE("intra " << intra / ni << " inter " << inter / nx);
  CHECK(intra / static_cast<double>(ni) < inter / static_cast<double>(nx));
}
