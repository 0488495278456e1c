#include "kc/sann/sann.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"

namespace kc::sann {

namespace {

// Wide embeddings keep early encodings apart; a positive attention bias
// starts every subtree attended (a ~ 0.95) so training mostly suppresses.
constexpr double kEmbeddingScale = 3.0;
constexpr double kInitialAttentionBias = 3.0;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(z)) - y z, evaluated without overflow.
double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

struct SubtreeCache {
  std::vector<std::size_t> token_ids;
  Eigen::VectorXd mean_emb;
  Eigen::VectorXd enc;
  double attention = 0.0;
};

void forward_subtree(const SannModel& m, std::span<const std::string> tokens, SubtreeCache& c) {
  if (tokens.empty()) throw DataError("encode_subtree: empty token list");
  c.token_ids.clear();
  c.mean_emb = Eigen::VectorXd::Zero(m.d_emb());
  const auto emb = m.embeddings();
  for (const auto& t : tokens) {
    const std::size_t id = m.vocab().index(t);
    c.token_ids.push_back(id);
    c.mean_emb += emb.col(static_cast<long>(id));
  }
  c.mean_emb /= static_cast<double>(tokens.size());
  c.enc = (m.enc_weight() * c.mean_emb + m.enc_bias()).array().tanh().matrix();
  c.attention = sigmoid(m.att_weight().dot(c.enc) + m.att_bias());
}

struct ProgramForward {
  std::vector<SubtreeCache> subs;
  Eigen::VectorXd pooled;
  double att_sum = 0.0;
  double logit = 0.0;
};

void forward_program(const SannModel& m, std::span<const ast::NormalizedSubtree> subtrees,
                     ProgramForward& f) {
  if (subtrees.empty()) throw DataError("predict_correctness: empty subtree list");
  f.subs.resize(subtrees.size());
  f.pooled = Eigen::VectorXd::Zero(m.d_enc());
  f.att_sum = 0.0;
  for (std::size_t i = 0; i < subtrees.size(); ++i) {
    forward_subtree(m, subtrees[i].tokens, f.subs[i]);
    f.pooled += f.subs[i].attention * f.subs[i].enc;
    f.att_sum += f.subs[i].attention;
  }
  f.pooled /= f.att_sum;
  f.logit = m.cls_weight().dot(f.pooled) + m.cls_bias();
}

// Accumulates scale * d(BCE)/d(params) for one program into grad.
void backward_program(const SannModel& m, const ProgramForward& f, double y, double scale,
                      Eigen::VectorXd& grad) {
  const long d_enc = m.d_enc();
  const long d_emb = m.d_emb();
  const double dz = (sigmoid(f.logit) - y) * scale;

  grad.segment(static_cast<long>(m.offset_cls_weight()), d_enc) += dz * f.pooled;
  grad[static_cast<long>(m.offset_cls_bias())] += dz;
  const Eigen::VectorXd d_pooled = dz * m.cls_weight();

  Eigen::Map<Eigen::MatrixXd> g_emb(grad.data() + m.offset_embeddings(), d_emb,
                                    static_cast<long>(m.vocab().size()));
  Eigen::Map<Eigen::MatrixXd> g_w(grad.data() + m.offset_enc_weight(), d_enc, d_emb);
  auto g_b = grad.segment(static_cast<long>(m.offset_enc_bias()), d_enc);
  auto g_wa = grad.segment(static_cast<long>(m.offset_att_weight()), d_enc);
  double& g_ba = grad[static_cast<long>(m.offset_att_bias())];

  for (const auto& s : f.subs) {
    // p = S / A:  dp/da_i = (h_i - p) / A,  dp/dh_i = a_i / A
    const double d_att = d_pooled.dot(s.enc - f.pooled) / f.att_sum;
    const double d_att_logit = d_att * s.attention * (1.0 - s.attention);
    g_wa += d_att_logit * s.enc;
    g_ba += d_att_logit;
    const Eigen::VectorXd d_enc_vec = d_pooled * (s.attention / f.att_sum) + d_att_logit * m.att_weight();
    const Eigen::VectorXd d_pre = d_enc_vec.array() * (1.0 - s.enc.array().square());
    g_w += d_pre * s.mean_emb.transpose();
    g_b += d_pre;
    const Eigen::VectorXd d_mean = m.enc_weight().transpose() * d_pre;
    const double inv_len = 1.0 / static_cast<double>(s.token_ids.size());
    for (std::size_t id : s.token_ids) g_emb.col(static_cast<long>(id)) += d_mean * inv_len;
  }
}

}  // namespace

// ---- hyperparameters ---------------------------------------------------------

Json to_json(const Hyperparams& hp) {
  return Json{{"d_emb", hp.d_emb},
              {"d_enc", hp.d_enc},
              {"learning_rate", hp.learning_rate},
              {"epochs", hp.epochs},
              {"batch_size", hp.batch_size},
              {"holdout_fraction", hp.holdout_fraction}};
}

Hyperparams hyperparams_from_json(const Json& j) {
  Hyperparams hp;
  hp.d_emb = j.value("d_emb", hp.d_emb);
  hp.d_enc = j.value("d_enc", hp.d_enc);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.epochs = j.value("epochs", hp.epochs);
  hp.batch_size = j.value("batch_size", hp.batch_size);
  hp.holdout_fraction = j.value("holdout_fraction", hp.holdout_fraction);
  return hp;
}

// ---- vocabulary ---------------------------------------------------------------

Vocabulary::Vocabulary() {
  add(kOov);
  for (auto p : {ast::placeholder::kVar, ast::placeholder::kNum, ast::placeholder::kStr,
                 ast::placeholder::kCall, ast::placeholder::kType}) {
    add(p);
  }
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.empty() || tokens.front() != kOov)
    throw DataError("vocabulary must start with the out-of-vocabulary token");
  for (auto& t : tokens) add(t);
}

void Vocabulary::add(std::string_view token) {
  if (index_.find(token) != index_.end()) return;
  index_.emplace(std::string(token), tokens_.size());
  tokens_.emplace_back(token);
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

Vocabulary build_vocabulary(std::span<const LabeledProgram> programs) {
  Vocabulary v;
  for (const auto& p : programs)
    for (const auto& s : p.subtrees)
      for (const auto& t : s.tokens) v.add(t);
  return v;
}

// ---- model ----------------------------------------------------------------------

SannModel::SannModel(Vocabulary vocab, int d_emb, int d_enc)
    : vocab_(std::move(vocab)), d_emb_(d_emb), d_enc_(d_enc) {
  if (d_emb < 1 || d_enc < 1) throw UsageError("SANN dimensions must be positive");
  std::size_t off = 0;
  off_emb_ = off;
  off += static_cast<std::size_t>(d_emb) * vocab_.size();
  off_w_ = off;
  off += static_cast<std::size_t>(d_enc) * d_emb;
  off_b_ = off;
  off += d_enc;
  off_wa_ = off;
  off += d_enc;
  off_ba_ = off;
  off += 1;
  off_wc_ = off;
  off += d_enc;
  off_bc_ = off;
  off += 1;
  params_ = Eigen::VectorXd::Zero(static_cast<long>(off));
}

void SannModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  params_.setZero();
  auto emb = embeddings();
  for (long c = 0; c < emb.cols(); ++c)
    for (long r = 0; r < emb.rows(); ++r) emb(r, c) = rng.normal(0.0, kEmbeddingScale);
  const double limit = std::sqrt(6.0 / (d_emb_ + d_enc_));
  auto w = enc_weight();
  for (long c = 0; c < w.cols(); ++c)
    for (long r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
  auto wa = att_weight();
  for (long i = 0; i < wa.size(); ++i) wa[i] = rng.normal(0.0, 0.1);
  auto wc = cls_weight();
  for (long i = 0; i < wc.size(); ++i) wc[i] = rng.normal(0.0, 0.1);
  att_bias() = kInitialAttentionBias;
}

void SannModel::round_to_float32() {
  for (long i = 0; i < params_.size(); ++i) params_[i] = round_to_float(params_[i]);
}

std::string SannModel::checksum() const {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(params_.size()) * 4);
  for (long i = 0; i < params_.size(); ++i) {
    const float f = static_cast<float>(params_[i]);
    char b[4];
    std::memcpy(b, &f, 4);
    bytes.append(b, 4);
  }
  return sha256_hex(bytes);
}

// ---- inference -----------------------------------------------------------------

Eigen::VectorXd encode_subtree(const SannModel& model, std::span<const std::string> tokens) {
  SubtreeCache c;
  forward_subtree(model, tokens, c);
  return c.enc;
}

double attention_weight(const SannModel& model, const Eigen::VectorXd& encoding) {
  if (encoding.size() != model.d_enc())
    throw DataError("attention_weight: encoding has dimension " + std::to_string(encoding.size()) +
                    ", expected " + std::to_string(model.d_enc()));
  return sigmoid(model.att_weight().dot(encoding) + model.att_bias());
}

Prediction predict_correctness(const SannModel& model,
                               std::span<const ast::NormalizedSubtree> subtrees) {
  ProgramForward f;
  forward_program(model, subtrees, f);
  Prediction p;
  p.probability = sigmoid(f.logit);
  p.scored.reserve(subtrees.size());
  for (std::size_t i = 0; i < subtrees.size(); ++i)
    p.scored.push_back(ScoredSubtree{subtrees[i], f.subs[i].enc, f.subs[i].attention});
  return p;
}

std::vector<ScoredSubtree> select_high_attention(std::vector<ScoredSubtree> scored,
                                                 double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw UsageError("attention threshold must lie in (0, 1)");
  if (scored.empty()) return {};
  std::vector<ScoredSubtree> out;
  for (auto& s : scored)
    if (s.attention >= threshold) out.push_back(s);
  if (out.empty()) {
    auto best = std::max_element(scored.begin(), scored.end(),
                                 [](const auto& a, const auto& b) { return a.attention < b.attention; });
    out.push_back(*best);
    return out;
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredSubtree& a, const ScoredSubtree& b) {
    if (a.subtree.span.begin != b.subtree.span.begin)
      return a.subtree.span.begin < b.subtree.span.begin;
    return a.subtree.span.end > b.subtree.span.end;
  });
  return out;
}

std::vector<ScoredSubtree> high_attention_subtrees(
    const SannModel& model, std::span<const ast::NormalizedSubtree> subtrees, double threshold) {
  if (subtrees.empty()) return {};
  return select_high_attention(predict_correctness(model, subtrees).scored, threshold);
}

// ---- training ------------------------------------------------------------------

double batch_loss(const SannModel& model, std::span<const LabeledProgram> batch,
                  Eigen::VectorXd* grad) {
  if (batch.empty()) throw DataError("batch_loss: empty batch");
  if (grad) *grad = Eigen::VectorXd::Zero(model.params().size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  ProgramForward f;
  for (const auto& p : batch) {
    forward_program(model, p.subtrees, f);
    const double y = p.is_correct ? 1.0 : 0.0;
    loss += bce_with_logit(f.logit, y);
    if (grad) backward_program(model, f, y, scale, *grad);
  }
  return loss * scale;
}

double accuracy(const SannModel& model, std::span<const LabeledProgram> programs) {
  if (programs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : programs) {
    const bool predicted = predict_correctness(model, p.subtrees).probability >= 0.5;
    hits += predicted == p.is_correct;
  }
  return static_cast<double>(hits) / static_cast<double>(programs.size());
}

TrainResult train_sann(std::span<const LabeledProgram> programs, const Hyperparams& hp,
                       std::uint64_t seed) {
  std::vector<LabeledProgram> usable;
  for (const auto& p : programs)
    if (!p.subtrees.empty()) usable.push_back(p);
  const auto positives = std::count_if(usable.begin(), usable.end(),
                                       [](const auto& p) { return p.is_correct; });
  if (positives == 0 || positives == static_cast<long>(usable.size()))
    throw DataError("train_sann needs both correct and incorrect programs");
  if (hp.batch_size < 1 || hp.epochs < 0 || !(hp.learning_rate > 0))
    throw UsageError("invalid SANN training hyperparameters");

  Rng rng(derive_seed(seed, 1));
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  auto holdout_n = static_cast<std::size_t>(std::floor(hp.holdout_fraction * usable.size()));
  holdout_n = std::min(holdout_n, usable.size() - 2);
  std::vector<LabeledProgram> train, holdout;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < order.size() - holdout_n ? train : holdout).push_back(usable[order[i]]);
  const auto train_pos = std::count_if(train.begin(), train.end(), [](const auto& p) { return p.is_correct; });
  if (train_pos == 0 || train_pos == static_cast<long>(train.size()))
    throw DataError("training split lost one of the labels; lower holdout_fraction");

  TrainResult result;
  result.model = SannModel(build_vocabulary(train), hp.d_emb, hp.d_enc);
  result.model.initialize(derive_seed(seed, 2));
  SannModel& model = result.model;

  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<LabeledProgram> batch;
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(hp.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train[idx[k]]);
      batch_loss(model, batch, &grad);
      model.params() -= hp.learning_rate * grad;
    }
    if (!model.all_finite()) throw DataError("SANN training diverged (non-finite parameters)");
    result.report.loss_trace.push_back(batch_loss(model, train, nullptr));
  }
  model.round_to_float32();

  result.report.train_size = train.size();
  result.report.holdout_size = holdout.size();
  result.report.train_accuracy = accuracy(model, train);
  result.report.holdout_accuracy = accuracy(model, holdout);
  for (const auto& p : holdout) result.report.holdout_ids.push_back(p.id);
  model.meta = Json{{"kind", "sann"},
                    {"hyperparams", to_json(hp)},
                    {"seed", seed},
                    {"loss_trace", result.report.loss_trace},
                    {"train_accuracy", result.report.train_accuracy},
                    {"holdout_accuracy", result.report.holdout_accuracy},
                    {"train_size", result.report.train_size},
                    {"holdout_size", result.report.holdout_size}};
  return result;
}

// ---- persistence ---------------------------------------------------------------

TensorFile to_tensor_file(const SannModel& model) {
  TensorFile f;
  f.meta = model.meta.is_null() ? Json::object() : model.meta;
  f.meta["kind"] = "sann";
  f.meta["d_emb"] = model.d_emb();
  f.meta["d_enc"] = model.d_enc();
  f.vocab = model.vocab().tokens();
  auto push = [&](std::string name, std::vector<std::size_t> shape, std::size_t off) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    NamedTensor t{std::move(name), std::move(shape), {}};
    t.values.assign(model.params().data() + off, model.params().data() + off + n);
    f.tensors.push_back(std::move(t));
  };
  const auto e = static_cast<std::size_t>(model.d_emb());
  const auto h = static_cast<std::size_t>(model.d_enc());
  // Column-major storage: "embeddings" shape is [V, d_emb] rows of one token.
  push("embeddings", {model.vocab().size(), e}, model.offset_embeddings());
  push("enc_weight", {e, h}, model.offset_enc_weight());
  push("enc_bias", {h}, model.offset_enc_bias());
  push("att_weight", {h}, model.offset_att_weight());
  push("att_bias", {1}, model.offset_att_bias());
  push("cls_weight", {h}, model.offset_cls_weight());
  push("cls_bias", {1}, model.offset_cls_bias());
  return f;
}

SannModel from_tensor_file(const TensorFile& f) {
  if (f.meta.value("kind", "") != "sann") throw DataError("artifact is not a SANN model");
  SannModel m(Vocabulary(f.vocab), f.meta.at("d_emb").get<int>(), f.meta.at("d_enc").get<int>());
  auto load = [&](const std::string& name, std::size_t off, std::size_t n) {
    const auto& t = f.tensor(name);
    if (t.values.size() != n) throw DataError("tensor '" + name + "' has the wrong size");
    std::copy(t.values.begin(), t.values.end(), m.params().data() + off);
  };
  const auto e = static_cast<std::size_t>(m.d_emb());
  const auto h = static_cast<std::size_t>(m.d_enc());
  load("embeddings", m.offset_embeddings(), e * m.vocab().size());
  load("enc_weight", m.offset_enc_weight(), e * h);
  load("enc_bias", m.offset_enc_bias(), h);
  load("att_weight", m.offset_att_weight(), h);
  load("att_bias", m.offset_att_bias(), 1);
  load("cls_weight", m.offset_cls_weight(), h);
  load("cls_bias", m.offset_cls_bias(), 1);
  m.meta = f.meta;
  return m;
}

void save_model(const std::filesystem::path& path, const SannModel& model) {
  write_tensor_file(path, to_tensor_file(model));
}

SannModel load_model(const std::filesystem::path& path) {
  return from_tensor_file(read_tensor_file(path));
}

}  // namespace kc::sann
