#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kc/ast/subtrees.hpp"
#include "kc/common/tensor_file.hpp"

namespace kc::sann {

struct Hyperparams {
  int d_emb = 32;
  int d_enc = 32;
  double learning_rate = 0.05;
  int epochs = 50;
  int batch_size = 32;
  // Fraction of programs withheld from fitting and used only for the
  // reported accuracy.
  double holdout_fraction = 0.1;
};

Json to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const Json& j);

// Token -> row index. Index 0 is the out-of-vocabulary token; the five
// placeholder classes are always present.
class Vocabulary {
 public:
  static constexpr std::string_view kOov = "<unk>";

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);  // tokens[0] must be kOov

  // Adds every token of the given subtrees, in first-seen order.
  void add(std::string_view token);
  std::size_t index(const std::string& token) const;  // kOov index when unknown
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Subtree-attention network. All parameters live in one flat vector:
//   embeddings  d_emb x V   (column per token)
//   enc_weight  d_enc x d_emb
//   enc_bias    d_enc
//   att_weight  d_enc
//   att_bias    1
//   cls_weight  d_enc
//   cls_bias    1
// encoding  h = tanh(W * mean_t E[:,t] + b)
// attention a = sigmoid(w_a . h + b_a)
// pooled    p = sum_i a_i h_i / sum_i a_i
// P(correct) = sigmoid(w_c . p + b_c)
class SannModel {
 public:
  SannModel() = default;
  SannModel(Vocabulary vocab, int d_emb, int d_enc);

  // Gaussian embeddings (std 3), Glorot-uniform dense weights, small
  // attention and classifier weights, attention bias 3, other biases 0.
  void initialize(std::uint64_t seed);

  const Vocabulary& vocab() const { return vocab_; }
  int d_emb() const { return d_emb_; }
  int d_enc() const { return d_enc_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

  ConstMatMap embeddings() const { return cmat(off_emb_, d_emb_, vocab_size()); }
  ConstMatMap enc_weight() const { return cmat(off_w_, d_enc_, d_emb_); }
  ConstVecMap enc_bias() const { return cvec(off_b_, d_enc_); }
  ConstVecMap att_weight() const { return cvec(off_wa_, d_enc_); }
  double att_bias() const { return params_[off_ba_]; }
  ConstVecMap cls_weight() const { return cvec(off_wc_, d_enc_); }
  double cls_bias() const { return params_[off_bc_]; }

  MatMap embeddings() { return mat(off_emb_, d_emb_, vocab_size()); }
  MatMap enc_weight() { return mat(off_w_, d_enc_, d_emb_); }
  VecMap enc_bias() { return vec(off_b_, d_enc_); }
  VecMap att_weight() { return vec(off_wa_, d_enc_); }
  double& att_bias() { return params_[off_ba_]; }
  VecMap cls_weight() { return vec(off_wc_, d_enc_); }
  double& cls_bias() { return params_[off_bc_]; }

  // Offsets into params() for gradient bookkeeping.
  std::size_t offset_embeddings() const { return off_emb_; }
  std::size_t offset_enc_weight() const { return off_w_; }
  std::size_t offset_enc_bias() const { return off_b_; }
  std::size_t offset_att_weight() const { return off_wa_; }
  std::size_t offset_att_bias() const { return off_ba_; }
  std::size_t offset_cls_weight() const { return off_wc_; }
  std::size_t offset_cls_bias() const { return off_bc_; }

  bool all_finite() const { return params_.allFinite(); }
  void round_to_float32();
  std::string checksum() const;  // sha256 over the float32 tensor encoding

  Json meta;  // hyperparameters, seed, training report

 private:
  long vocab_size() const { return static_cast<long>(vocab_.size()); }
  MatMap mat(std::size_t off, long r, long c) { return MatMap(params_.data() + off, r, c); }
  ConstMatMap cmat(std::size_t off, long r, long c) const {
    return ConstMatMap(params_.data() + off, r, c);
  }
  VecMap vec(std::size_t off, long n) { return VecMap(params_.data() + off, n); }
  ConstVecMap cvec(std::size_t off, long n) const { return ConstVecMap(params_.data() + off, n); }

  Vocabulary vocab_;
  int d_emb_ = 0, d_enc_ = 0;
  std::size_t off_emb_ = 0, off_w_ = 0, off_b_ = 0, off_wa_ = 0, off_ba_ = 0, off_wc_ = 0,
              off_bc_ = 0;
  Eigen::VectorXd params_;
};

struct ScoredSubtree {
  ast::NormalizedSubtree subtree;
  Eigen::VectorXd encoding;
  double attention = 0.0;
};

struct Prediction {
  double probability = 0.0;  // P(correct)
  std::vector<ScoredSubtree> scored;
};

struct LabeledProgram {
  std::string id;
  std::vector<ast::NormalizedSubtree> subtrees;
  bool is_correct = false;
};

Eigen::VectorXd encode_subtree(const SannModel& model, std::span<const std::string> tokens);
double attention_weight(const SannModel& model, const Eigen::VectorXd& encoding);
Prediction predict_correctness(const SannModel& model,
                               std::span<const ast::NormalizedSubtree> subtrees);

// Subtrees with attention >= threshold, in source order (span begin, then
// wider spans first). When none qualify, the single highest-attention
// subtree is returned instead.
std::vector<ScoredSubtree> high_attention_subtrees(const SannModel& model,
                                                   std::span<const ast::NormalizedSubtree> subtrees,
                                                   double threshold);
std::vector<ScoredSubtree> select_high_attention(std::vector<ScoredSubtree> scored, double threshold);

// Mean binary cross-entropy of the correctness prediction over `batch`.
// When `grad` is non-null it receives d(loss)/d(params) in params() layout.
double batch_loss(const SannModel& model, std::span<const LabeledProgram> batch,
                  Eigen::VectorXd* grad);

struct TrainReport {
  std::vector<double> loss_trace;  // mean training loss after each epoch
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
  std::vector<std::string> holdout_ids;
};

struct TrainResult {
  SannModel model;
  TrainReport report;
};

Vocabulary build_vocabulary(std::span<const LabeledProgram> programs);

// Mini-batch gradient descent on the mean BCE. Deterministic in `seed`.
// Throws DataError when the corpus lacks either label.
TrainResult train_sann(std::span<const LabeledProgram> programs, const Hyperparams& hp,
                       std::uint64_t seed);

double accuracy(const SannModel& model, std::span<const LabeledProgram> programs);

TensorFile to_tensor_file(const SannModel& model);
SannModel from_tensor_file(const TensorFile& file);
void save_model(const std::filesystem::path& path, const SannModel& model);
SannModel load_model(const std::filesystem::path& path);

}  // namespace kc::sann
