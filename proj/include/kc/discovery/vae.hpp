#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kc/common/io.hpp"
#include "kc/common/tensor_file.hpp"

namespace kc::discovery {

struct VaeHyperparams {
  int d_hidden = 64;
  int d_z = 16;
  double beta = 1.0;
  double learning_rate = 0.01;
  int epochs = 60;
  int batch_size = 32;
};

Json to_json(const VaeHyperparams& hp);
VaeHyperparams vae_hyperparams_from_json(const Json& j);

// Gaussian VAE with one tanh hidden layer on each side.
//   enc:  e = tanh(W1 x + b1);  mu = Wm e + bm;  logvar = Wv e + bv
//   z  = mu + exp(logvar / 2) * eps
//   dec:  g = tanh(W2 z + b2);  xhat = W3 g + b3
// Per-sample loss (negative ELBO) = |x - xhat|^2 + beta * KL(q || N(0, I)),
//   KL = 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar).
class VaeModel {
 public:
  VaeModel() = default;
  VaeModel(int d_in, int d_hidden, int d_z);

  void initialize(std::uint64_t seed);

  int d_in() const { return d_in_; }
  int d_hidden() const { return d_hidden_; }
  int d_z() const { return d_z_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
  using ConstVec = Eigen::Map<const Eigen::VectorXd>;
  ConstMat w1() const { return mat(0); }
  ConstVec b1() const { return vec(1); }
  ConstMat wm() const { return mat(2); }
  ConstVec bm() const { return vec(3); }
  ConstMat wv() const { return mat(4); }
  ConstVec bv() const { return vec(5); }
  ConstMat w2() const { return mat(6); }
  ConstVec b2() const { return vec(7); }
  ConstMat w3() const { return mat(8); }
  ConstVec b3() const { return vec(9); }

  struct Block {
    const char* name;
    std::size_t offset;
    long rows, cols;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

  bool all_finite() const { return params_.allFinite(); }
  void round_to_float32();
  std::string checksum() const;

  Json meta;

 private:
  ConstMat mat(std::size_t i) const {
    return ConstMat(params_.data() + blocks_[i].offset, blocks_[i].rows, blocks_[i].cols);
  }
  ConstVec vec(std::size_t i) const {
    return ConstVec(params_.data() + blocks_[i].offset, blocks_[i].rows);
  }

  int d_in_ = 0, d_hidden_ = 0, d_z_ = 0;
  std::vector<Block> blocks_;
  Eigen::VectorXd params_;
};

struct ElboTerms {
  double reconstruction = 0.0;  // mean squared-error sum per sample
  double kl = 0.0;              // mean KL per sample
  double loss = 0.0;            // reconstruction + beta * kl (negative ELBO)
  double elbo() const { return -loss; }
};

// Mean terms over the columns of `inputs` (one sample per column) with the
// reparameterization noise fixed to the matching columns of `noise`. When
// `grad` is non-null it receives d(loss)/d(params).
ElboTerms vae_objective(const VaeModel& model, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& noise, double beta, Eigen::VectorXd* grad);

// Deterministic objective with noise = 0 (z = mu).
ElboTerms vae_evaluate(const VaeModel& model, const Eigen::MatrixXd& inputs, double beta);

double kl_standard_normal(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar);

struct VaeTrainReport {
  std::vector<double> elbo_trace;            // after each epoch, noise = 0
  std::vector<double> reconstruction_trace;  // after each epoch, noise = 0
  std::vector<double> kl_trace;
};

struct VaeTrainResult {
  VaeModel model;
  VaeTrainReport report;
};

// Inputs one per column. Throws DataError on an empty or non-finite set.
VaeTrainResult train_vae(const Eigen::MatrixXd& inputs, const VaeHyperparams& hp, std::uint64_t seed);
VaeTrainResult train_vae(const std::vector<Eigen::VectorXd>& inputs, const VaeHyperparams& hp,
                         std::uint64_t seed);

// Posterior mean; never samples.
Eigen::VectorXd encode_latent(const VaeModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd encode_logvar(const VaeModel& model, const Eigen::VectorXd& x);

TensorFile to_tensor_file(const VaeModel& model);
VaeModel vae_from_tensor_file(const TensorFile& file);
void save_vae(const std::filesystem::path& path, const VaeModel& model);
VaeModel load_vae(const std::filesystem::path& path);

}  // namespace kc::discovery
