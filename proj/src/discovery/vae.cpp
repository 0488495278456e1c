#include "kc/discovery/vae.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"

namespace kc::discovery {

namespace {

enum BlockId { kW1, kB1, kWm, kBm, kWv, kBv, kW2, kB2, kW3, kB3 };

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Forward {
  Mat e, mu, logvar, sd, z, g, xhat;
};

void forward(const VaeModel& m, const Mat& x, const Mat& noise, Forward& f) {
  f.e = ((m.w1() * x).colwise() + m.b1()).array().tanh().matrix();
  f.mu = (m.wm() * f.e).colwise() + m.bm();
  f.logvar = (m.wv() * f.e).colwise() + m.bv();
  f.sd = (0.5 * f.logvar.array()).exp().matrix();
  f.z = f.mu + (f.sd.array() * noise.array()).matrix();
  f.g = ((m.w2() * f.z).colwise() + m.b2()).array().tanh().matrix();
  f.xhat = (m.w3() * f.g).colwise() + m.b3();
}

Eigen::Map<Mat> grad_mat(Eigen::VectorXd& grad, const VaeModel::Block& b) {
  return Eigen::Map<Mat>(grad.data() + b.offset, b.rows, b.cols);
}
Eigen::Map<Vec> grad_vec(Eigen::VectorXd& grad, const VaeModel::Block& b) {
  return Eigen::Map<Vec>(grad.data() + b.offset, b.rows);
}

}  // namespace

Json to_json(const VaeHyperparams& hp) {
  return Json{{"d_hidden", hp.d_hidden},           {"d_z", hp.d_z},
              {"beta", hp.beta},                   {"learning_rate", hp.learning_rate},
              {"epochs", hp.epochs},               {"batch_size", hp.batch_size}};
}

VaeHyperparams vae_hyperparams_from_json(const Json& j) {
  VaeHyperparams hp;
  hp.d_hidden = j.value("d_hidden", hp.d_hidden);
  hp.d_z = j.value("d_z", hp.d_z);
  hp.beta = j.value("beta", hp.beta);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.epochs = j.value("epochs", hp.epochs);
  hp.batch_size = j.value("batch_size", hp.batch_size);
  return hp;
}

VaeModel::VaeModel(int d_in, int d_hidden, int d_z) : d_in_(d_in), d_hidden_(d_hidden), d_z_(d_z) {
  if (d_in < 1 || d_hidden < 1) throw UsageError("VAE dimensions must be positive");
  if (d_z < 2) throw UsageError("VAE latent dimension must be at least 2");
  const long in = d_in, h = d_hidden, z = d_z;
  std::size_t off = 0;
  auto add = [&](const char* name, long rows, long cols) {
    blocks_.push_back(Block{name, off, rows, cols});
    off += static_cast<std::size_t>(rows * cols);
  };
  add("enc_weight", h, in);
  add("enc_bias", h, 1);
  add("mu_weight", z, h);
  add("mu_bias", z, 1);
  add("logvar_weight", z, h);
  add("logvar_bias", z, 1);
  add("dec_weight", h, z);
  add("dec_bias", h, 1);
  add("out_weight", in, h);
  add("out_bias", in, 1);
  params_ = Eigen::VectorXd::Zero(static_cast<long>(off));
}

void VaeModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  params_.setZero();
  for (const auto& b : blocks_) {
    if (b.cols == 1) continue;  // biases start at zero
    const double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    for (long i = 0; i < b.rows * b.cols; ++i)
      params_[static_cast<long>(b.offset) + i] = rng.uniform(-limit, limit);
  }
}

void VaeModel::round_to_float32() {
  for (long i = 0; i < params_.size(); ++i) params_[i] = round_to_float(params_[i]);
}

std::string VaeModel::checksum() const {
  std::string bytes(static_cast<std::size_t>(params_.size()) * 4, '\0');
  for (long i = 0; i < params_.size(); ++i) {
    const float f = static_cast<float>(params_[i]);
    std::memcpy(bytes.data() + 4 * i, &f, 4);
  }
  return sha256_hex(bytes);
}

double kl_standard_normal(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar) {
  return 0.5 * (mu.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum();
}

ElboTerms vae_objective(const VaeModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& noise,
                        double beta, Eigen::VectorXd* grad) {
  if (x.cols() == 0) throw DataError("vae_objective: no samples");
  if (x.rows() != m.d_in())
    throw DataError("vae_objective: input dimension " + std::to_string(x.rows()) + ", expected " +
                    std::to_string(m.d_in()));
  if (noise.rows() != m.d_z() || noise.cols() != x.cols())
    throw DataError("vae_objective: noise shape does not match the batch");
  Forward f;
  forward(m, x, noise, f);
  const double n = static_cast<double>(x.cols());
  const Mat diff = f.xhat - x;
  const Mat var = f.logvar.array().exp().matrix();

  ElboTerms t;
  t.reconstruction = diff.squaredNorm() / n;
  t.kl = 0.5 * (f.mu.array().square() + var.array() - 1.0 - f.logvar.array()).sum() / n;
  t.loss = t.reconstruction + beta * t.kl;
  if (!grad) return t;

  *grad = Eigen::VectorXd::Zero(m.params().size());
  const auto& bl = m.blocks();
  const Mat d_xhat = (2.0 / n) * diff;
  grad_mat(*grad, bl[kW3]) = d_xhat * f.g.transpose();
  grad_vec(*grad, bl[kB3]) = d_xhat.rowwise().sum();
  const Mat d_a2 = ((m.w3().transpose() * d_xhat).array() * (1.0 - f.g.array().square())).matrix();
  grad_mat(*grad, bl[kW2]) = d_a2 * f.z.transpose();
  grad_vec(*grad, bl[kB2]) = d_a2.rowwise().sum();
  const Mat d_z = m.w2().transpose() * d_a2;
  const Mat d_mu = d_z + (beta / n) * f.mu;
  const Mat d_lv = (d_z.array() * noise.array() * f.sd.array() * 0.5).matrix() +
                   ((beta / n) * 0.5 * (var.array() - 1.0)).matrix();
  grad_mat(*grad, bl[kWm]) = d_mu * f.e.transpose();
  grad_vec(*grad, bl[kBm]) = d_mu.rowwise().sum();
  grad_mat(*grad, bl[kWv]) = d_lv * f.e.transpose();
  grad_vec(*grad, bl[kBv]) = d_lv.rowwise().sum();
  const Mat d_a1 = ((m.wm().transpose() * d_mu + m.wv().transpose() * d_lv).array() *
                    (1.0 - f.e.array().square()))
                       .matrix();
  grad_mat(*grad, bl[kW1]) = d_a1 * x.transpose();
  grad_vec(*grad, bl[kB1]) = d_a1.rowwise().sum();
  return t;
}

ElboTerms vae_evaluate(const VaeModel& model, const Eigen::MatrixXd& inputs, double beta) {
  return vae_objective(model, inputs, Eigen::MatrixXd::Zero(model.d_z(), inputs.cols()), beta, nullptr);
}

VaeTrainResult train_vae(const std::vector<Eigen::VectorXd>& inputs, const VaeHyperparams& hp,
                         std::uint64_t seed) {
  if (inputs.empty()) throw DataError("train_vae: no inputs");
  Eigen::MatrixXd x(inputs.front().size(), static_cast<long>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != x.rows()) throw DataError("train_vae: inputs differ in dimension");
    x.col(static_cast<long>(i)) = inputs[i];
  }
  return train_vae(x, hp, seed);
}

VaeTrainResult train_vae(const Eigen::MatrixXd& x, const VaeHyperparams& hp, std::uint64_t seed) {
  if (x.cols() == 0 || x.rows() == 0) throw DataError("train_vae: no inputs");
  if (!x.allFinite()) throw DataError("train_vae: inputs contain non-finite values");
  if (hp.batch_size < 1 || hp.epochs < 0 || !(hp.learning_rate > 0) || hp.beta < 0)
    throw UsageError("invalid VAE hyperparameters");

  VaeTrainResult result;
  result.model = VaeModel(static_cast<int>(x.rows()), hp.d_hidden, hp.d_z);
  VaeModel& model = result.model;
  model.initialize(derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 2));

  std::vector<long> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), 0L);
  Eigen::MatrixXd batch, noise;
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
      const long b = static_cast<long>(end - start);
      batch.resize(x.rows(), b);
      noise.resize(hp.d_z, b);
      for (long c = 0; c < b; ++c) {
        batch.col(c) = x.col(order[start + static_cast<std::size_t>(c)]);
        for (long r = 0; r < hp.d_z; ++r) noise(r, c) = rng.normal();
      }
      vae_objective(model, batch, noise, hp.beta, &grad);
      model.params() -= hp.learning_rate * grad;
    }
    if (!model.all_finite()) throw DataError("VAE training diverged (non-finite parameters)");
    const ElboTerms t = vae_evaluate(model, x, hp.beta);
    result.report.elbo_trace.push_back(t.elbo());
    result.report.reconstruction_trace.push_back(t.reconstruction);
    result.report.kl_trace.push_back(t.kl);
  }
  model.round_to_float32();
  model.meta = Json{{"kind", "vae"},
                    {"hyperparams", to_json(hp)},
                    {"seed", seed},
                    {"samples", x.cols()},
                    {"elbo_trace", result.report.elbo_trace}};
  return result;
}

Eigen::VectorXd encode_latent(const VaeModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.d_in())
    throw DataError("encode_latent: input dimension " + std::to_string(x.size()) + ", expected " +
                    std::to_string(m.d_in()));
  const Eigen::VectorXd e = (m.w1() * x + m.b1()).array().tanh().matrix();
  return m.wm() * e + m.bm();
}

Eigen::VectorXd encode_logvar(const VaeModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.d_in()) throw DataError("encode_logvar: input dimension mismatch");
  const Eigen::VectorXd e = (m.w1() * x + m.b1()).array().tanh().matrix();
  return m.wv() * e + m.bv();
}

TensorFile to_tensor_file(const VaeModel& m) {
  TensorFile f;
  f.meta = m.meta.is_null() ? Json::object() : m.meta;
  f.meta["kind"] = "vae";
  f.meta["d_in"] = m.d_in();
  f.meta["d_hidden"] = m.d_hidden();
  f.meta["d_z"] = m.d_z();
  for (const auto& b : m.blocks()) {
    // Matrices are stored column-major, so the on-disk shape is [cols, rows].
    NamedTensor t{b.name,
                  b.cols == 1 ? std::vector<std::size_t>{static_cast<std::size_t>(b.rows)}
                              : std::vector<std::size_t>{static_cast<std::size_t>(b.cols),
                                                         static_cast<std::size_t>(b.rows)},
                  {}};
    const double* p = m.params().data() + b.offset;
    t.values.assign(p, p + b.rows * b.cols);
    f.tensors.push_back(std::move(t));
  }
  return f;
}

VaeModel vae_from_tensor_file(const TensorFile& f) {
  if (f.meta.value("kind", "") != "vae") throw DataError("artifact is not a VAE model");
  VaeModel m(f.meta.at("d_in").get<int>(), f.meta.at("d_hidden").get<int>(), f.meta.at("d_z").get<int>());
  for (const auto& b : m.blocks()) {
    const auto& t = f.tensor(b.name);
    if (t.values.size() != static_cast<std::size_t>(b.rows * b.cols))
      throw DataError(std::string("tensor '") + b.name + "' has the wrong size");
    std::copy(t.values.begin(), t.values.end(), m.params().data() + b.offset);
  }
  m.meta = f.meta;
  return m;
}

void save_vae(const std::filesystem::path& path, const VaeModel& model) {
  write_tensor_file(path, to_tensor_file(model));
}

VaeModel load_vae(const std::filesystem::path& path) { return vae_from_tensor_file(read_tensor_file(path)); }

}  // namespace kc::discovery
