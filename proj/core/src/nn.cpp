#include "msched/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "msched/errors.hpp"

namespace msched::nn {
namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::kReLU:
      return z.cwiseMax(0.0);
    case Activation::kTanh:
      return z.array().tanh().matrix();
    case Activation::kIdentity:
      break;
  }
  return z;
}

// Multiplies the upstream gradient by the activation derivative at z.
void activation_backward(Eigen::MatrixXd& g, const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::kReLU:
      g = (z.array() > 0.0).select(g, 0.0);
      break;
    case Activation::kTanh:
      g.array() *= 1.0 - z.array().tanh().square();
      break;
    case Activation::kIdentity:
      break;
  }
}

constexpr double kActionBound = 1.0 - 1e-12;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Activation output, std::mt19937_64& rng,
         double output_scale)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw UsageError("an MLP needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw UsageError("MLP layer sizes must be positive");
  }
  layout();
  for (size_t l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const double scale = (l + 1 == num_layers()) ? output_scale : 1.0;
    const size_t begin = weight_offset(l);
    const size_t end = bias_offset(l) + static_cast<size_t>(sizes_[l + 1]);
    for (size_t k = begin; k < end; ++k) params_[k] = scale * dist(rng);
  }
}

void Mlp::layout() {
  offsets_.clear();
  size_t total = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<size_t>(sizes_[l + 1]) * static_cast<size_t>(sizes_[l] + 1);
  }
  params_.assign(total, 0.0);
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(size_t layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(size_t layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}
Eigen::Map<Eigen::MatrixXd> Mlp::weight(size_t layer) {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(size_t layer) {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape* tape) const {
  if (x.rows() != input_size()) {
    throw UsageError("MLP input has " + std::to_string(x.rows()) + " rows, expected " +
                     std::to_string(input_size()));
  }
  if (tape) {
    tape->net = this;
    tape->version = version_;
    tape->inputs.resize(num_layers());
    tape->pre.resize(num_layers());
  }
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    const Activation act = (l + 1 == num_layers()) ? output_ : hidden_;
    Eigen::MatrixXd next = activate(z, act);
    if (tape) {
      tape->inputs[l] = std::move(a);
      tape->pre[l] = std::move(z);
    }
    a = std::move(next);
  }
  if (tape) tape->output = a;
  return a;
}

Eigen::VectorXd Mlp::predict(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x)).col(0);
}

Gradients Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_y) const {
  if (tape.net != this || tape.version != version_ || tape.pre.size() != num_layers()) {
    throw UsageError("gradient tape does not belong to the current network parameters");
  }
  if (grad_y.rows() != output_size() || grad_y.cols() != tape.output.cols()) {
    throw UsageError("output gradient shape does not match the recorded forward pass");
  }
  Gradients out;
  out.params.assign(params_.size(), 0.0);
  Eigen::MatrixXd g = grad_y;
  for (size_t l = num_layers(); l-- > 0;) {
    const Activation act = (l + 1 == num_layers()) ? output_ : hidden_;
    activation_backward(g, tape.pre[l], act);
    Eigen::Map<Eigen::MatrixXd> dw(out.params.data() + weight_offset(l), sizes_[l + 1],
                                   sizes_[l]);
    Eigen::Map<Eigen::VectorXd> db(out.params.data() + bias_offset(l), sizes_[l + 1]);
    dw.noalias() = g * tape.inputs[l].transpose();
    db = g.rowwise().sum();
    g = weight(l).transpose() * g;
  }
  out.input = std::move(g);
  return out;
}

void Mlp::save(std::ostream& out) const {
  out << "mlp 1\n" << sizes_.size();
  for (int s : sizes_) out << ' ' << s;
  out << '\n' << to_string(hidden_) << ' ' << to_string(output_) << '\n';
  char buf[40];
  for (double p : params_) {
    std::snprintf(buf, sizeof buf, "%.17g\n", p);
    out << buf;
  }
}

Mlp Mlp::load(std::istream& in) {
  std::string magic;
  int format = 0;
  size_t n = 0;
  if (!(in >> magic >> format >> n) || magic != "mlp" || format != 1 || n < 2) {
    throw UsageError("not an MLP parameter stream");
  }
  Mlp net;
  net.sizes_.resize(n);
  for (auto& s : net.sizes_) {
    if (!(in >> s) || s <= 0) throw UsageError("bad MLP layer size");
  }
  std::string hidden, output;
  if (!(in >> hidden >> output)) throw UsageError("missing MLP activations");
  net.hidden_ = parse_activation(hidden);
  net.output_ = parse_activation(output);
  net.layout();
  for (auto& p : net.params_) {
    std::string token;
    if (!(in >> token)) throw UsageError("truncated MLP parameter stream");
    p = std::stod(token);
  }
  return net;
}

void Mlp::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  save(out);
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  return load(in);
}

Adam::Adam(size_t num_params, AdamOptions options)
    : options_(options), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw UsageError("Adam: parameter/gradient size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericalError("non-finite gradient passed to Adam");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (size_t k = 0; k < params.size(); ++k) {
    m_[k] = options_.beta1 * m_[k] + (1.0 - options_.beta1) * grads[k];
    v_[k] = options_.beta2 * v_[k] + (1.0 - options_.beta2) * grads[k] * grads[k];
    const double m_hat = m_[k] / c1;
    const double v_hat = v_[k] / c2;
    params[k] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
  }
}

void Adam::step(Mlp& net, const Gradients& grads) {
  step(net.params(), grads.params);
  net.touch();
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
  auto dst = target.params();
  const auto src = source.params();
  if (dst.size() != src.size()) throw UsageError("soft_update: network shapes differ");
  for (size_t k = 0; k < dst.size(); ++k) dst[k] = (1.0 - tau) * dst[k] + tau * src[k];
  target.touch();
}

Eigen::VectorXd clamp_log_std(const Eigen::VectorXd& log_std) {
  return log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

double gaussian_log_density(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                            const Eigen::VectorXd& pre_squash) {
  const Eigen::VectorXd ls = clamp_log_std(log_std);
  const Eigen::ArrayXd z = (pre_squash - mean).array() / ls.array().exp();
  return (-0.5 * z.square() - ls.array() - kHalfLog2Pi).sum();
}

double tanh_log_correction(const Eigen::VectorXd& action) {
  return (1.0 - action.array().square() + kTanhEps).log().sum();
}

GaussianSample gaussian_from_noise(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                   const Eigen::VectorXd& noise) {
  const Eigen::VectorXd ls = clamp_log_std(log_std);
  GaussianSample s;
  s.noise = noise;
  s.pre_squash = mean + (ls.array().exp() * noise.array()).matrix();
  s.action = s.pre_squash.array().tanh().cwiseMax(-kActionBound).cwiseMin(kActionBound).matrix();
  s.log_prob = (-0.5 * noise.array().square() - ls.array() - kHalfLog2Pi).sum() -
               tanh_log_correction(s.action);
  return s;
}

GaussianSample gaussian_sample(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd noise(mean.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = normal(rng);
  return gaussian_from_noise(mean, log_std, noise);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kReLU:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      break;
  }
  return "identity";
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::kReLU;
  if (text == "tanh") return Activation::kTanh;
  if (text == "identity") return Activation::kIdentity;
  throw UsageError("unknown activation: " + text);
}

}  // namespace msched::nn
