#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace msched::nn {

enum class Activation { kIdentity, kReLU, kTanh };

class Mlp;

// Intermediates of one forward pass, needed by Mlp::backward. Bound to the
// network instance and parameter version it was recorded against.
struct Tape {
  const Mlp* net = nullptr;
  uint64_t version = 0;
  std::vector<Eigen::MatrixXd> inputs;  // per layer, in x batch
  std::vector<Eigen::MatrixXd> pre;     // per layer, pre-activation
  Eigen::MatrixXd output;
};

// Gradients of <grad_y, y> with respect to every parameter (same flat layout
// as Mlp::params()) and to the input batch.
struct Gradients {
  std::vector<double> params;
  Eigen::MatrixXd input;
};

// Sequential dense network. Parameters live in one flat buffer: for each
// layer the column-major weight matrix (out x in) followed by the bias.
// Batches are matrices with one sample per column.
class Mlp {
 public:
  Mlp() = default;
  // Weights and biases start uniform in +-1/sqrt(fan_in); the last layer is
  // additionally multiplied by output_scale.
  Mlp(std::vector<int> sizes, Activation hidden, Activation output, std::mt19937_64& rng,
      double output_scale = 1.0);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  size_t num_layers() const { return sizes_.size() - 1; }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  size_t num_params() const { return params_.size(); }

  Eigen::Map<const Eigen::MatrixXd> weight(size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(size_t layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(size_t layer);
  Eigen::Map<Eigen::VectorXd> bias(size_t layer);

  // Must be called after parameters are modified through params()/weight().
  // Invalidates outstanding tapes.
  void touch() { ++version_; }
  uint64_t version() const { return version_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;

  Gradients backward(const Tape& tape, const Eigen::MatrixXd& grad_y) const;

  // Text format: "mlp 1", sizes, activations, then one %.17g value per line.
  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);
  void save(const std::string& path) const;
  static Mlp load(const std::string& path);

  bool operator==(const Mlp& other) const {
    return sizes_ == other.sizes_ && hidden_ == other.hidden_ && output_ == other.output_ &&
           params_ == other.params_;
  }

 private:
  size_t weight_offset(size_t layer) const { return offsets_[layer]; }
  size_t bias_offset(size_t layer) const {
    return offsets_[layer] + static_cast<size_t>(sizes_[layer + 1] * sizes_[layer]);
  }
  void layout();

  std::vector<int> sizes_{1, 1};
  Activation hidden_ = Activation::kReLU;
  Activation output_ = Activation::kIdentity;
  std::vector<double> params_;
  std::vector<size_t> offsets_;
  uint64_t version_ = 0;
};

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment optimizer over a flat parameter span.
class Adam {
 public:
  Adam() = default;
  Adam(size_t num_params, AdamOptions options);

  // Throws NumericalError (leaving params untouched) on a non-finite gradient.
  void step(std::span<double> params, std::span<const double> grads);
  void step(Mlp& net, const Gradients& grads);

  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  long steps() const { return t_; }
  AdamOptions& options() { return options_; }

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

// target <- (1 - tau) * target + tau * source
void soft_update(Mlp& target, const Mlp& source, double tau);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kTanhEps = 1e-6;

struct GaussianSample {
  Eigen::VectorXd noise;
  Eigen::VectorXd pre_squash;
  Eigen::VectorXd action;  // tanh(pre_squash), strictly inside (-1, 1) for finite input
  double log_prob = 0.0;   // includes the tanh change-of-variables term
};

// Diagonal Gaussian head squashed through tanh. log_std is clamped to
// [kLogStdMin, kLogStdMax] before use.
GaussianSample gaussian_sample(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                               std::mt19937_64& rng);
GaussianSample gaussian_from_noise(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                   const Eigen::VectorXd& noise);

// Log density of the unsquashed Gaussian at pre_squash.
double gaussian_log_density(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                            const Eigen::VectorXd& pre_squash);
// sum_i log(1 - a_i^2 + eps), subtracted from the Gaussian density.
double tanh_log_correction(const Eigen::VectorXd& action);

Eigen::VectorXd clamp_log_std(const Eigen::VectorXd& log_std);

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

}  // namespace msched::nn
