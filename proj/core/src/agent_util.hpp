#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "msched/algos.hpp"
#include "msched/nn.hpp"

namespace msched::detail {

inline std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

inline nn::Mlp make_critic(int obs_dim, int action_dim, const AlgoConfig& cfg,
                           std::mt19937_64& rng) {
  return nn::Mlp(layer_sizes(obs_dim + action_dim, cfg.hidden, 1), nn::Activation::kReLU,
                 nn::Activation::kIdentity, rng);
}

inline nn::Adam make_adam(const nn::Mlp& net, double lr) {
  nn::AdamOptions opt;
  opt.lr = lr;
  return nn::Adam(net.num_params(), opt);
}

inline Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

// One regression step of a Q network towards fixed targets (mean squared
// error with a 1/2 factor). Returns the loss before the step.
inline double fit_critic(nn::Mlp& critic, nn::Adam& opt, const Eigen::MatrixXd& input,
                         const Eigen::VectorXd& targets) {
  nn::Tape tape;
  const Eigen::MatrixXd q = critic.forward(input, &tape);
  const Eigen::RowVectorXd err = q.row(0) - targets.transpose();
  const double n = static_cast<double>(targets.size());
  const Eigen::MatrixXd grad = err / n;
  opt.step(critic, critic.backward(tape, grad));
  return 0.5 * err.squaredNorm() / n;
}

inline Eigen::VectorXd gaussian_noise(Eigen::Index n, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = normal(rng);
  return out;
}

}  // namespace msched::detail
