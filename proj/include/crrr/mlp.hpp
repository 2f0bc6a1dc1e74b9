#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crrr/rng.hpp"
#include "crrr/types.hpp"

namespace crrr {

enum class Activation { rectifier, tanh_unit };

inline const char* activation_name(Activation a) {
  return a == Activation::rectifier ? "rectifier" : "tanh";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "rectifier") return Activation::rectifier;
  if (s == "tanh") return Activation::tanh_unit;
  throw std::invalid_argument("unknown activation: " + s);
}

// Fully connected net: affine layers with an elementwise activation between
// them and a linear output layer. Batched evaluation; gradients by reverse
// accumulation against stored activations.
class Mlp {
 public:
  struct Workspace {
    // a[0] is the input batch; a[l] the post-activation output of layer l.
    std::vector<Mat> a;
  };

  Mlp() = default;

  // Weights and biases start uniform on (-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(int input, std::vector<int> hidden, int output, Activation act, RngStream& rng)
      : input_(input), hidden_(std::move(hidden)), output_(output), act_(act) {
    if (input < 1 || output < 1) throw std::invalid_argument("Mlp: bad dimensions");
    int in = input_;
    for (int h : hidden_) {
      if (h < 1) throw std::invalid_argument("Mlp: bad hidden width");
      append_layer(in, h, rng);
      in = h;
    }
    append_layer(in, output_, rng);
  }

  int input_dim() const { return input_; }
  int output_dim() const { return output_; }
  const std::vector<int>& hidden() const { return hidden_; }
  Activation activation() const { return act_; }
  std::size_t layer_count() const { return w_.size(); }
  const Eigen::MatrixXd& weights(std::size_t l) const { return w_[l]; }
  const Eigen::VectorXd& biases(std::size_t l) const { return b_[l]; }

  // x: batch rows. Returns the (n x output) batch of linear outputs and, if
  // ws is given, keeps every intermediate activation for backward(). Row-major
  // so callers may treat each output row as a contiguous span.
  Mat forward(const Mat& x, Workspace* ws = nullptr) const {
    if (x.cols() != input_) throw std::invalid_argument("Mlp::forward: wrong input width");
    if (ws) {
      ws->a.assign(1, x);
      ws->a.reserve(w_.size() + 1);
    }
    Mat cur = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      Mat z = (cur * w_[l].transpose()).rowwise() + b_[l].transpose();
      if (l + 1 < w_.size()) apply_activation(z);
      cur = std::move(z);
      if (ws) ws->a.push_back(cur);
    }
    return cur;
  }

  // grad_out: dLoss/dOutput for the same batch. Adds parameter gradients into
  // (gw, gb), which must match the layer shapes.
  void backward(const Workspace& ws, const Mat& grad_out,
                std::vector<Eigen::MatrixXd>& gw, std::vector<Eigen::VectorXd>& gb) const {
    Mat delta = grad_out;
    for (std::size_t l = w_.size(); l-- > 0;) {
      gw[l].noalias() += delta.transpose() * ws.a[l];
      gb[l] += delta.colwise().sum().transpose();
      if (l == 0) break;
      Mat prev = delta * w_[l];
      // ws.a[l] holds the activation output of layer l-1; its derivative is
      // recoverable from the output alone for both supported units.
      if (act_ == Activation::rectifier) {
        delta = (ws.a[l].array() > 0.0).cast<double>() * prev.array();
      } else {
        delta = (1.0 - ws.a[l].array().square()) * prev.array();
      }
    }
  }

  std::vector<Eigen::MatrixXd> zero_weight_grads() const {
    std::vector<Eigen::MatrixXd> g;
    g.reserve(w_.size());
    for (const auto& m : w_) g.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    return g;
  }

  std::vector<Eigen::VectorXd> zero_bias_grads() const {
    std::vector<Eigen::VectorXd> g;
    g.reserve(b_.size());
    for (const auto& v : b_) g.push_back(Eigen::VectorXd::Zero(v.size()));
    return g;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      n += static_cast<std::size_t>(w_[l].size()) + static_cast<std::size_t>(b_[l].size());
    }
    return n;
  }

  // Flat parameter order: per layer, weights column-major then biases.
  std::vector<double> get_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (std::size_t l = 0; l < w_.size(); ++l) {
      out.insert(out.end(), w_[l].data(), w_[l].data() + w_[l].size());
      out.insert(out.end(), b_[l].data(), b_[l].data() + b_[l].size());
    }
    return out;
  }

  void set_params(std::span<const double> flat) {
    if (flat.size() != param_count()) throw std::invalid_argument("Mlp::set_params: wrong length");
    const double* p = flat.data();
    for (std::size_t l = 0; l < w_.size(); ++l) {
      std::copy(p, p + w_[l].size(), w_[l].data());
      p += w_[l].size();
      std::copy(p, p + b_[l].size(), b_[l].data());
      p += b_[l].size();
    }
  }

  // Direct parameter access for the optimizer.
  std::vector<Eigen::MatrixXd>& weight_tensors() { return w_; }
  std::vector<Eigen::VectorXd>& bias_tensors() { return b_; }

  bool empty() const { return w_.empty(); }

  // Reconstructs a net from its serialized pieces.
  static Mlp from_parts(int input, std::vector<int> hidden, int output, Activation act,
                        std::span<const double> flat) {
    Mlp net;
    net.input_ = input;
    net.hidden_ = std::move(hidden);
    net.output_ = output;
    net.act_ = act;
    int in = input;
    for (int h : net.hidden_) {
      net.w_.emplace_back(Eigen::MatrixXd::Zero(h, in));
      net.b_.emplace_back(Eigen::VectorXd::Zero(h));
      in = h;
    }
    net.w_.emplace_back(Eigen::MatrixXd::Zero(output, in));
    net.b_.emplace_back(Eigen::VectorXd::Zero(output));
    net.set_params(flat);
    return net;
  }

 private:
  void append_layer(int in, int out, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = rng.uniform(-bound, bound);
    Eigen::VectorXd b(out);
    for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = rng.uniform(-bound, bound);
    w_.push_back(std::move(w));
    b_.push_back(std::move(b));
  }

  void apply_activation(Mat& z) const {
    if (act_ == Activation::rectifier) {
      z = z.cwiseMax(0.0);
    } else {
      z = z.array().tanh();
    }
  }

  int input_ = 0;
  std::vector<int> hidden_;
  int output_ = 0;
  Activation act_ = Activation::rectifier;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
};

}  // namespace crrr
