#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hadmc/serialize.hpp"

namespace hadmc::nn {

enum class Activation { linear, relu, tanh, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Batches are row-major in meaning: one sample per row.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
struct Layer {
  Matrix<T> weight;  // fan_in x fan_out
  RowVector<T> bias;
  Activation activation = Activation::linear;
};

/// activations[0] is the input batch, activations[l + 1] the output of layer l.
template <typename T>
struct ForwardCache {
  std::vector<Matrix<T>> activations;
  bool empty() const { return activations.empty(); }
};

template <typename T>
struct Gradients {
  std::vector<Matrix<T>> weight;
  std::vector<RowVector<T>> bias;

  bool all_finite() const;
  void add(const Gradients& other);
};

template <typename T>
class DenseNet {
 public:
  DenseNet() = default;
  /// `activations[l]` applies to layer l; widths has one more entry.
  DenseNet(const std::vector<int>& widths, const std::vector<Activation>& activations);

  /// in -> hidden... -> out with `hidden_act` between and `out_act` last.
  static DenseNet mlp(int in, const std::vector<int>& hidden, int out, Activation hidden_act, Activation out_act);

  /// Weights ~ N(0, 2 / fan_in), biases zero.
  void kaiming_init(std::uint64_t seed);

  Matrix<T> forward(const Matrix<T>& input) const;
  Matrix<T> forward(const Matrix<T>& input, ForwardCache<T>& cache) const;

  /// Reverse-mode pass for dL/d(output) = `upstream`. Fills `input_grad`
  /// when non-null.
  Gradients<T> backward(const ForwardCache<T>& cache, const Matrix<T>& upstream, Matrix<T>* input_grad = nullptr) const;

  /// dL/d(input) only; skips the parameter gradients.
  Matrix<T> input_gradient(const ForwardCache<T>& cache, const Matrix<T>& upstream) const;

  Gradients<T> zero_gradients() const;

  int input_dim() const;
  int output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::vector<int> widths() const;
  std::size_t parameter_count() const;

  std::vector<Layer<T>>& layers() { return layers_; }
  const std::vector<Layer<T>>& layers() const { return layers_; }

  /// Bitwise parameter equality (same shapes and values).
  bool same_parameters(const DenseNet& other) const;

  template <typename U>
  DenseNet<U> cast() const {
    DenseNet<U> out;
    for (const auto& l : layers_) {
      out.layers().push_back({l.weight.template cast<U>(), l.bias.template cast<U>(), l.activation});
    }
    return out;
  }

 private:
  void check_cache(const ForwardCache<T>& cache, const Matrix<T>& upstream) const;
  std::vector<Layer<T>> layers_;
};

/// target <- delta * online + (1 - delta) * target
template <typename T>
void soft_update(DenseNet<T>& target, const DenseNet<T>& online, double delta);

struct AdamConfig {
  double lr = 4e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments for one parameter array.
template <typename T>
struct AdamMoments {
  Matrix<T> m;
  Matrix<T> v;
};

/// Bias-corrected Adam update of a single parameter array. `t` is the
/// 1-based step count.
template <typename T, typename Param, typename Grad>
void adam_apply(Param& param, const Grad& grad, AdamMoments<T>& mom, long t, const AdamConfig& cfg) {
  if (mom.m.rows() != param.rows() || mom.m.cols() != param.cols()) {
    mom.m = Matrix<T>::Zero(param.rows(), param.cols());
    mom.v = Matrix<T>::Zero(param.rows(), param.cols());
  }
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  mom.m.array() = b1 * mom.m.array() + (T(1) - b1) * grad.array();
  mom.v.array() = b2 * mom.v.array() + (T(1) - b2) * grad.array().square();
  const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.eps);
  param.array() -= lr * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + eps);
}

template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(const DenseNet<T>& net, AdamConfig config);

  /// Throws TrainingError if any gradient is non-finite.
  void step(DenseNet<T>& net, const Gradients<T>& grads);

  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

  void save(io::BinaryWriter& w) const;
  void load(io::BinaryReader& r);

 private:
  AdamConfig config_;
  std::vector<AdamMoments<T>> weight_;
  std::vector<AdamMoments<T>> bias_;
  long t_ = 0;
};

/// Mean squared error over all components, and its gradient w.r.t. `a`.
template <typename T>
T loss_mse(const Matrix<T>& a, const Matrix<T>& b);
template <typename T>
Matrix<T> loss_mse_grad(const Matrix<T>& a, const Matrix<T>& b);

inline constexpr double kBceClamp = 1e-7;

/// Binary cross entropy averaged over all components; probabilities are
/// clamped to [1e-7, 1 - 1e-7].
template <typename T>
T loss_bce(const Matrix<T>& p, const Matrix<T>& target);
template <typename T>
Matrix<T> loss_bce_grad(const Matrix<T>& p, const Matrix<T>& target);

inline constexpr int kCheckpointSchemaVersion = 1;

template <typename T>
nlohmann::json net_to_json(const DenseNet<T>& net);
template <typename T>
DenseNet<T> net_from_json(const nlohmann::json& doc, const std::string& path = "");

template <typename T>
void save_net(io::BinaryWriter& w, const DenseNet<T>& net);
template <typename T>
DenseNet<T> load_net(io::BinaryReader& r);

template <typename T>
nlohmann::json matrix_to_json(const Matrix<T>& m);
template <typename T>
Matrix<T> matrix_from_json(const nlohmann::json& doc, const std::string& path);

}  // namespace hadmc::nn
