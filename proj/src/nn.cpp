#include "hadmc/nn.hpp"

#include <random>

#include "hadmc/errors.hpp"

namespace hadmc::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ParseError("", "unknown activation \"" + s + "\"");
}

namespace {

template <typename T>
void activate(Matrix<T>& z, Activation a) {
  switch (a) {
    case Activation::linear: break;
    case Activation::relu: z = z.cwiseMax(T(0)); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::sigmoid: z = (T(1) / (T(1) + (-z.array()).exp())).matrix(); break;
  }
}

// upstream * f'(z), expressed through the layer output y = f(z).
template <typename T>
Matrix<T> through_activation(const Matrix<T>& upstream, const Matrix<T>& y, Activation a) {
  switch (a) {
    case Activation::linear: return upstream;
    case Activation::relu: return (y.array() > T(0)).select(upstream, T(0));
    case Activation::tanh: return (upstream.array() * (T(1) - y.array().square())).matrix();
    case Activation::sigmoid: return (upstream.array() * y.array() * (T(1) - y.array())).matrix();
  }
  return upstream;
}

}  // namespace

template <typename T>
bool Gradients<T>::all_finite() const {
  for (const auto& w : weight) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : bias) {
    if (!b.allFinite()) return false;
  }
  return true;
}

template <typename T>
void Gradients<T>::add(const Gradients& other) {
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += other.weight[l];
    bias[l] += other.bias[l];
  }
}

template <typename T>
DenseNet<T>::DenseNet(const std::vector<int>& widths, const std::vector<Activation>& activations) {
  if (widths.size() < 2 || activations.size() + 1 != widths.size()) {
    throw ContractViolation("DenseNet: need widths.size() == activations.size() + 1 >= 2");
  }
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] <= 0 || widths[l + 1] <= 0) throw ContractViolation("DenseNet: widths must be positive");
    layers_.push_back({Matrix<T>::Zero(widths[l], widths[l + 1]), RowVector<T>::Zero(widths[l + 1]), activations[l]});
  }
}

template <typename T>
DenseNet<T> DenseNet<T>::mlp(int in, const std::vector<int>& hidden, int out, Activation hidden_act,
                             Activation out_act) {
  std::vector<int> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  std::vector<Activation> acts(hidden.size(), hidden_act);
  acts.push_back(out_act);
  return DenseNet(widths, acts);
}

template <typename T>
void DenseNet<T>::kaiming_init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& layer : layers_) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(layer.weight.rows())));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = static_cast<T>(gauss(rng));
    }
    layer.bias.setZero();
  }
}

template <typename T>
Matrix<T> DenseNet<T>::forward(const Matrix<T>& input) const {
  if (input.cols() != input_dim()) throw ContractViolation("DenseNet::forward: input width mismatch");
  Matrix<T> x = input;
  for (const auto& layer : layers_) {
    Matrix<T> z(x.rows(), layer.weight.cols());
    z.noalias() = x * layer.weight;
    z.rowwise() += layer.bias;
    activate(z, layer.activation);
    x = std::move(z);
  }
  return x;
}

template <typename T>
Matrix<T> DenseNet<T>::forward(const Matrix<T>& input, ForwardCache<T>& cache) const {
  if (input.cols() != input_dim()) throw ContractViolation("DenseNet::forward: input width mismatch");
  cache.activations.resize(layers_.size() + 1);
  cache.activations[0] = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix<T>& z = cache.activations[l + 1];
    z.resize(input.rows(), layer.weight.cols());
    z.noalias() = cache.activations[l] * layer.weight;
    z.rowwise() += layer.bias;
    activate(z, layer.activation);
  }
  return cache.activations.back();
}

template <typename T>
void DenseNet<T>::check_cache(const ForwardCache<T>& cache, const Matrix<T>& upstream) const {
  if (cache.activations.size() != layers_.size() + 1) throw ContractViolation("DenseNet::backward: missing forward cache");
  const auto& out = cache.activations.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ContractViolation("DenseNet::backward: upstream gradient shape mismatch");
  }
}

template <typename T>
Gradients<T> DenseNet<T>::backward(const ForwardCache<T>& cache, const Matrix<T>& upstream, Matrix<T>* input_grad) const {
  check_cache(cache, upstream);
  Gradients<T> g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  Matrix<T> grad = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const Matrix<T> delta = through_activation(grad, cache.activations[l + 1], layer.activation);
    g.weight[l].noalias() = cache.activations[l].transpose() * delta;
    g.bias[l] = delta.colwise().sum();
    if (l > 0 || input_grad) {
      Matrix<T> next(delta.rows(), layer.weight.rows());
      next.noalias() = delta * layer.weight.transpose();
      grad = std::move(next);
    }
  }
  if (input_grad) *input_grad = std::move(grad);
  return g;
}

template <typename T>
Matrix<T> DenseNet<T>::input_gradient(const ForwardCache<T>& cache, const Matrix<T>& upstream) const {
  check_cache(cache, upstream);
  Matrix<T> grad = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const Matrix<T> delta = through_activation(grad, cache.activations[l + 1], layer.activation);
    Matrix<T> next(delta.rows(), layer.weight.rows());
    next.noalias() = delta * layer.weight.transpose();
    grad = std::move(next);
  }
  return grad;
}

template <typename T>
Gradients<T> DenseNet<T>::zero_gradients() const {
  Gradients<T> g;
  for (const auto& l : layers_) {
    g.weight.push_back(Matrix<T>::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(RowVector<T>::Zero(l.bias.size()));
  }
  return g;
}

template <typename T>
int DenseNet<T>::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.rows());
}

template <typename T>
int DenseNet<T>::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.cols());
}

template <typename T>
std::vector<int> DenseNet<T>::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(input_dim());
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.weight.cols()));
  return w;
}

template <typename T>
std::size_t DenseNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

template <typename T>
bool DenseNet<T>::same_parameters(const DenseNet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.activation != b.activation) return false;
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

template <typename T>
void soft_update(DenseNet<T>& target, const DenseNet<T>& online, double delta) {
  if (target.widths() != online.widths()) throw ContractViolation("soft_update: shape mismatch");
  const T d = static_cast<T>(delta);
  for (std::size_t l = 0; l < target.num_layers(); ++l) {
    auto& t = target.layers()[l];
    const auto& o = online.layers()[l];
    t.weight = d * o.weight + (T(1) - d) * t.weight;
    t.bias = d * o.bias + (T(1) - d) * t.bias;
  }
}

template <typename T>
Adam<T>::Adam(const DenseNet<T>& net, AdamConfig config) : config_(config) {
  if (!(config.lr > 0.0)) throw ContractViolation("Adam: learning rate must be positive");
  for (const auto& l : net.layers()) {
    weight_.push_back({Matrix<T>::Zero(l.weight.rows(), l.weight.cols()), Matrix<T>::Zero(l.weight.rows(), l.weight.cols())});
    bias_.push_back({Matrix<T>::Zero(1, l.bias.size()), Matrix<T>::Zero(1, l.bias.size())});
  }
}

template <typename T>
void Adam<T>::step(DenseNet<T>& net, const Gradients<T>& grads) {
  if (grads.weight.size() != net.num_layers() || weight_.size() != net.num_layers()) {
    throw ContractViolation("Adam::step: gradient/network shape mismatch");
  }
  if (!grads.all_finite()) throw TrainingError("non-finite gradient passed to Adam");
  ++t_;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto& layer = net.layers()[l];
    adam_apply(layer.weight, grads.weight[l], weight_[l], t_, config_);
    adam_apply(layer.bias, grads.bias[l], bias_[l], t_, config_);
  }
}

namespace {

template <typename T>
void put_matrix(io::BinaryWriter& w, const Matrix<T>& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  std::vector<double> flat(m.data(), m.data() + m.size());
  w.doubles(flat);
}

template <typename T>
Matrix<T> get_matrix(io::BinaryReader& r) {
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  const auto flat = r.doubles();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw ParseError("", "matrix size mismatch in binary stream");
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(flat[static_cast<std::size_t>(i)]);
  return m;
}

}  // namespace

template <typename T>
void Adam<T>::save(io::BinaryWriter& w) const {
  w.f64(config_.lr);
  w.f64(config_.beta1);
  w.f64(config_.beta2);
  w.f64(config_.eps);
  w.i64(t_);
  w.u64(weight_.size());
  for (std::size_t l = 0; l < weight_.size(); ++l) {
    put_matrix(w, weight_[l].m);
    put_matrix(w, weight_[l].v);
    put_matrix(w, bias_[l].m);
    put_matrix(w, bias_[l].v);
  }
}

template <typename T>
void Adam<T>::load(io::BinaryReader& r) {
  config_.lr = r.f64();
  config_.beta1 = r.f64();
  config_.beta2 = r.f64();
  config_.eps = r.f64();
  t_ = r.i64();
  const auto n = r.u64();
  weight_.assign(n, {});
  bias_.assign(n, {});
  for (std::size_t l = 0; l < n; ++l) {
    weight_[l].m = get_matrix<T>(r);
    weight_[l].v = get_matrix<T>(r);
    bias_[l].m = get_matrix<T>(r);
    bias_[l].v = get_matrix<T>(r);
  }
}

template <typename T>
T loss_mse(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractViolation("loss_mse: shape mismatch");
  if (a.size() == 0) return T(0);
  return (a - b).squaredNorm() / static_cast<T>(a.size());
}

template <typename T>
Matrix<T> loss_mse_grad(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractViolation("loss_mse_grad: shape mismatch");
  return (T(2) / static_cast<T>(a.size())) * (a - b);
}

template <typename T>
T loss_bce(const Matrix<T>& p, const Matrix<T>& target) {
  if (p.rows() != target.rows() || p.cols() != target.cols()) throw ContractViolation("loss_bce: shape mismatch");
  const T lo = static_cast<T>(kBceClamp), hi = T(1) - static_cast<T>(kBceClamp);
  const auto q = p.array().max(lo).min(hi);
  const auto t = target.array();
  return -(t * q.log() + (T(1) - t) * (T(1) - q).log()).sum() / static_cast<T>(p.size());
}

template <typename T>
Matrix<T> loss_bce_grad(const Matrix<T>& p, const Matrix<T>& target) {
  if (p.rows() != target.rows() || p.cols() != target.cols()) throw ContractViolation("loss_bce_grad: shape mismatch");
  const T lo = static_cast<T>(kBceClamp), hi = T(1) - static_cast<T>(kBceClamp);
  const auto q = p.array().max(lo).min(hi);
  const auto t = target.array();
  return ((-t / q + (T(1) - t) / (T(1) - q)) / static_cast<T>(p.size())).matrix();
}

template <typename T>
nlohmann::json matrix_to_json(const Matrix<T>& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(static_cast<double>(m(r, c)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <typename T>
Matrix<T> matrix_from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  const long rows = r.integer("rows");
  const long cols = r.integer("cols");
  const auto& data = r.at("data");
  r.finish();
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<long>(data.size()) != rows * cols) {
    throw ParseError(path, "matrix data does not match rows*cols");
  }
  Matrix<T> m(rows, cols);
  std::size_t k = 0;
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      const auto& v = data[k++];
      if (!v.is_number()) throw ParseError(path + ".data", "expected numbers");
      m(i, j) = static_cast<T>(v.get<double>());
    }
  }
  return m;
}

template <typename T>
nlohmann::json net_to_json(const DenseNet<T>& net) {
  nlohmann::json doc;
  doc["schema_version"] = kCheckpointSchemaVersion;
  doc["widths"] = net.widths();
  auto& acts = doc["activations"] = nlohmann::json::array();
  auto& layers = doc["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    acts.push_back(to_string(l.activation));
    layers.push_back({{"weight", matrix_to_json<T>(l.weight)}, {"bias", matrix_to_json<T>(l.bias)}});
  }
  return doc;
}

template <typename T>
DenseNet<T> net_from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  if (r.integer("schema_version") != kCheckpointSchemaVersion) {
    throw ParseError(r.child_path("schema_version"), "unsupported checkpoint schema version");
  }
  const auto widths = r.at("widths").get<std::vector<int>>();
  std::vector<Activation> acts;
  for (const auto& a : r.at("activations")) acts.push_back(activation_from_string(a.get<std::string>()));
  DenseNet<T> net(widths, acts);
  const auto& layers = r.at("layers");
  r.finish();
  if (!layers.is_array() || layers.size() != net.num_layers()) throw ParseError(r.child_path("layers"), "layer count mismatch");
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::string lp = r.child_path("layers") + "[" + std::to_string(l) + "]";
    io::ObjectReader lr(layers[l], lp);
    auto w = matrix_from_json<T>(lr.at("weight"), lp + ".weight");
    auto b = matrix_from_json<T>(lr.at("bias"), lp + ".bias");
    lr.finish();
    auto& layer = net.layers()[l];
    if (w.rows() != layer.weight.rows() || w.cols() != layer.weight.cols() || b.rows() != 1 || b.cols() != layer.bias.size()) {
      throw ParseError(lp, "parameter shape does not match widths");
    }
    layer.weight = std::move(w);
    layer.bias = b;
  }
  return net;
}

template <typename T>
void save_net(io::BinaryWriter& w, const DenseNet<T>& net) {
  w.u64(net.num_layers());
  for (const auto& l : net.layers()) {
    w.str(to_string(l.activation));
    put_matrix<T>(w, l.weight);
    put_matrix<T>(w, l.bias);
  }
}

template <typename T>
DenseNet<T> load_net(io::BinaryReader& r) {
  DenseNet<T> net;
  const auto n = r.u64();
  for (std::size_t l = 0; l < n; ++l) {
    Layer<T> layer;
    layer.activation = activation_from_string(r.str());
    layer.weight = get_matrix<T>(r);
    layer.bias = get_matrix<T>(r);
    net.layers().push_back(std::move(layer));
  }
  return net;
}

#define HADMC_INSTANTIATE_NN(T)                                                          \
  template struct Gradients<T>;                                                          \
  template class DenseNet<T>;                                                            \
  template class Adam<T>;                                                                \
  template void soft_update<T>(DenseNet<T>&, const DenseNet<T>&, double);                \
  template T loss_mse<T>(const Matrix<T>&, const Matrix<T>&);                            \
  template Matrix<T> loss_mse_grad<T>(const Matrix<T>&, const Matrix<T>&);               \
  template T loss_bce<T>(const Matrix<T>&, const Matrix<T>&);                            \
  template Matrix<T> loss_bce_grad<T>(const Matrix<T>&, const Matrix<T>&);               \
  template nlohmann::json matrix_to_json<T>(const Matrix<T>&);                           \
  template Matrix<T> matrix_from_json<T>(const nlohmann::json&, const std::string&);     \
  template nlohmann::json net_to_json<T>(const DenseNet<T>&);                            \
  template DenseNet<T> net_from_json<T>(const nlohmann::json&, const std::string&);      \
  template void save_net<T>(io::BinaryWriter&, const DenseNet<T>&);                      \
  template DenseNet<T> load_net<T>(io::BinaryReader&);

HADMC_INSTANTIATE_NN(float)
HADMC_INSTANTIATE_NN(double)

}  // namespace hadmc::nn
