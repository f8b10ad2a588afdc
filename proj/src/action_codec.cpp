#include "hadmc/action_codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hadmc/errors.hpp"
#include "hadmc/rng.hpp"

namespace hadmc {

int combine_discrete(int a, int a_tilde, int m) {
  if (m <= 0) throw ContractViolation("combine_discrete: m must be positive");
  if (a != 0 && a != 1) throw ContractViolation("combine_discrete: a must be 0 or 1");
  if (a_tilde < 0 || a_tilde >= m) throw ContractViolation("combine_discrete: a_tilde out of range");
  return m * a + a_tilde;
}

std::pair<int, int> split_discrete(int a_dis, int m) {
  if (m <= 0) throw ContractViolation("split_discrete: m must be positive");
  if (a_dis < 0 || a_dis >= 2 * m) throw ContractViolation("split_discrete: a_dis out of range");
  return {a_dis / m, a_dis % m};
}

std::vector<int> feasible_discrete(const EnvState& s, const DeploymentSpec& spec) {
  const int m = static_cast<int>(spec.m());
  std::vector<int> out = reachable_chargers(s, spec);
  if (s.next_poi < spec.n()) {
    for (int j = 0; j < m; ++j) out.push_back(m + j);
  } else {
    out.push_back(m);
  }
  return out;
}

namespace {

double unit_interval(double a_con) { return (std::clamp(a_con, -1.0, 1.0) + 1.0) / 2.0; }

// Energy left on arrival at c_k, floored at zero.
double predicted_arrival_energy(const EnvState& s, const DeploymentSpec& spec, int c_k) {
  const Point2D c = spec.charge_points.at(static_cast<std::size_t>(c_k)).position;
  return std::max(0.0, s.drone.energy - spec.params.gamma_f * travel_time(s.drone.position, c, spec.params.drone_speed));
}

double charge_span(const EnvState& s, const DeploymentSpec& spec, int c_k) {
  return std::max(0.0, spec.params.energy_capacity - predicted_arrival_energy(s, spec, c_k)) / spec.params.gamma_c;
}

}  // namespace

JointAction physical_times(int a_dis, double a_con, const EnvState& s, const DeploymentSpec& spec) {
  if (!std::isfinite(a_con)) throw ContractViolation("physical_times: a_con is not finite");
  const int m = static_cast<int>(spec.m());
  const auto [a, a_tilde] = split_discrete(a_dis, m);
  JointAction act;
  act.a = a;
  act.a_tilde = a_tilde;
  act.a_dis = a_dis;
  act.a_con = std::clamp(a_con, -1.0, 1.0);
  const double u = unit_interval(a_con);
  if (a == 1) {
    if (s.next_poi < spec.n()) {
      const auto& poi = spec.pois[s.next_poi];
      act.tau = poi.tau_min + u * (poi.tau_max - poi.tau_min);
    }
  } else {
    act.tau_tilde = u * charge_span(s, spec, a_tilde);
  }
  return act;
}

double normalize_time(int a_dis, double duration, const EnvState& s, const DeploymentSpec& spec) {
  const auto [a, a_tilde] = split_discrete(a_dis, static_cast<int>(spec.m()));
  double lo = 0.0, hi = 0.0;
  if (a == 1) {
    if (s.next_poi >= spec.n()) return -1.0;
    lo = spec.pois[s.next_poi].tau_min;
    hi = spec.pois[s.next_poi].tau_max;
  } else {
    hi = charge_span(s, spec, a_tilde);
  }
  if (hi <= lo) return -1.0;
  return std::clamp(2.0 * (duration - lo) / (hi - lo) - 1.0, -1.0, 1.0);
}

std::string to_string(InferencePath p) {
  return p == InferencePath::decoder_only ? "decoder_only" : "encode_then_decode";
}

InferencePath inference_path_from_string(const std::string& s) {
  if (s == "decoder_only") return InferencePath::decoder_only;
  if (s == "encode_then_decode") return InferencePath::encode_then_decode;
  throw ParseError("", "unknown inference path \"" + s + "\"");
}

void CodecConfig::validate() const {
  if (m <= 0) throw ContractViolation("CodecConfig: m must be positive");
  if (kappa1 <= 0 || kappa2 <= 0) throw ContractViolation("CodecConfig: latent dimensions must be positive");
  if (use_aae && mutual_learning && state_dim <= 0) throw ContractViolation("CodecConfig: state_dim must be positive");
  if (!(alpha1 >= 0.0 && alpha1 <= 1.0) || !(alpha2 >= 0.0 && alpha2 <= 1.0)) {
    throw ContractViolation("CodecConfig: alpha weights must lie in [0, 1]");
  }
  if (!(lr > 0.0)) throw ContractViolation("CodecConfig: learning rate must be positive");
  if (!(table_init_std > 0.0)) throw ContractViolation("CodecConfig: table_init_std must be positive");
  for (int w : hidden) {
    if (w <= 0) throw ContractViolation("CodecConfig: hidden widths must be positive");
  }
}

nlohmann::json codec_config_to_json(const CodecConfig& c) {
  return {{"m", c.m},
          {"kappa1", c.kappa1},
          {"kappa2", c.kappa2},
          {"state_dim", c.state_dim},
          {"hidden", c.hidden},
          {"alpha1", c.alpha1},
          {"alpha2", c.alpha2},
          {"lr", c.lr},
          {"table_init_std", c.table_init_std},
          {"use_aae", c.use_aae},
          {"mutual_learning", c.mutual_learning},
          {"inference", to_string(c.inference)}};
}

CodecConfig codec_config_from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  CodecConfig c;
  c.m = static_cast<int>(r.integer("m"));
  c.kappa1 = static_cast<int>(r.integer("kappa1"));
  c.kappa2 = static_cast<int>(r.integer("kappa2"));
  c.state_dim = static_cast<int>(r.integer("state_dim"));
  c.hidden = r.at("hidden").get<std::vector<int>>();
  c.alpha1 = r.number("alpha1");
  c.alpha2 = r.number("alpha2");
  c.lr = r.number("lr");
  c.table_init_std = r.number("table_init_std");
  c.use_aae = r.boolean("use_aae");
  c.mutual_learning = r.boolean("mutual_learning");
  try {
    c.inference = inference_path_from_string(r.string("inference"));
  } catch (const ParseError& e) {
    throw ParseError(r.child_path("inference"), e.what());
  }
  r.finish();
  try {
    c.validate();
  } catch (const ContractViolation& e) {
    throw ParseError(path, e.what());
  }
  return c;
}

using nn::Matrix;

template <typename T>
ActionCodec<T>::ActionCodec(CodecConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const int rows = 2 * config_.m;
  const int k1 = config_.kappa1;
  const int k2 = config_.kappa2;
  table_.resize(rows, k1);
  std::mt19937_64 table_rng(derive_seed(seed, 0));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < k1; ++j) table_(i, j) = static_cast<T>(config_.table_init_std * gaussian(table_rng));
  }
  clip_table();
  prior_rng_.seed(derive_seed(seed, 4));
  if (!config_.use_aae) return;

  using nn::Activation;
  encoder_ = nn::DenseNet<T>::mlp(k1 + 1, config_.hidden, k2, Activation::relu, Activation::linear);
  decoder_ = nn::DenseNet<T>::mlp(k2, config_.hidden, k1 + 1, Activation::relu, Activation::tanh);
  const int disc_in = config_.mutual_learning ? k2 + k1 + config_.state_dim : k2;
  discriminator_ = nn::DenseNet<T>::mlp(disc_in, config_.hidden, 1, Activation::relu, Activation::sigmoid);
  encoder_.kaiming_init(derive_seed(seed, 1));
  decoder_.kaiming_init(derive_seed(seed, 2));
  discriminator_.kaiming_init(derive_seed(seed, 3));
  const nn::AdamConfig opt{config_.lr};
  enc_opt_ = nn::Adam<T>(encoder_, opt);
  dec_opt_ = nn::Adam<T>(decoder_, opt);
  disc_opt_ = nn::Adam<T>(discriminator_, opt);
}

template <typename T>
void ActionCodec<T>::require_aae(const char* what) const {
  if (!config_.use_aae) throw ContractViolation(std::string(what) + ": codec was built without the AAE");
}

template <typename T>
void ActionCodec<T>::clip_table() {
  table_ = table_.cwiseMax(T(-1)).cwiseMin(T(1));
}

template <typename T>
int ActionCodec<T>::lookup_discrete(const T* z, const std::vector<int>& feasible) const {
  if (feasible.empty()) throw ContractViolation("lookup_discrete: empty feasible set");
  int best = -1;
  T best_d = std::numeric_limits<T>::infinity();
  for (int idx : feasible) {
    if (idx < 0 || idx >= table_rows()) throw ContractViolation("lookup_discrete: feasible index out of range");
    T d = 0;
    for (int j = 0; j < config_.kappa1; ++j) {
      const T diff = z[j] - std::tanh(table_(idx, j));
      d += diff * diff;
    }
    if (d < best_d || (d == best_d && idx < best)) {
      best_d = d;
      best = idx;
    }
  }
  if (best < 0) throw ContractViolation("lookup_discrete: latent z is not finite");
  return best;
}

template <typename T>
int ActionCodec<T>::lookup_discrete(const std::vector<T>& z, const std::vector<int>& feasible) const {
  if (static_cast<int>(z.size()) != config_.kappa1) throw ContractViolation("lookup_discrete: z width mismatch");
  return lookup_discrete(z.data(), feasible);
}

template <typename T>
Matrix<T> ActionCodec<T>::decode_continuous_batch(const Matrix<T>& x) const {
  if (x.cols() != config_.kappa2) throw ContractViolation("decode_continuous: x width mismatch");
  if (!config_.use_aae) return x.leftCols(1);
  if (config_.inference == InferencePath::decoder_only) return decoder_.forward(x).rightCols(1);
  const int width = config_.kappa1 + 1;
  Matrix<T> padded = Matrix<T>::Zero(x.rows(), width);
  const int keep = std::min<int>(width, config_.kappa2);
  padded.leftCols(keep) = x.leftCols(keep);
  return decoder_.forward(encoder_.forward(padded)).rightCols(1);
}

template <typename T>
T ActionCodec<T>::decode_continuous(const T* x) const {
  Matrix<T> row(1, config_.kappa2);
  for (int j = 0; j < config_.kappa2; ++j) row(0, j) = x[j];
  return decode_continuous_batch(row)(0, 0);
}

template <typename T>
T ActionCodec<T>::decode_continuous(const std::vector<T>& x) const {
  if (static_cast<int>(x.size()) != config_.kappa2) throw ContractViolation("decode_continuous: x width mismatch");
  return decode_continuous(x.data());
}

template <typename T>
Matrix<T> ActionCodec<T>::embed(const std::vector<int>& a_dis) const {
  Matrix<T> emb(static_cast<Eigen::Index>(a_dis.size()), config_.kappa1);
  for (std::size_t b = 0; b < a_dis.size(); ++b) {
    if (a_dis[b] < 0 || a_dis[b] >= table_rows()) throw ContractViolation("ActionCodec: a_dis out of range");
    emb.row(static_cast<Eigen::Index>(b)) = table_.row(a_dis[b]);
  }
  return emb;
}

template <typename T>
Matrix<T> ActionCodec<T>::encoder_input(const Matrix<T>& emb, const Matrix<T>& a_con) const {
  if (a_con.rows() != emb.rows() || a_con.cols() != 1) throw ContractViolation("ActionCodec: a_con must be B x 1");
  Matrix<T> in(emb.rows(), config_.kappa1 + 1);
  in << emb, a_con;
  return in;
}

template <typename T>
Matrix<T> ActionCodec<T>::disc_input(const Matrix<T>& h, const Matrix<T>& emb, const Matrix<T>& states) const {
  if (!config_.mutual_learning) return h;
  if (states.rows() != h.rows() || states.cols() != config_.state_dim) {
    throw ContractViolation("ActionCodec: states must be B x state_dim");
  }
  Matrix<T> in(h.rows(), config_.kappa2 + config_.kappa1 + config_.state_dim);
  in << h, emb, states;
  return in;
}

template <typename T>
Matrix<T> ActionCodec<T>::sample_prior(std::size_t rows) {
  Matrix<T> p(static_cast<Eigen::Index>(rows), config_.kappa2);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = static_cast<T>(gaussian(prior_rng_));
  }
  return p;
}

namespace {

template <typename T>
struct L1Pass {
  double loss = 0.0;
  nn::Gradients<T> enc;
  nn::Gradients<T> dec;
  Matrix<T> table;  // empty unless requested
};

template <typename T>
L1Pass<T> l1_pass(const nn::DenseNet<T>& encoder, const nn::DenseNet<T>& decoder, const Matrix<T>& emb,
                  const Matrix<T>& in, const Matrix<T>& a_con, const std::vector<int>& a_dis, int k1, double alpha1,
                  int table_rows, bool want_table) {
  nn::ForwardCache<T> ce, cd;
  const Matrix<T> h = encoder.forward(in, ce);
  const Matrix<T> out = decoder.forward(h, cd);
  const Eigen::Index n = in.rows();
  const T a1 = static_cast<T>(alpha1);
  const Matrix<T> diff_emb = out.leftCols(k1) - emb;
  const Matrix<T> diff_con = out.rightCols(1) - a_con;
  L1Pass<T> p;
  p.loss = alpha1 * static_cast<double>(diff_emb.squaredNorm()) / static_cast<double>(n * k1) +
           (1.0 - alpha1) * static_cast<double>(diff_con.squaredNorm()) / static_cast<double>(n);
  Matrix<T> g_out(n, k1 + 1);
  g_out.leftCols(k1) = (a1 * T(2) / static_cast<T>(n * k1)) * diff_emb;
  g_out.rightCols(1) = ((T(1) - a1) * T(2) / static_cast<T>(n)) * diff_con;
  Matrix<T> dh;
  p.dec = decoder.backward(cd, g_out, &dh);
  if (!want_table) {
    p.enc = encoder.backward(ce, dh);
    return p;
  }
  Matrix<T> din;
  p.enc = encoder.backward(ce, dh, &din);
  p.table = Matrix<T>::Zero(table_rows, k1);
  for (Eigen::Index b = 0; b < n; ++b) {
    // encoder-input path plus the reconstruction-target path
    p.table.row(a_dis[static_cast<std::size_t>(b)]) += din.row(b).leftCols(k1) - g_out.row(b).leftCols(k1);
  }
  return p;
}

}  // namespace

template <typename T>
CodecLosses ActionCodec<T>::compute_losses(const CodecBatch<T>& batch, const Matrix<T>& prior) const {
  require_aae("compute_losses");
  if (batch.size() == 0) throw ContractViolation("compute_losses: empty batch");
  const Matrix<T> emb = embed(batch.a_dis);
  const Matrix<T> in = encoder_input(emb, batch.a_con);
  const Matrix<T> h = encoder_.forward(in);
  const Matrix<T> out = decoder_.forward(h);
  CodecLosses l;
  l.l1 = config_.alpha1 * static_cast<double>(nn::loss_mse<T>(out.leftCols(config_.kappa1), emb)) +
         (1.0 - config_.alpha1) * static_cast<double>(nn::loss_mse<T>(out.rightCols(1), batch.a_con));
  const Matrix<T> p_h = discriminator_.forward(disc_input(h, emb, batch.states));
  const Matrix<T> p_prior = discriminator_.forward(disc_input(prior, emb, batch.states));
  const Matrix<T> zeros = Matrix<T>::Zero(p_h.rows(), 1);
  const Matrix<T> ones = Matrix<T>::Ones(p_h.rows(), 1);
  l.l2 = config_.alpha2 * static_cast<double>(nn::loss_bce<T>(p_h, zeros)) +
         (1.0 - config_.alpha2) * static_cast<double>(nn::loss_bce<T>(p_prior, ones));
  l.l3 = static_cast<double>(nn::loss_bce<T>(p_h, ones));
  return l;
}

template <typename T>
Matrix<T> ActionCodec<T>::l1_table_gradient(const CodecBatch<T>& batch) const {
  require_aae("l1_table_gradient");
  const Matrix<T> emb = embed(batch.a_dis);
  const Matrix<T> in = encoder_input(emb, batch.a_con);
  return l1_pass(encoder_, decoder_, emb, in, batch.a_con, batch.a_dis, config_.kappa1, config_.alpha1, table_rows(), true)
      .table;
}

template <typename T>
double ActionCodec<T>::reconstruction_update(const CodecBatch<T>& batch) {
  require_aae("reconstruction_update");
  if (batch.size() == 0) throw ContractViolation("reconstruction_update: empty batch");
  const Matrix<T> emb = embed(batch.a_dis);
  const Matrix<T> in = encoder_input(emb, batch.a_con);
  auto pass = l1_pass(encoder_, decoder_, emb, in, batch.a_con, batch.a_dis, config_.kappa1, config_.alpha1, table_rows(),
                      config_.mutual_learning);
  if (!std::isfinite(pass.loss)) throw TrainingError("L1 is not finite");
  enc_opt_.step(encoder_, pass.enc);
  dec_opt_.step(decoder_, pass.dec);
  if (config_.mutual_learning) {
    if (!pass.table.allFinite()) throw TrainingError("non-finite embedding-table gradient");
    nn::adam_apply(table_, pass.table, table_moments_, ++table_steps_, nn::AdamConfig{config_.lr});
    clip_table();
  }
  return pass.loss;
}

template <typename T>
double ActionCodec<T>::discriminator_update(const CodecBatch<T>& batch, const Matrix<T>& prior) {
  require_aae("discriminator_update");
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw ContractViolation("discriminator_update: empty batch");
  if (prior.rows() != n || prior.cols() != config_.kappa2) throw ContractViolation("discriminator_update: prior shape");
  const Matrix<T> emb = embed(batch.a_dis);
  const Matrix<T> h = encoder_.forward(encoder_input(emb, batch.a_con));
  const Matrix<T> top = disc_input(h, emb, batch.states);
  Matrix<T> stacked(2 * n, top.cols());
  stacked << top, disc_input(prior, emb, batch.states);

  nn::ForwardCache<T> cache;
  const Matrix<T> p = discriminator_.forward(stacked, cache);
  const Matrix<T> zeros = Matrix<T>::Zero(n, 1);
  const Matrix<T> ones = Matrix<T>::Ones(n, 1);
  const T a2 = static_cast<T>(config_.alpha2);
  const double loss = config_.alpha2 * static_cast<double>(nn::loss_bce<T>(p.topRows(n), zeros)) +
                      (1.0 - config_.alpha2) * static_cast<double>(nn::loss_bce<T>(p.bottomRows(n), ones));
  if (!std::isfinite(loss)) throw TrainingError("L2 is not finite");
  Matrix<T> g(2 * n, 1);
  g.topRows(n) = a2 * nn::loss_bce_grad<T>(p.topRows(n), zeros);
  g.bottomRows(n) = (T(1) - a2) * nn::loss_bce_grad<T>(p.bottomRows(n), ones);
  disc_opt_.step(discriminator_, discriminator_.backward(cache, g));
  return loss;
}

template <typename T>
double ActionCodec<T>::encoder_adversarial_update(const CodecBatch<T>& batch) {
  require_aae("encoder_adversarial_update");
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw ContractViolation("encoder_adversarial_update: empty batch");
  const Matrix<T> emb = embed(batch.a_dis);
  nn::ForwardCache<T> ce, cd;
  const Matrix<T> h = encoder_.forward(encoder_input(emb, batch.a_con), ce);
  const Matrix<T> p = discriminator_.forward(disc_input(h, emb, batch.states), cd);
  const Matrix<T> ones = Matrix<T>::Ones(n, 1);
  const double loss = static_cast<double>(nn::loss_bce<T>(p, ones));
  if (!std::isfinite(loss)) throw TrainingError("L3 is not finite");
  const Matrix<T> dx = discriminator_.input_gradient(cd, nn::loss_bce_grad<T>(p, ones));
  enc_opt_.step(encoder_, encoder_.backward(ce, dx.leftCols(config_.kappa2)));
  return loss;
}

template <typename T>
CodecLosses ActionCodec<T>::pretrain_step(const CodecBatch<T>& batch) {
  CodecLosses l;
  l.l1 = reconstruction_update(batch);
  const Matrix<T> prior = sample_prior(batch.size());
  l.l2 = discriminator_update(batch, prior);
  l.l3 = encoder_adversarial_update(batch);
  return l;
}

template <typename T>
nlohmann::json ActionCodec<T>::to_json() const {
  nlohmann::json doc;
  doc["schema_version"] = nn::kCheckpointSchemaVersion;
  doc["kind"] = "action_codec";
  doc["config"] = codec_config_to_json(config_);
  doc["table"] = nn::matrix_to_json<T>(table_);
  if (config_.use_aae) {
    doc["encoder"] = nn::net_to_json(encoder_);
    doc["decoder"] = nn::net_to_json(decoder_);
    doc["discriminator"] = nn::net_to_json(discriminator_);
  }
  return doc;
}

template <typename T>
ActionCodec<T> ActionCodec<T>::from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  if (r.integer("schema_version") != nn::kCheckpointSchemaVersion) {
    throw ParseError(r.child_path("schema_version"), "unsupported checkpoint schema version");
  }
  if (r.string("kind") != "action_codec") throw ParseError(r.child_path("kind"), "not an action codec checkpoint");
  ActionCodec codec(codec_config_from_json(r.at("config"), r.child_path("config")), 0);
  auto table = nn::matrix_from_json<T>(r.at("table"), r.child_path("table"));
  if (table.rows() != codec.table_.rows() || table.cols() != codec.table_.cols()) {
    throw ParseError(r.child_path("table"), "table shape does not match 2m x kappa1");
  }
  codec.table_ = std::move(table);
  if (codec.config_.use_aae) {
    const auto load = [&](const char* key, nn::DenseNet<T>& net) {
      auto loaded = nn::net_from_json<T>(r.at(key), r.child_path(key));
      if (loaded.widths() != net.widths()) throw ParseError(r.child_path(key), "network widths do not match config");
      net = std::move(loaded);
    };
    load("encoder", codec.encoder_);
    load("decoder", codec.decoder_);
    load("discriminator", codec.discriminator_);
  }
  r.finish();
  return codec;
}

template <typename T>
void ActionCodec<T>::save_state(io::BinaryWriter& w) const {
  w.str(codec_config_to_json(config_).dump());
  nn::Matrix<T> t = table_;
  std::vector<double> flat(t.data(), t.data() + t.size());
  w.doubles(flat);
  const auto put = [&](const Matrix<T>& mtx) {
    w.u64(static_cast<std::uint64_t>(mtx.rows()));
    w.u64(static_cast<std::uint64_t>(mtx.cols()));
    w.doubles(std::vector<double>(mtx.data(), mtx.data() + mtx.size()));
  };
  put(table_moments_.m);
  put(table_moments_.v);
  w.i64(table_steps_);
  w.str(rng_to_string(prior_rng_));
  if (!config_.use_aae) return;
  nn::save_net(w, encoder_);
  nn::save_net(w, decoder_);
  nn::save_net(w, discriminator_);
  enc_opt_.save(w);
  dec_opt_.save(w);
  disc_opt_.save(w);
}

template <typename T>
void ActionCodec<T>::load_state(io::BinaryReader& r) {
  const auto cfg = codec_config_from_json(nlohmann::json::parse(r.str()), "codec");
  if (!(cfg == config_)) throw ParseError("codec", "saved codec configuration differs from the current one");
  const auto flat = r.doubles();
  if (static_cast<Eigen::Index>(flat.size()) != table_.size()) throw ParseError("codec.table", "size mismatch");
  for (Eigen::Index i = 0; i < table_.size(); ++i) table_.data()[i] = static_cast<T>(flat[static_cast<std::size_t>(i)]);
  const auto get = [&]() {
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    const auto data = r.doubles();
    Matrix<T> mtx(rows, cols);
    for (Eigen::Index i = 0; i < mtx.size(); ++i) mtx.data()[i] = static_cast<T>(data[static_cast<std::size_t>(i)]);
    return mtx;
  };
  table_moments_.m = get();
  table_moments_.v = get();
  table_steps_ = r.i64();
  rng_from_string(prior_rng_, r.str());
  if (!config_.use_aae) return;
  encoder_ = nn::load_net<T>(r);
  decoder_ = nn::load_net<T>(r);
  discriminator_ = nn::load_net<T>(r);
  enc_opt_.load(r);
  dec_opt_.load(r);
  disc_opt_.load(r);
}

template class ActionCodec<float>;
template class ActionCodec<double>;

}  // namespace hadmc
