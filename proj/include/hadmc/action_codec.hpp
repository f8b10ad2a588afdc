#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hadmc/nn.hpp"
#include "hadmc/sim_env.hpp"

namespace hadmc {

/// a_dis = m * a + a_tilde.
int combine_discrete(int a, int a_tilde, int m);
/// Inverse of combine_discrete: (a_dis / m, a_dis % m).
std::pair<int, int> split_discrete(int a_dis, int m);

/// Discrete actions the decoder may emit at `s`: every observe slot m + j
/// while PoIs remain (only m + 0, "home", after the last PoI), plus the
/// rendezvous slots j for reachable charging points.
std::vector<int> feasible_discrete(const EnvState& s, const DeploymentSpec& spec);

/// Maps a normalized a_con in [-1, 1] to physical durations and builds the
/// full joint action for `a_dis`.
JointAction physical_times(int a_dis, double a_con, const EnvState& s, const DeploymentSpec& spec);

/// Inverse ValueCoder: the a_con that physical_times would turn into the
/// given duration (clamped to [-1, 1]).
double normalize_time(int a_dis, double duration, const EnvState& s, const DeploymentSpec& spec);

enum class InferencePath { decoder_only, encode_then_decode };

std::string to_string(InferencePath p);
InferencePath inference_path_from_string(const std::string& s);

struct CodecConfig {
  int m = 4;
  int kappa1 = 6;
  int kappa2 = 14;
  int state_dim = 0;
  std::vector<int> hidden{256, 256};
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  double lr = 4e-5;
  double table_init_std = 1.0;
  bool use_aae = true;          // false: a_con = x[0], no networks
  bool mutual_learning = true;  // false: L1 leaves the table alone, D sees h only
  InferencePath inference = InferencePath::decoder_only;

  void validate() const;
  bool operator==(const CodecConfig&) const = default;
};

nlohmann::json codec_config_to_json(const CodecConfig& c);
CodecConfig codec_config_from_json(const nlohmann::json& doc, const std::string& path);

template <typename T>
struct CodecBatch {
  nn::Matrix<T> states;  // B x state_dim
  std::vector<int> a_dis;
  nn::Matrix<T> a_con;   // B x 1
  std::size_t size() const { return a_dis.size(); }
};

struct CodecLosses {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

/// Embedding table plus adversarial autoencoder.
template <typename T>
class ActionCodec {
 public:
  ActionCodec() = default;
  ActionCodec(CodecConfig config, std::uint64_t seed);

  const CodecConfig& config() const { return config_; }
  int table_rows() const { return 2 * config_.m; }

  nn::Matrix<T>& table() { return table_; }
  const nn::Matrix<T>& table() const { return table_; }
  nn::DenseNet<T>& encoder() { return encoder_; }
  const nn::DenseNet<T>& encoder() const { return encoder_; }
  nn::DenseNet<T>& decoder() { return decoder_; }
  const nn::DenseNet<T>& decoder() const { return decoder_; }
  nn::DenseNet<T>& discriminator() { return discriminator_; }
  const nn::DenseNet<T>& discriminator() const { return discriminator_; }

  /// Nearest tanh(row) to `z` among `feasible`; lowest index on ties.
  int lookup_discrete(const T* z, const std::vector<int>& feasible) const;
  int lookup_discrete(const std::vector<T>& z, const std::vector<int>& feasible) const;

  /// Continuous component of the decoder output, in [-1, 1]. Without the
  /// AAE this is x[0].
  T decode_continuous(const T* x) const;
  T decode_continuous(const std::vector<T>& x) const;
  /// Batched form: one latent x per row.
  nn::Matrix<T> decode_continuous_batch(const nn::Matrix<T>& x) const;

  /// Loss values on `batch` with `prior` as the h' sample (B x kappa2). No
  /// parameters change.
  CodecLosses compute_losses(const CodecBatch<T>& batch, const nn::Matrix<T>& prior) const;

  /// dL1/d(table) including both the encoder-input and the target paths.
  nn::Matrix<T> l1_table_gradient(const CodecBatch<T>& batch) const;

  /// One reconstruction-phase step: L1 into encoder, decoder and (with
  /// mutual learning) the table, then re-clip. Returns L1.
  double reconstruction_update(const CodecBatch<T>& batch);
  /// One L2 step on the discriminator. Returns L2.
  double discriminator_update(const CodecBatch<T>& batch, const nn::Matrix<T>& prior);
  /// One L3 step on the encoder only. Returns L3.
  double encoder_adversarial_update(const CodecBatch<T>& batch);

  /// Reconstruction phase, then regularization phase (L2, then L3). The
  /// prior sample is drawn from the codec's own stream.
  CodecLosses pretrain_step(const CodecBatch<T>& batch);

  nn::Matrix<T> sample_prior(std::size_t rows);

  /// Self-describing checkpoint; the networks are omitted without the AAE.
  nlohmann::json to_json() const;
  static ActionCodec from_json(const nlohmann::json& doc, const std::string& path = "");

  /// Parameters, optimizer moments and the prior stream.
  void save_state(io::BinaryWriter& w) const;
  void load_state(io::BinaryReader& r);

  template <typename U>
  ActionCodec<U> cast() const;

 private:
  template <typename U>
  friend class ActionCodec;

  nn::Matrix<T> embed(const std::vector<int>& a_dis) const;
  nn::Matrix<T> encoder_input(const nn::Matrix<T>& emb, const nn::Matrix<T>& a_con) const;
  nn::Matrix<T> disc_input(const nn::Matrix<T>& h, const nn::Matrix<T>& emb, const nn::Matrix<T>& states) const;
  void clip_table();
  void require_aae(const char* what) const;

  CodecConfig config_;
  nn::Matrix<T> table_;
  nn::DenseNet<T> encoder_;
  nn::DenseNet<T> decoder_;
  nn::DenseNet<T> discriminator_;
  nn::Adam<T> enc_opt_;
  nn::Adam<T> dec_opt_;
  nn::Adam<T> disc_opt_;
  nn::AdamMoments<T> table_moments_;
  long table_steps_ = 0;
  std::mt19937_64 prior_rng_;
};

template <typename T>
template <typename U>
ActionCodec<U> ActionCodec<T>::cast() const {
  ActionCodec<U> out;
  out.config_ = config_;
  out.table_ = table_.template cast<U>();
  out.encoder_ = encoder_.template cast<U>();
  out.decoder_ = decoder_.template cast<U>();
  out.discriminator_ = discriminator_.template cast<U>();
  const nn::AdamConfig opt{config_.lr};
  if (config_.use_aae) {
    out.enc_opt_ = nn::Adam<U>(out.encoder_, opt);
    out.dec_opt_ = nn::Adam<U>(out.decoder_, opt);
    out.disc_opt_ = nn::Adam<U>(out.discriminator_, opt);
  }
  out.prior_rng_ = prior_rng_;
  return out;
}

}  // namespace hadmc
