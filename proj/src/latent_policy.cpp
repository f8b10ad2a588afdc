#include "hadmc/latent_policy.hpp"

#include <algorithm>
#include <cmath>

#include "hadmc/errors.hpp"
#include "hadmc/rng.hpp"

namespace hadmc {

using nn::Matrix;

void PolicyHyper::validate() const {
  if (!(sigma >= 0.0) || !(sigma_target >= 0.0) || !(noise_clip >= 0.0)) {
    throw ContractViolation("PolicyHyper: noise scales must be nonnegative");
  }
  if (!(discount > 0.0 && discount <= 1.0)) throw ContractViolation("PolicyHyper: discount must lie in (0, 1]");
  if (!(lr > 0.0)) throw ContractViolation("PolicyHyper: learning rate must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ContractViolation("PolicyHyper: delta must lie in (0, 1]");
  if (policy_delay <= 0) throw ContractViolation("PolicyHyper: policy_delay must be positive");
  for (int w : hidden) {
    if (w <= 0) throw ContractViolation("PolicyHyper: hidden widths must be positive");
  }
}

nlohmann::json policy_hyper_to_json(const PolicyHyper& h) {
  return {{"sigma", h.sigma},       {"sigma_target", h.sigma_target}, {"noise_clip", h.noise_clip},
          {"discount", h.discount}, {"lr", h.lr},                     {"delta", h.delta},
          {"policy_delay", h.policy_delay}, {"hidden", h.hidden}};
}

PolicyHyper policy_hyper_from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  PolicyHyper h;
  h.sigma = r.number("sigma");
  h.sigma_target = r.number("sigma_target");
  h.noise_clip = r.number("noise_clip");
  h.discount = r.number("discount");
  h.lr = r.number("lr");
  h.delta = r.number("delta");
  h.policy_delay = static_cast<int>(r.integer("policy_delay"));
  h.hidden = r.at("hidden").get<std::vector<int>>();
  r.finish();
  try {
    h.validate();
  } catch (const ContractViolation& e) {
    throw ParseError(path, e.what());
  }
  return h;
}

PolicyBatch make_policy_batch(const std::vector<const PolicyTuple*>& tuples) {
  if (tuples.empty()) throw ContractViolation("make_policy_batch: empty batch");
  const auto n = static_cast<Eigen::Index>(tuples.size());
  const auto sd = static_cast<Eigen::Index>(tuples[0]->s.size());
  const auto ad = static_cast<Eigen::Index>(tuples[0]->latent.size());
  PolicyBatch b;
  b.s.resize(n, sd);
  b.latent.resize(n, ad);
  b.r.resize(n, 1);
  b.s_next.resize(n, sd);
  b.done.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = *tuples[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(t.s.size()) != sd || static_cast<Eigen::Index>(t.s_next.size()) != sd ||
        static_cast<Eigen::Index>(t.latent.size()) != ad) {
      throw ContractViolation("make_policy_batch: ragged tuples");
    }
    b.s.row(i) = Eigen::Map<const nn::RowVector<float>>(t.s.data(), sd);
    b.latent.row(i) = Eigen::Map<const nn::RowVector<float>>(t.latent.data(), ad);
    b.s_next.row(i) = Eigen::Map<const nn::RowVector<float>>(t.s_next.data(), sd);
    b.r(i, 0) = t.r;
    b.done(i, 0) = t.terminal ? 1.0f : 0.0f;
  }
  return b;
}

double td3_target(double r, bool terminal, double q1, double q2, double discount) {
  if (!(discount > 0.0 && discount <= 1.0)) throw ContractViolation("td3_target: discount must lie in (0, 1]");
  return terminal ? r : r + discount * std::min(q1, q2);
}

LatentPolicy::LatentPolicy(int state_dim, int action_dim, PolicyHyper hyper, std::uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim), hyper_(std::move(hyper)) {
  if (state_dim <= 0 || action_dim <= 0) throw ContractViolation("LatentPolicy: dimensions must be positive");
  hyper_.validate();
  using nn::Activation;
  actor_ = nn::DenseNet<float>::mlp(state_dim, hyper_.hidden, action_dim, Activation::relu, Activation::tanh);
  critic1_ = nn::DenseNet<float>::mlp(state_dim + action_dim, hyper_.hidden, 1, Activation::relu, Activation::linear);
  critic2_ = critic1_;
  actor_.kaiming_init(derive_seed(seed, 10));
  critic1_.kaiming_init(derive_seed(seed, 11));
  critic2_.kaiming_init(derive_seed(seed, 12));
  actor_t_ = actor_;
  critic1_t_ = critic1_;
  critic2_t_ = critic2_;
  const nn::AdamConfig opt{hyper_.lr};
  actor_opt_ = nn::Adam<float>(actor_, opt);
  critic1_opt_ = nn::Adam<float>(critic1_, opt);
  critic2_opt_ = nn::Adam<float>(critic2_, opt);
  rng_.seed(derive_seed(seed, 13));
}

std::vector<float> LatentPolicy::act(const std::vector<float>& s) const {
  if (static_cast<int>(s.size()) != state_dim_) throw ContractViolation("LatentPolicy::act: state width mismatch");
  const Matrix<float> in = Eigen::Map<const Matrix<float>>(s.data(), 1, state_dim_);
  const Matrix<float> out = actor_.forward(in);
  return std::vector<float>(out.data(), out.data() + out.size());
}

std::vector<float> LatentPolicy::select_action(const std::vector<float>& s, double sigma) {
  if (!(sigma >= 0.0)) throw ContractViolation("select_action: sigma must be nonnegative");
  auto a = act(s);
  if (sigma == 0.0) return a;
  for (auto& v : a) {
    v = std::clamp(static_cast<float>(v + sigma * gaussian(rng_)), -1.0f, 1.0f);
  }
  return a;
}

Matrix<float> LatentPolicy::target_actions(const Matrix<float>& s_next, double sigma_target, double clip) {
  Matrix<float> a = actor_t_.forward(s_next);
  if (sigma_target > 0.0 && clip > 0.0) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double eps = std::clamp(sigma_target * gaussian(rng_), -clip, clip);
        a(r, c) = static_cast<float>(a(r, c) + eps);
      }
    }
  }
  return a.cwiseMax(-1.0f).cwiseMin(1.0f);
}

namespace {

Matrix<float> concat(const Matrix<float>& a, const Matrix<float>& b) {
  Matrix<float> out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

Matrix<float> LatentPolicy::td_targets(const PolicyBatch& batch) {
  const Matrix<float> a2 = target_actions(batch.s_next, hyper_.sigma_target, hyper_.noise_clip);
  const Matrix<float> sa2 = concat(batch.s_next, a2);
  const Matrix<float> q1 = critic1_t_.forward(sa2);
  const Matrix<float> q2 = critic2_t_.forward(sa2);
  const float lambda = static_cast<float>(hyper_.discount);
  return (batch.r.array() + lambda * (1.0f - batch.done.array()) * q1.array().min(q2.array())).matrix();
}

double LatentPolicy::critic_update(const PolicyBatch& batch, const Matrix<float>& targets) {
  const Matrix<float> sa = concat(batch.s, batch.latent);
  double total = 0.0;
  nn::DenseNet<float>* critics[2] = {&critic1_, &critic2_};
  nn::Adam<float>* opts[2] = {&critic1_opt_, &critic2_opt_};
  for (int i = 0; i < 2; ++i) {
    nn::ForwardCache<float> cache;
    const Matrix<float> q = critics[i]->forward(sa, cache);
    const double loss = nn::loss_mse<float>(q, targets);
    if (!std::isfinite(loss)) throw TrainingError("critic loss is not finite");
    opts[i]->step(*critics[i], critics[i]->backward(cache, nn::loss_mse_grad<float>(q, targets)));
    total += loss;
  }
  ++critic_updates_;
  return total / 2.0;
}

double LatentPolicy::actor_update(const PolicyBatch& batch) {
  nn::ForwardCache<float> ca, cc;
  const Matrix<float> a = actor_.forward(batch.s, ca);
  const Matrix<float> q = critic1_.forward(concat(batch.s, a), cc);
  const auto n = static_cast<float>(q.rows());
  const double loss = -static_cast<double>(q.mean());
  if (!std::isfinite(loss)) throw TrainingError("actor loss is not finite");
  const Matrix<float> dq = Matrix<float>::Constant(q.rows(), 1, -1.0f / n);
  const Matrix<float> dx = critic1_.input_gradient(cc, dq);
  actor_opt_.step(actor_, actor_.backward(ca, dx.rightCols(action_dim_)));
  ++actor_updates_;
  return loss;
}

void LatentPolicy::update_targets() {
  nn::soft_update(actor_t_, actor_, hyper_.delta);
  nn::soft_update(critic1_t_, critic1_, hyper_.delta);
  nn::soft_update(critic2_t_, critic2_, hyper_.delta);
}

PolicyStepReport LatentPolicy::train_step(const PolicyBatch& batch) {
  PolicyStepReport rep;
  rep.critic_loss = critic_update(batch, td_targets(batch));
  if (critic_updates_ % hyper_.policy_delay == 0) {
    rep.actor_loss = actor_update(batch);
    rep.actor_updated = true;
    update_targets();
  }
  return rep;
}

nlohmann::json LatentPolicy::to_json() const {
  return {{"schema_version", nn::kCheckpointSchemaVersion},
          {"kind", "latent_policy"},
          {"state_dim", state_dim_},
          {"action_dim", action_dim_},
          {"hyper", policy_hyper_to_json(hyper_)},
          {"critic_updates", critic_updates_},
          {"actor_updates", actor_updates_},
          {"actor", nn::net_to_json(actor_)},
          {"critic1", nn::net_to_json(critic1_)},
          {"critic2", nn::net_to_json(critic2_)},
          {"target_actor", nn::net_to_json(actor_t_)},
          {"target_critic1", nn::net_to_json(critic1_t_)},
          {"target_critic2", nn::net_to_json(critic2_t_)}};
}

LatentPolicy LatentPolicy::from_json(const nlohmann::json& doc, const std::string& path) {
  io::ObjectReader r(doc, path);
  if (r.integer("schema_version") != nn::kCheckpointSchemaVersion) {
    throw ParseError(r.child_path("schema_version"), "unsupported checkpoint schema version");
  }
  if (r.string("kind") != "latent_policy") throw ParseError(r.child_path("kind"), "not a latent policy checkpoint");
  const int sd = static_cast<int>(r.integer("state_dim"));
  const int ad = static_cast<int>(r.integer("action_dim"));
  if (sd <= 0 || ad <= 0) throw ParseError(path, "dimensions must be positive");
  LatentPolicy p(sd, ad, policy_hyper_from_json(r.at("hyper"), r.child_path("hyper")), 0);
  p.critic_updates_ = r.integer("critic_updates");
  p.actor_updates_ = r.integer("actor_updates");
  const auto load = [&](const char* key, nn::DenseNet<float>& net) {
    auto loaded = nn::net_from_json<float>(r.at(key), r.child_path(key));
    if (loaded.widths() != net.widths()) throw ParseError(r.child_path(key), "network widths do not match dimensions");
    net = std::move(loaded);
  };
  load("actor", p.actor_);
  load("critic1", p.critic1_);
  load("critic2", p.critic2_);
  load("target_actor", p.actor_t_);
  load("target_critic1", p.critic1_t_);
  load("target_critic2", p.critic2_t_);
  r.finish();
  return p;
}

void LatentPolicy::save_state(io::BinaryWriter& w) const {
  w.i64(state_dim_);
  w.i64(action_dim_);
  w.str(policy_hyper_to_json(hyper_).dump());
  w.i64(critic_updates_);
  w.i64(actor_updates_);
  for (const auto* net : {&actor_, &critic1_, &critic2_, &actor_t_, &critic1_t_, &critic2_t_}) nn::save_net(w, *net);
  actor_opt_.save(w);
  critic1_opt_.save(w);
  critic2_opt_.save(w);
  w.str(rng_to_string(rng_));
}

void LatentPolicy::load_state(io::BinaryReader& r) {
  if (r.i64() != state_dim_ || r.i64() != action_dim_) throw ParseError("policy", "saved dimensions differ");
  if (!(policy_hyper_from_json(nlohmann::json::parse(r.str()), "policy.hyper") == hyper_)) {
    throw ParseError("policy.hyper", "saved hyperparameters differ");
  }
  critic_updates_ = r.i64();
  actor_updates_ = r.i64();
  for (auto* net : {&actor_, &critic1_, &critic2_, &actor_t_, &critic1_t_, &critic2_t_}) *net = nn::load_net<float>(r);
  actor_opt_.load(r);
  critic1_opt_.load(r);
  critic2_opt_.load(r);
  rng_from_string(rng_, r.str());
}

}  // namespace hadmc
