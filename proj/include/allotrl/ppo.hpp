#pragma once

// From-scratch PPO over a Gaussian policy on pre-softmax logits:
// tanh feedforward actor/critic, reverse-mode gradients through the dense
// stack, GAE, clipped surrogate, entropy schedule, Adam-style moments,
// and the phased training loop with bootstrap data selection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "allotrl/common.hpp"
#include "allotrl/env.hpp"
#include "allotrl/marketdata.hpp"
#include "allotrl/metrics.hpp"
#include "allotrl/synth.hpp"

namespace allotrl {

// ---------------------------------------------------------------------
// Networks

struct DenseLayer {
  int in = 0, out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

struct Mlp {
  std::vector<DenseLayer> layers;  // tanh between layers, linear output

  static Mlp make(const std::vector<int>& sizes, Rng& rng) {
    Mlp net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      DenseLayer l;
      l.in = sizes[i];
      l.out = sizes[i + 1];
      const double scale =
          std::sqrt(6.0 / static_cast<double>(l.in + l.out));
      l.w.resize(static_cast<std::size_t>(l.in) * l.out);
      for (auto& v : l.w) v = (2.0 * rng.uniform() - 1.0) * scale;
      l.b.assign(static_cast<std::size_t>(l.out), 0.0);
      net.layers.push_back(std::move(l));
    }
    return net;
  }

  std::vector<int> shape() const {
    std::vector<int> s;
    if (layers.empty()) return s;
    s.push_back(layers.front().in);
    for (const auto& l : layers) s.push_back(l.out);
    return s;
  }
};

struct MlpCache {
  // inputs[i] is the input to layer i; outputs[i] its post-activation.
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> outputs;
};

inline std::vector<double> mlp_forward(const Mlp& net,
                                       const std::vector<double>& x,
                                       MlpCache* cache = nullptr) {
  std::vector<double> cur = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const DenseLayer& l = net.layers[i];
    if (static_cast<int>(cur.size()) != l.in)
      throw ArgumentError("mlp_forward: input size mismatch");
    if (cache) cache->inputs.push_back(cur);
    std::vector<double> next(static_cast<std::size_t>(l.out));
    for (int o = 0; o < l.out; ++o) {
      double s = l.b[static_cast<std::size_t>(o)];
      const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
      for (int j = 0; j < l.in; ++j) s += wrow[j] * cur[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(o)] = s;
    }
    const bool last = i + 1 == net.layers.size();
    if (!last)
      for (auto& v : next) v = std::tanh(v);
    if (cache) cache->outputs.push_back(next);
    cur = std::move(next);
  }
  return cur;
}

struct MlpGrads {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  static MlpGrads zeros_like(const Mlp& net) {
    MlpGrads g;
    for (const auto& l : net.layers) {
      g.w.emplace_back(l.w.size(), 0.0);
      g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
  }
};

// Accumulates parameter grads for one sample; returns nothing (input grad
// is not needed: observations are constants).
inline void mlp_backward(const Mlp& net, const MlpCache& cache,
                         std::vector<double> dy, MlpGrads& grads) {
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const DenseLayer& l = net.layers[static_cast<std::size_t>(i)];
    const auto& x = cache.inputs[static_cast<std::size_t>(i)];
    const auto& y = cache.outputs[static_cast<std::size_t>(i)];
    const bool last = i + 1 == static_cast<int>(net.layers.size());
    std::vector<double> dz = std::move(dy);
    if (!last)
      for (int o = 0; o < l.out; ++o)
        dz[static_cast<std::size_t>(o)] *=
            1.0 - y[static_cast<std::size_t>(o)] * y[static_cast<std::size_t>(o)];
    auto& gw = grads.w[static_cast<std::size_t>(i)];
    auto& gb = grads.b[static_cast<std::size_t>(i)];
    std::vector<double> dx(static_cast<std::size_t>(l.in), 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double d = dz[static_cast<std::size_t>(o)];
      gb[static_cast<std::size_t>(o)] += d;
      const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
      double* gwrow = &gw[static_cast<std::size_t>(o) * l.in];
      for (int j = 0; j < l.in; ++j) {
        gwrow[j] += d * x[static_cast<std::size_t>(j)];
        dx[static_cast<std::size_t>(j)] += d * wrow[j];
      }
    }
    dy = std::move(dx);
  }
}

struct NetworkParams {
  Mlp actor;                          // 19 -> 64 -> 64 -> 3
  Mlp critic;                         // 19 -> 64 -> 64 -> 1
  std::vector<double> log_std = {0.0, 0.0, 0.0};

  static NetworkParams make(Rng& rng, int obs_dim = kObsDim,
                            int hidden = 64) {
    NetworkParams p;
    p.actor = Mlp::make({obs_dim, hidden, hidden, kNumAssets}, rng);
    p.critic = Mlp::make({obs_dim, hidden, hidden, 1}, rng);
    p.log_std.assign(kNumAssets, 0.0);
    return p;
  }

  bool same_shape(const NetworkParams& other) const {
    return actor.shape() == other.actor.shape() &&
           critic.shape() == other.critic.shape() &&
           log_std.size() == other.log_std.size();
  }
};

struct ParamGrads {
  MlpGrads actor;
  MlpGrads critic;
  std::vector<double> log_std;

  static ParamGrads zeros_like(const NetworkParams& p) {
    ParamGrads g;
    g.actor = MlpGrads::zeros_like(p.actor);
    g.critic = MlpGrads::zeros_like(p.critic);
    g.log_std.assign(p.log_std.size(), 0.0);
    return g;
  }
};

// Flat views over all parameter (or gradient) tensors, in a fixed order.
inline std::vector<std::vector<double>*> tensor_views(NetworkParams& p) {
  std::vector<std::vector<double>*> v;
  for (auto& l : p.actor.layers) {
    v.push_back(&l.w);
    v.push_back(&l.b);
  }
  for (auto& l : p.critic.layers) {
    v.push_back(&l.w);
    v.push_back(&l.b);
  }
  v.push_back(&p.log_std);
  return v;
}

inline std::vector<std::vector<double>*> tensor_views(ParamGrads& g) {
  std::vector<std::vector<double>*> v;
  for (std::size_t i = 0; i < g.actor.w.size(); ++i) {
    v.push_back(&g.actor.w[i]);
    v.push_back(&g.actor.b[i]);
  }
  for (std::size_t i = 0; i < g.critic.w.size(); ++i) {
    v.push_back(&g.critic.w[i]);
    v.push_back(&g.critic.b[i]);
  }
  v.push_back(&g.log_std);
  return v;
}

// Deep copy for cross-phase weight transfer (value semantics already
// copy; the named function documents intent at call sites).
inline NetworkParams transfer_weights(const NetworkParams& source) {
  return source;
}

// ---------------------------------------------------------------------
// Policy evaluation

inline std::vector<double> obs_to_vec(const Observation& o) {
  return std::vector<double>(o.begin(), o.end());
}

struct PolicyOutput {
  Vec3 mean{};
  Vec3 log_std{};
};

inline PolicyOutput policy_forward(const NetworkParams& params,
                                   const Observation& obs) {
  for (double v : obs)
    if (!std::isfinite(v)) throw NumericError("policy_forward: non-finite obs");
  auto out = mlp_forward(params.actor, obs_to_vec(obs));
  PolicyOutput po;
  for (int k = 0; k < 3; ++k) {
    po.mean[static_cast<std::size_t>(k)] = out[static_cast<std::size_t>(k)];
    po.log_std[static_cast<std::size_t>(k)] =
        params.log_std[static_cast<std::size_t>(k)];
  }
  return po;
}

inline double value_forward(const NetworkParams& params,
                            const Observation& obs) {
  return mlp_forward(params.critic, obs_to_vec(obs))[0];
}

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double gaussian_log_prob(const Vec3& a, const Vec3& mean,
                                const Vec3& log_std) {
  double lp = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double s = std::exp(log_std[static_cast<std::size_t>(k)]);
    const double z = (a[static_cast<std::size_t>(k)] -
                      mean[static_cast<std::size_t>(k)]) / s;
    lp += -0.5 * z * z - log_std[static_cast<std::size_t>(k)] - 0.5 * kLog2Pi;
  }
  return lp;
}

struct SampledAction {
  Vec3 action{};
  double log_prob = 0.0;
};

inline SampledAction sample_action(const Vec3& mean, const Vec3& log_std,
                                   Rng& rng) {
  if (!all_finite(mean) || !all_finite(log_std))
    throw NumericError("sample_action: non-finite inputs");
  SampledAction out;
  for (int k = 0; k < 3; ++k)
    out.action[static_cast<std::size_t>(k)] =
        mean[static_cast<std::size_t>(k)] +
        std::exp(log_std[static_cast<std::size_t>(k)]) * rng.normal();
  out.log_prob = gaussian_log_prob(out.action, mean, log_std);
  return out;
}

// Gaussian differential entropy: sum_i (log_std_i + 0.5 ln(2 pi e)).
inline double gaussian_entropy(const std::vector<double>& log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * (kLog2Pi + 1.0);
  return h;
}

// ---------------------------------------------------------------------
// Advantage estimation and losses

// Backward GAE recursion; `boundaries[t]` marks a terminal transition at
// step t (the value bootstrap is cut there).
inline std::vector<double> gae(const std::vector<double>& rewards,
                               const std::vector<double>& values,
                               const std::vector<bool>& boundaries,
                               double bootstrap_value, double gamma,
                               double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || boundaries.size() != n)
    throw ArgumentError("gae: length mismatch");
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = boundaries[i] ? 0.0 : 1.0;
    const double v_next = i + 1 < n ? values[i + 1] : bootstrap_value;
    const double delta = rewards[i] + gamma * v_next * not_done - values[i];
    running = delta + gamma * lambda * not_done * running;
    adv[i] = running;
  }
  return adv;
}

inline double clipped_policy_loss(const std::vector<double>& new_log_probs,
                                  const std::vector<double>& old_log_probs,
                                  const std::vector<double>& advantages,
                                  double clip_eps) {
  const std::size_t n = new_log_probs.size();
  if (old_log_probs.size() != n || advantages.size() != n)
    throw ArgumentError("clipped_policy_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = std::exp(new_log_probs[i] - old_log_probs[i]);
    const double clipped =
        std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    total += std::min(ratio * advantages[i], clipped * advantages[i]);
  }
  return -total / static_cast<double>(n);
}

inline double value_loss(const std::vector<double>& values_pred,
                         const std::vector<double>& values_target) {
  if (values_pred.size() != values_target.size())
    throw ArgumentError("value_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < values_pred.size(); ++i) {
    const double d = values_pred[i] - values_target[i];
    total += d * d;
  }
  return total / static_cast<double>(values_pred.size());
}

inline double total_loss(double policy_loss, double entropy, double v_loss,
                         double beta_entropy, double beta_value) {
  return policy_loss + beta_entropy * (-entropy) + beta_value * v_loss;
}

// ---------------------------------------------------------------------
// Training configuration and trajectory storage

struct PpoConfig {
  double gamma = 0.99;
  double lr = 0.001;
  double clip_eps = 0.2;
  int n_steps = 2048;
  int batch_size = 64;
  double beta_value = 1.0;
  double beta_entropy_start = 0.00005;
  double gae_lambda = 0.95;
  int epochs_per_update = 10;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
  int episodes = 300;
  int eval_interval_episodes = 10;
  double entropy_decay_end_fraction = 0.1;
  double selection_mdd_penalty = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int hidden = 64;

  void validate() const {
    if (gamma < 0.0 || gamma >= 1.0) throw ValidationError("ppo.gamma in [0,1)");
    if (!(clip_eps > 0.0)) throw ValidationError("ppo.clip_eps must be > 0");
    if (n_steps < 1 || batch_size < 1)
      throw ValidationError("ppo.n_steps and ppo.batch_size must be >= 1");
    if (epochs_per_update < 1)
      throw ValidationError("ppo.epochs_per_update must be >= 1");
    if (episodes < 0) throw ValidationError("ppo.episodes must be >= 0");
  }
};

struct EntropySchedule {
  double beta_start = 0.00005;
  double decay_end_fraction = 0.1;

  // progress = completed fraction of total training episodes
  double beta(double progress) const {
    if (decay_end_fraction <= 0.0) return 0.0;
    return beta_start * std::max(0.0, 1.0 - progress / decay_end_fraction);
  }
};

struct Trajectory {
  std::vector<Observation> observations;
  std::vector<Vec3> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<bool> boundaries;
  double bootstrap_value = 0.0;

  std::size_t size() const { return rewards.size(); }
  void clear() {
    observations.clear();
    actions.clear();
    log_probs.clear();
    rewards.clear();
    values.clear();
    boundaries.clear();
    bootstrap_value = 0.0;
  }
};

// ---------------------------------------------------------------------
// Loss + gradient over a minibatch

struct MinibatchView {
  const std::vector<Observation>& observations;
  const std::vector<Vec3>& actions;
  const std::vector<double>& old_log_probs;
  const std::vector<double>& advantages;   // already normalized if configured
  const std::vector<double>& value_targets;
  const std::vector<std::size_t>& indices;
};

struct LossBreakdown {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

// Evaluates the PPO total loss over a minibatch and, if `grads` is given,
// accumulates analytic gradients for every parameter of both networks.
inline LossBreakdown ppo_loss(const NetworkParams& params,
                              const MinibatchView& mb, double clip_eps,
                              double beta_entropy, double beta_value,
                              ParamGrads* grads) {
  const std::size_t n = mb.indices.size();
  if (n == 0) throw ArgumentError("ppo_loss: empty minibatch");
  const double inv_n = 1.0 / static_cast<double>(n);

  LossBreakdown out;
  out.entropy = gaussian_entropy(params.log_std);

  for (std::size_t ii = 0; ii < n; ++ii) {
    const std::size_t i = mb.indices[ii];
    const Observation& obs = mb.observations[i];
    const Vec3& act = mb.actions[i];
    const double adv = mb.advantages[i];

    MlpCache actor_cache;
    auto mean = mlp_forward(params.actor, obs_to_vec(obs), &actor_cache);
    Vec3 mean3{mean[0], mean[1], mean[2]};
    Vec3 ls3{params.log_std[0], params.log_std[1], params.log_std[2]};
    const double lp = gaussian_log_prob(act, mean3, ls3);
    const double ratio = std::exp(lp - mb.old_log_probs[i]);
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double term_raw = ratio * adv;
    const double term_clip = clipped * adv;
    out.policy += -std::min(term_raw, term_clip) * inv_n;

    MlpCache critic_cache;
    const double v =
        mlp_forward(params.critic, obs_to_vec(obs), &critic_cache)[0];
    const double vdiff = v - mb.value_targets[i];
    out.value += vdiff * vdiff * inv_n;

    if (grads) {
      // dL_policy / d ratio: zero when the clipped branch is active and
      // binding (min selects the constant), -adv/n otherwise.
      double dratio = 0.0;
      if (term_raw <= term_clip) {
        dratio = -adv * inv_n;
      } else if (ratio >= 1.0 - clip_eps && ratio <= 1.0 + clip_eps) {
        dratio = -adv * inv_n;
      }
      const double dlp = dratio * ratio;  // d ratio / d lp = ratio
      if (dlp != 0.0) {
        std::vector<double> dmean(3);
        for (int k = 0; k < 3; ++k) {
          const double s = std::exp(params.log_std[static_cast<std::size_t>(k)]);
          const double z = (act[static_cast<std::size_t>(k)] -
                            mean3[static_cast<std::size_t>(k)]) / s;
          dmean[static_cast<std::size_t>(k)] = dlp * (z / s);
          grads->log_std[static_cast<std::size_t>(k)] += dlp * (z * z - 1.0);
        }
        mlp_backward(params.actor, actor_cache, std::move(dmean), grads->actor);
      }
      mlp_backward(params.critic, critic_cache,
                   {beta_value * 2.0 * vdiff * inv_n}, grads->critic);
    }
  }

  if (grads) {
    // entropy bonus: d(-beta_e * H)/d log_std_i = -beta_e
    for (auto& g : grads->log_std) g += -beta_entropy;
  }
  out.total = total_loss(out.policy, out.entropy, out.value, beta_entropy,
                         beta_value);
  return out;
}

// ---------------------------------------------------------------------
// Optimizer

class AdamOptimizer {
 public:
  AdamOptimizer(const NetworkParams& params, const PpoConfig& cfg)
      : cfg_(cfg) {
    NetworkParams tmp = params;
    for (auto* t : tensor_views(tmp)) {
      m_.emplace_back(t->size(), 0.0);
      v_.emplace_back(t->size(), 0.0);
    }
  }

  void step(NetworkParams& params, ParamGrads& grads) {
    auto pt = tensor_views(params);
    auto gt = tensor_views(grads);

    // global gradient-norm clip
    double norm_sq = 0.0;
    for (auto* g : gt)
      for (double x : *g) {
        if (!std::isfinite(x))
          throw NumericError("AdamOptimizer: NaN/Inf gradient");
        norm_sq += x * x;
      }
    const double norm = std::sqrt(norm_sq);
    const double scale =
        norm > cfg_.max_grad_norm ? cfg_.max_grad_norm / norm : 1.0;

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
    for (std::size_t i = 0; i < pt.size(); ++i) {
      auto& p = *pt[i];
      auto& g = *gt[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = g[j] * scale;
        m_[i][j] = cfg_.adam_beta1 * m_[i][j] + (1.0 - cfg_.adam_beta1) * gj;
        v_[i][j] = cfg_.adam_beta2 * v_[i][j] + (1.0 - cfg_.adam_beta2) * gj * gj;
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
        if (!std::isfinite(p[j]))
          throw NumericError("AdamOptimizer: parameter became non-finite");
      }
    }
  }

 private:
  PpoConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  int t_ = 0;
};

// ---------------------------------------------------------------------
// Update step

struct UpdateDiagnostics {
  double mean_policy_loss = 0.0;
  double mean_value_loss = 0.0;
  double entropy = 0.0;
  int minibatches = 0;
};

inline void normalize_in_place(std::vector<double>& xs) {
  if (xs.size() < 2) return;
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) /
                static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size()));
  const double denom = sd > 1e-12 ? sd : 1e-12;
  for (auto& x : xs) x = (x - mean) / denom;
}

template <typename T>
void shuffle_indices(std::vector<T>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
}

// One PPO update over a full trajectory: GAE, optional advantage
// normalization, shuffled minibatches, epochs_per_update passes.
inline UpdateDiagnostics update(NetworkParams& params, AdamOptimizer& opt,
                                const Trajectory& traj, const PpoConfig& cfg,
                                double beta_entropy, Rng& rng) {
  cfg.validate();
  const std::size_t n = traj.size();
  if (n == 0) throw ArgumentError("update: empty trajectory");

  std::vector<double> advantages =
      gae(traj.rewards, traj.values, traj.boundaries, traj.bootstrap_value,
          cfg.gamma, cfg.gae_lambda);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i)
    targets[i] = advantages[i] + traj.values[i];
  if (cfg.normalize_advantages) normalize_in_place(advantages);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateDiagnostics diag;
  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    shuffle_indices(order, rng);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::size_t> idx(order.begin() + static_cast<long>(start),
                                   order.begin() + static_cast<long>(end));
      MinibatchView mb{traj.observations, traj.actions, traj.log_probs,
                       advantages,        targets,      idx};
      ParamGrads grads = ParamGrads::zeros_like(params);
      LossBreakdown loss = ppo_loss(params, mb, cfg.clip_eps, beta_entropy,
                                    cfg.beta_value, &grads);
      opt.step(params, grads);
      diag.mean_policy_loss += loss.policy;
      diag.mean_value_loss += loss.value;
      diag.entropy = loss.entropy;
      ++diag.minibatches;
    }
  }
  if (diag.minibatches > 0) {
    diag.mean_policy_loss /= diag.minibatches;
    diag.mean_value_loss /= diag.minibatches;
  }
  return diag;
}

// ---------------------------------------------------------------------
// Evaluation rollout (deployment mode: mean action, zero reward, full TC)

struct EvalResult {
  std::vector<double> net_returns;
  std::vector<Vec3> weights;
  std::vector<std::optional<Vec3>> oracle_targets;
  std::vector<Date> dates;
  double annual_return = 0.0;
  double max_dd = 0.0;
};

inline EvalResult evaluate_policy(const NetworkParams& params,
                                  Environment& env, const FeatureFrame& frame,
                                  double periods_per_year,
                                  bool oracle_diagnostics = false) {
  EvalResult out;
  env.set_oracle_diagnostics(oracle_diagnostics);
  Observation obs = env.reset(frame, EnvMode::kDeployment);
  for (std::size_t t = 0; t < frame.size(); ++t) {
    out.dates.push_back(env.current_date());
    const PolicyOutput po = policy_forward(params, obs);
    StepResult sr = env.step(po.mean);  // deterministic: policy mean
    out.net_returns.push_back(sr.net_return);
    out.weights.push_back(sr.weights);
    out.oracle_targets.push_back(sr.oracle_target);
    obs = sr.observation;
  }
  out.annual_return = annual_return(out.net_returns, periods_per_year);
  out.max_dd = max_drawdown(compound_path(out.net_returns));
  return out;
}

// Fixed-allocation rollout (the 60/40 benchmark and ablation stubs).
inline EvalResult evaluate_constant_policy(const Vec3& weights,
                                           Environment& env,
                                           const FeatureFrame& frame,
                                           double periods_per_year) {
  // logits reproducing `weights` under softmax
  Vec3 logits{};
  for (int k = 0; k < 3; ++k)
    logits[static_cast<std::size_t>(k)] =
        std::log(std::max(weights[static_cast<std::size_t>(k)], 1e-12));
  EvalResult out;
  env.reset(frame, EnvMode::kDeployment);
  for (std::size_t t = 0; t < frame.size(); ++t) {
    out.dates.push_back(env.current_date());
    StepResult sr = env.step(logits);
    out.net_returns.push_back(sr.net_return);
    out.weights.push_back(sr.weights);
    out.oracle_targets.push_back(sr.oracle_target);
  }
  out.annual_return = annual_return(out.net_returns, periods_per_year);
  out.max_dd = max_drawdown(compound_path(out.net_returns));
  return out;
}

// ---------------------------------------------------------------------
// Phase training loop (Algorithm 1)

struct TrainPhaseInputs {
  FeatureFrame train;  // decision-grid features for the phase train window
  FeatureFrame valid;
  // Source-frequency panel behind `train`; bootstrap resamples operate on
  // it and features are rebuilt through the same pipeline. Empty panel
  // disables the bootstrap.
  ReturnPanel train_panel;
  std::size_t stride = 2;
  std::size_t mean_window = 40;
  std::size_t std_window = 60;
  double periods_per_year = kPeriodsPerYearBiDaily;
};

struct EpisodeRecord {
  long episode = 0;
  double train_cum_return = 0.0;  // accumulated financial return (episode)
  double tc_rate = 0.0;
  bool synthetic_data = false;
};

struct EvalRecord {
  long episode = 0;
  double valid_annual_return = 0.0;
  double valid_mdd = 0.0;
  double score = 0.0;
  bool is_best = false;
};

struct TrainHistory {
  std::vector<EpisodeRecord> episodes;
  std::vector<EvalRecord> evals;
  long skipped_forward_steps = 0;
};

struct TrainPhaseResult {
  NetworkParams best_params;
  NetworkParams final_params;
  TrainHistory history;
};

inline double selection_score(double annual_ret, double mdd,
                              double benchmark_mdd, double penalty) {
  return annual_ret - penalty * std::max(0.0, mdd - benchmark_mdd);
}

inline TrainPhaseResult train_phase(const TrainPhaseInputs& inputs,
                                    const PpoConfig& cfg, TcSchedule sched,
                                    RewardFunction reward,
                                    const OracleConfig& oracle_cfg,
                                    BootstrapConfig bootstrap_cfg,
                                    std::uint64_t seed,
                                    const NetworkParams* init_params = nullptr) {
  cfg.validate();
  if (inputs.train.size() == 0 || inputs.valid.size() == 0)
    throw ArgumentError("train_phase: empty frames");

  Rng rng(seed);
  NetworkParams params;
  if (init_params) {
    NetworkParams fresh = NetworkParams::make(rng, kObsDim, cfg.hidden);
    if (!init_params->same_shape(fresh))
      throw ConfigError("train_phase: init_params shape mismatch");
    params = transfer_weights(*init_params);
  } else {
    params = NetworkParams::make(rng, kObsDim, cfg.hidden);
  }

  TrainPhaseResult result;
  result.best_params = params;
  if (cfg.episodes == 0) {
    result.final_params = params;
    return result;
  }

  const bool bootstrap_active =
      bootstrap_cfg.enabled && inputs.train_panel.size() > 0;

  Environment env(sched, reward, oracle_cfg);
  Environment eval_env(sched, RewardFunction{RewardKind::kZero}, oracle_cfg);
  AdamOptimizer opt(params, cfg);
  EntropySchedule entropy{cfg.beta_entropy_start,
                          cfg.entropy_decay_end_fraction};

  // 60/40 benchmark MDD on the validation window, for model selection.
  const EvalResult bench = evaluate_constant_policy(
      kInitialWeights, eval_env, inputs.valid, inputs.periods_per_year);

  FeatureFrame synthetic_frame;     // owns the features of the active resample
  ReturnPanel active_panel = inputs.train_panel;
  bool on_synthetic = false;
  Observation obs = env.reset(inputs.train, EnvMode::kTraining);

  long episode = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_ret = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  Trajectory traj;
  double cum_value = 1.0;

  auto maybe_swap_data = [&]() {
    if (!bootstrap_active) return;
    if (episode % bootstrap_cfg.swap_interval_episodes != 0) return;
    active_panel = training_data_selector(episode, bootstrap_cfg, rng,
                                          inputs.train_panel, active_panel);
    const bool synthetic = active_panel.assets != inputs.train_panel.assets;
    if (synthetic) {
      synthetic_frame = prepare_features(active_panel, inputs.stride,
                                         inputs.mean_window, inputs.std_window);
      env.swap_frame(synthetic_frame);
    } else {
      env.swap_frame(inputs.train);
    }
    on_synthetic = synthetic;
  };

  auto run_validation = [&]() {
    const EvalResult ev = evaluate_policy(params, eval_env, inputs.valid,
                                          inputs.periods_per_year);
    EvalRecord rec;
    rec.episode = episode;
    rec.valid_annual_return = ev.annual_return;
    rec.valid_mdd = ev.max_dd;
    rec.score = selection_score(ev.annual_return, ev.max_dd, bench.max_dd,
                                cfg.selection_mdd_penalty);
    // ties go to the less risk-averse (higher-return) model
    if (!have_best || rec.score > best_score ||
        (rec.score == best_score && ev.annual_return > best_ret)) {
      best_score = rec.score;
      best_ret = ev.annual_return;
      result.best_params = params;
      rec.is_best = true;
      have_best = true;
    }
    result.history.evals.push_back(rec);
  };

  maybe_swap_data();
  while (episode < cfg.episodes) {
    // collect one rollout
    traj.clear();
    for (int t = 0; t < cfg.n_steps && episode < cfg.episodes; ++t) {
      const PolicyOutput po = policy_forward(params, obs);
      Vec3 ls3{params.log_std[0], params.log_std[1], params.log_std[2]};
      const SampledAction sa = sample_action(po.mean, ls3, rng);
      const double v = value_forward(params, obs);
      StepResult sr = env.step(sa.action);
      cum_value *= 1.0 + sr.net_return;

      traj.observations.push_back(obs);
      traj.actions.push_back(sa.action);
      traj.log_probs.push_back(sa.log_prob);
      traj.rewards.push_back(sr.reward);
      traj.values.push_back(v);
      // data wrap is a non-terminal continuation
      traj.boundaries.push_back(false);
      obs = sr.observation;

      if (sr.episode_end) {
        EpisodeRecord er;
        er.episode = episode;
        er.train_cum_return = cum_value - 1.0;
        er.tc_rate = env.current_tc();
        er.synthetic_data = on_synthetic;
        result.history.episodes.push_back(er);
        cum_value = 1.0;
        ++episode;
        if (episode % cfg.eval_interval_episodes == 0) run_validation();
        if (episode < cfg.episodes) {
          maybe_swap_data();
          obs = env.observe();
        }
      }
    }
    if (traj.size() == 0) break;
    traj.bootstrap_value = value_forward(params, obs);
    const double progress =
        static_cast<double>(episode) / static_cast<double>(cfg.episodes);
    update(params, opt, traj, cfg, entropy.beta(progress), rng);
  }

  if (result.history.evals.empty() ||
      result.history.evals.back().episode != episode) {
    run_validation();
  }
  result.history.skipped_forward_steps = env.skipped_forward_steps();
  result.final_params = params;
  if (!have_best) result.best_params = params;
  return result;
}

}  // namespace allotrl
