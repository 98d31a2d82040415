#include <algorithm>
#include <cmath>
#include <numeric>

#include "gyroqfi/errors.hpp"
#include "gyroqfi/parallel.hpp"
#include "gyroqfi/rl.hpp"

namespace gyro::rl {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

void PpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("ppo_clip_epsilon must lie in (0, 1)");
  if (!(value_coeff > 0.0)) throw ConfigError("ppo_value_coeff must be > 0");
  if (!(entropy_coeff >= 0.0)) throw ConfigError("ppo_entropy_coeff must be >= 0");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("ppo_discount must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo_gae_lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo_learning_rate must be > 0");
  if (epochs_per_update < 1) throw ConfigError("ppo_epochs must be >= 1");
  if (minibatch_size < 1) throw ConfigError("ppo_minibatch must be >= 1");
  if (rollout_episodes < 1) throw ConfigError("ppo_rollout_episodes must be >= 1");
  if (hidden_sizes.empty()) throw ConfigError("ppo_hidden_sizes must be nonempty");
  for (int h : hidden_sizes)
    if (h < 1) throw ConfigError("ppo_hidden_sizes entries must be >= 1");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo_max_grad_norm must be > 0");
}

ActorCritic::ActorCritic(int obs_size, int action_size, double lo, double hi, const PpoConfig& cfg)
    : actor(layer_sizes(obs_size, cfg.hidden_sizes, action_size)),
      critic(layer_sizes(obs_size, cfg.hidden_sizes, 1)),
      log_std(Eigen::VectorXd::Constant(action_size, cfg.log_std_init)),
      low(lo),
      high(hi) {}

void ActorCritic::initialize(std::mt19937_64& rng) {
  actor.initialize(rng, 1.0, 0.01);
  critic.initialize(rng, 1.0, 1.0);
}

Eigen::MatrixXd ActorCritic::squash(const Eigen::MatrixXd& pre) const {
  const double mid = 0.5 * (high + low), half = 0.5 * (high - low);
  return (mid + half * pre.array().tanh()).matrix();
}

Eigen::VectorXd ActorCritic::mean(const Eigen::VectorXd& obs) const {
  return squash(actor.forward(Eigen::MatrixXd(obs))).col(0);
}

double ActorCritic::value(const Eigen::VectorXd& obs) const { return critic.forward(obs)[0]; }

double ActorCritic::log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const {
  const Eigen::VectorXd mu = mean(obs);
  const Eigen::ArrayXd z = (action - mu).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array() - 0.5 * kLog2Pi).sum();
}

double ActorCritic::entropy() const { return (log_std.array() + 0.5 * (1.0 + kLog2Pi)).sum(); }

Eigen::Index ActorCritic::parameter_count() const {
  return actor.parameter_count() + log_std.size() + critic.parameter_count();
}

Eigen::VectorXd ActorCritic::flat() const {
  Eigen::VectorXd v(parameter_count());
  v << actor.params(), log_std, critic.params();
  return v;
}

void ActorCritic::set_flat(const Eigen::VectorXd& v) {
  const Eigen::Index na = actor.parameter_count(), nl = log_std.size();
  actor.params() = v.head(na);
  log_std = v.segment(na, nl);
  critic.params() = v.tail(critic.parameter_count());
}

void compute_gae(Episode& ep, double discount, double lambda) {
  double last = 0.0;
  for (int t = static_cast<int>(ep.steps.size()) - 1; t >= 0; --t) {
    auto& s = ep.steps[t];
    const double next_v = t + 1 < static_cast<int>(ep.steps.size()) ? ep.steps[t + 1].value : 0.0;
    const double delta = s.reward + discount * next_v - s.value;
    last = delta + discount * lambda * last;
    s.advantage = last;
    s.ret = last + s.value;
  }
}

void normalize_advantages(std::vector<Transition>& batch) {
  if (batch.size() < 2) return;
  double mean = 0.0;
  for (const auto& t : batch) mean += t.advantage;
  mean /= batch.size();
  double var = 0.0;
  for (const auto& t : batch) var += (t.advantage - mean) * (t.advantage - mean);
  const double sd = std::sqrt(var / batch.size());
  for (auto& t : batch) t.advantage = sd > 1e-12 ? (t.advantage - mean) / sd : 0.0;
}

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoLoss ppo_loss(const ActorCritic& ac, std::span<const Transition* const> minibatch,
                 const PpoConfig& cfg) {
  const int m = static_cast<int>(minibatch.size());
  if (m == 0) throw ConfigError("ppo_loss needs a nonempty minibatch");
  const int obs_n = static_cast<int>(minibatch[0]->obs.size());
  const int act_n = static_cast<int>(minibatch[0]->action.size());
  const double mid = 0.5 * (ac.high + ac.low), half = 0.5 * (ac.high - ac.low);
  const Eigen::Index na = ac.actor.parameter_count();

  Eigen::MatrixXd obs(obs_n, m), act(act_n, m);
  Eigen::VectorXd adv(m), ret(m), lp_old(m);
  for (int j = 0; j < m; ++j) {
    const Transition& t = *minibatch[j];
    obs.col(j) = t.obs;
    act.col(j) = t.action;
    adv[j] = t.advantage;
    ret[j] = t.ret;
    lp_old[j] = t.log_prob;
  }

  nn::Mlp::Cache ca, cc;
  const Eigen::MatrixXd pre = ac.actor.forward(obs, &ca);
  const Eigen::ArrayXXd th = pre.array().tanh();
  const Eigen::ArrayXXd mu = mid + half * th;
  const Eigen::ArrayXd sigma = ac.log_std.array().exp();
  const Eigen::ArrayXXd z = (act.array() - mu).colwise() / sigma;
  const Eigen::ArrayXd lp_new =
      (-0.5 * z.square()).colwise().sum().transpose() - ac.log_std.sum() - 0.5 * kLog2Pi * act_n;
  const Eigen::ArrayXd ratio = (lp_new - lp_old.array()).exp();

  const Eigen::MatrixXd v = ac.critic.forward(obs, &cc);
  const Eigen::ArrayXd v_err = v.row(0).transpose().array() - ret.array();

  PpoLoss out;
  Eigen::ArrayXd d_lp(m);
  for (int j = 0; j < m; ++j) {
    const double r = ratio[j], a = adv[j];
    const double obj = clipped_surrogate(r, a, cfg.clip_epsilon);
    out.policy -= obj;
    // The gradient flows only through the unclipped branch when it is the
    // active minimum.
    d_lp[j] = r * a <= obj ? -a * r / m : 0.0;
  }
  out.policy /= m;
  out.value = v_err.square().mean();
  out.entropy = ac.entropy();
  out.total = out.policy + cfg.value_coeff * out.value - cfg.entropy_coeff * out.entropy;
  out.approx_kl = (lp_old.array() - lp_new).mean();

  out.grad = Eigen::VectorXd::Zero(ac.parameter_count());
  Eigen::VectorXd g_actor = Eigen::VectorXd::Zero(na);
  const Eigen::ArrayXXd d_mu = z.colwise() / sigma;
  const Eigen::MatrixXd d_pre = (d_mu.rowwise() * d_lp.transpose() * half * (1.0 - th.square())).matrix();
  ac.actor.backward(ca, d_pre, g_actor);
  out.grad.head(na) = g_actor;
  for (int d = 0; d < act_n; ++d)
    out.grad[na + d] = ((z.row(d).square() - 1.0) * d_lp.transpose()).sum() - cfg.entropy_coeff;
  Eigen::VectorXd g_critic = Eigen::VectorXd::Zero(ac.critic.parameter_count());
  const Eigen::MatrixXd d_v = (2.0 * cfg.value_coeff / m) * v_err.transpose().matrix();
  ac.critic.backward(cc, d_v, g_critic);
  out.grad.tail(g_critic.size()) = g_critic;
  return out;
}

UpdateStats ppo_update(ActorCritic& ac, nn::Adam& opt, std::vector<Transition> batch,
                       const PpoConfig& cfg, std::mt19937_64& rng) {
  if (batch.empty()) throw ConfigError("ppo_update needs a nonempty batch");
  const Eigen::VectorXd saved = ac.flat();
  const int n = static_cast<int>(batch.size());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  UpdateStats stats;
  int count = 0;
  std::vector<const Transition*> mb;

  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += cfg.minibatch_size) {
      const int m = std::min(cfg.minibatch_size, n - start);
      mb.clear();
      for (int j = 0; j < m; ++j) mb.push_back(&batch[order[start + j]]);
      PpoLoss loss = ppo_loss(ac, mb, cfg);

      if (!std::isfinite(loss.total) || !finite(loss.grad)) {
        ac.set_flat(saved);
        throw NonFiniteLoss("PPO loss or gradient became non-finite; update rolled back");
      }
      nn::clip_grad_norm(loss.grad, cfg.max_grad_norm);
      Eigen::VectorXd params = ac.flat();
      opt.step(params, loss.grad);
      ac.set_flat(params);

      stats.policy_loss += loss.policy;
      stats.value_loss += loss.value;
      stats.entropy += loss.entropy;
      stats.approx_kl += loss.approx_kl;
      ++count;
    }
  }
  if (!finite(ac.flat())) {
    ac.set_flat(saved);
    throw NonFiniteLoss("PPO parameters became non-finite; update rolled back");
  }
  stats.policy_loss /= count;
  stats.value_loss /= count;
  stats.entropy /= count;
  stats.approx_kl /= count;
  return stats;
}

Episode run_episode(const ActorCritic& ac, Env& env, std::mt19937_64* rng) {
  Episode ep;
  Eigen::VectorXd obs = env.reset();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < env.horizon(); ++k) {
    Transition t;
    t.obs = obs;
    Eigen::VectorXd a = ac.mean(obs);
    if (rng)
      for (Eigen::Index d = 0; d < a.size(); ++d) a[d] += std::exp(ac.log_std[d]) * normal(*rng);
    t.action = a;
    t.log_prob = ac.log_prob(obs, a);
    t.value = ac.value(obs);
    const StepResult r = env.step(a);
    t.reward = r.reward;
    t.average_qfi = r.average_qfi;
    ep.total_reward += r.reward;
    if (std::isfinite(r.average_qfi)) ep.best_average_qfi = std::max(ep.best_average_qfi, r.average_qfi);
    ep.steps.push_back(std::move(t));
    obs = r.observation;
    if (r.done) break;
  }
  return ep;
}

TrainResult train(Env& env, const PpoConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (opts.iterations < 1) throw ConfigError("iterations must be >= 1");
  std::mt19937_64 master(cfg.seed);
  ActorCritic ac(env.observation_size(), env.action_size(), env.action_low(), env.action_high(), cfg);
  ac.initialize(master);
  nn::Adam opt(ac.parameter_count(), {cfg.learning_rate});

  const int workers = std::max(1, std::min(opts.threads, cfg.rollout_episodes));
  std::vector<std::unique_ptr<Env>> clones;
  for (int w = 0; w < workers; ++w) clones.push_back(env.clone());
  auto* gyro_env = dynamic_cast<GyroEnv*>(&env);

  TrainResult result;
  bool have_best = false;
  for (int it = 0; it < opts.iterations; ++it) {
    std::vector<std::uint64_t> seeds(cfg.rollout_episodes);
    for (auto& s : seeds) s = master();
    std::vector<Episode> episodes(cfg.rollout_episodes);
    parallel_for(cfg.rollout_episodes, workers, [&](int i, int w) {
      std::mt19937_64 rng(seeds[i]);
      episodes[i] = run_episode(ac, *clones[w], &rng);
    });

    if (it == 0 && gyro_env) {
      double mean_abs_reward = 0.0, mean_fbar = 0.0;
      int nr = 0;
      for (const auto& ep : episodes)
        for (const auto& t : ep.steps) {
          mean_abs_reward += std::abs(t.reward);
          mean_fbar += std::abs(t.average_qfi);
          ++nr;
        }
      mean_abs_reward /= std::max(1, nr);
      mean_fbar /= std::max(1, nr);
      if (mean_abs_reward < 1e-6 && mean_fbar > 0.0) {
        const double old_scale = gyro_env->config().reward_scale;
        gyro_env->set_reward_scale(mean_fbar);
        for (auto& c : clones) static_cast<GyroEnv&>(*c).set_reward_scale(mean_fbar);
        for (auto& ep : episodes) {
          ep.total_reward = 0.0;
          for (auto& t : ep.steps) {
            t.reward *= old_scale / mean_fbar;
            ep.total_reward += t.reward;
          }
        }
      }
    }

    std::vector<Transition> batch;
    double mean_reward = 0.0;
    for (auto& ep : episodes) {
      compute_gae(ep, cfg.discount, cfg.gae_lambda);
      mean_reward += ep.total_reward;
      for (auto& t : ep.steps) batch.push_back(std::move(t));
    }
    mean_reward /= episodes.size();
    normalize_advantages(batch);
    const UpdateStats us = ppo_update(ac, opt, std::move(batch), cfg, master);

    const Episode eval = run_episode(ac, env, nullptr);
    CurveRow row;
    row.iteration = it + 1;
    row.eval_return = eval.total_reward;
    row.mean_reward = mean_reward;
    row.policy_loss = us.policy_loss;
    row.value_loss = us.value_loss;
    row.entropy = us.entropy;
    row.eval_best_average_qfi = eval.best_average_qfi;
    double mean_action = 0.0;
    for (const auto& t : eval.steps) mean_action += t.action[0];
    row.eval_mean_action = mean_action / std::max<std::size_t>(1, eval.steps.size());
    result.curve.push_back(row);
    result.best_eval_average_qfi = std::max(result.best_eval_average_qfi, eval.best_average_qfi);

    PolicySnapshot snap{ac, cfg, it + 1, gyro_env ? gyro_env->config().reward_scale : 1.0,
                        eval.total_reward};
    if (!have_best || eval.total_reward >= result.best.eval_return) {
      result.best = snap;
      have_best = true;
    }
    result.last = std::move(snap);
    if (opts.on_iteration) opts.on_iteration(row);
  }
  return result;
}

namespace {

template <typename Policy>
PolicyEvaluation evaluate(Policy&& policy, GyroEnv& env) {
  PolicyEvaluation ev;
  Eigen::VectorXd obs = env.reset();
  ev.times.push_back(0.0);
  ev.average_qfi.push_back(0.0);
  ev.mean_precision.push_back(std::numeric_limits<double>::infinity());
  for (int k = 0; k < env.horizon(); ++k) {
    Eigen::VectorXd a = policy(obs);
    a[0] = std::clamp(a[0], env.action_low(), env.action_high());
    const StepResult r = env.step(a);
    ev.actions.push_back(a[0]);
    ev.times.push_back((k + 1) * env.config().dtau);
    ev.average_qfi.push_back(r.average_qfi);
    double mp = 0.0;
    for (double f : env.member_qfi()) mp += precision_bound(f);
    ev.mean_precision.push_back(mp / env.member_qfi().size());
    ev.total_reward += r.reward;
    obs = r.observation;
    if (r.done) break;
  }
  return ev;
}

}  // namespace

PolicyEvaluation evaluate_policy(const ActorCritic& ac, GyroEnv& env) {
  return evaluate([&](const Eigen::VectorXd& obs) { return ac.mean(obs); }, env);
}

PolicyEvaluation evaluate_constant(double action, GyroEnv& env) {
  return evaluate([&](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, action); },
                  env);
}

}  // namespace gyro::rl
