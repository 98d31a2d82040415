#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gyroqfi/dynamics.hpp"
#include "gyroqfi/metrology.hpp"
#include "gyroqfi/model.hpp"
#include "gyroqfi/nn.hpp"

namespace gyro::rl {

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  /// Band-averaged QFI after the step (gyro env); NaN when not applicable.
  double average_qfi = 0.0;
  /// Set when the step ended the episode because of a numerical failure.
  std::optional<std::string> failure;
};

/// Episodic environment with a continuous, box-bounded action.
class Env {
 public:
  virtual ~Env() = default;
  virtual int observation_size() const = 0;
  virtual int action_size() const = 0;
  virtual double action_low() const = 0;
  virtual double action_high() const = 0;
  virtual int horizon() const = 0;
  virtual Eigen::VectorXd reset() = 0;
  virtual StepResult step(const Eigen::VectorXd& action) = 0;
  /// Independent copy with identical configuration, for parallel rollouts.
  virtual std::unique_ptr<Env> clone() const = 0;
};

/// One-step bandit: constant observation, reward -(a - optimum)^2.
class BanditEnv final : public Env {
 public:
  explicit BanditEnv(double optimum = 0.7, double low = -1.5, double high = 1.5);

  int observation_size() const override { return 1; }
  int action_size() const override { return 1; }
  double action_low() const override { return low_; }
  double action_high() const override { return high_; }
  int horizon() const override { return 1; }
  Eigen::VectorXd reset() override;
  StepResult step(const Eigen::VectorXd& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<BanditEnv>(*this); }

  double optimum() const { return optimum_; }

 private:
  double optimum_, low_, high_;
};

enum class RewardMode { per_step, terminal };

struct GyroEnvConfig {
  PhysicalParams params;  // `omega` and `delta_c` are ignored
  std::vector<double> omega_grid;  // rad/s, strictly increasing
  int n_steps = 10;
  double dtau = 2.0;  // 1/omega_m
  double action_low = -1.5;
  double action_high = 1.5;
  double reward_scale = 1e17;
  RewardMode reward_mode = RewardMode::per_step;
  double tol = 1e-8;
  InitialPhonons initial_phonons = InitialPhonons::thermal;
  DisplacementFrame frame = DisplacementFrame::output;

  void validate() const;
};

/// `n` evenly spaced points over [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);

/// Observation length: 6 amplitude, 42 moment, step index, previous action,
/// band-averaged QFI.
inline constexpr int kGyroObservationSize = 51;

/// Band of rotation rates driven by one shared detuning schedule.
class GyroEnv final : public Env {
 public:
  explicit GyroEnv(GyroEnvConfig cfg);

  int observation_size() const override { return kGyroObservationSize; }
  int action_size() const override { return 1; }
  double action_low() const override { return cfg_.action_low; }
  double action_high() const override { return cfg_.action_high; }
  int horizon() const override { return cfg_.n_steps; }
  Eigen::VectorXd reset() override;
  StepResult step(const Eigen::VectorXd& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<GyroEnv>(*this); }

  const GyroEnvConfig& config() const { return cfg_; }
  void set_reward_scale(double s) { cfg_.reward_scale = s; }
  int step_index() const { return step_; }
  /// Grid index of the member that feeds the observation: the positive-Omega
  /// member closest to Omega_max / 2 (the largest member if none is positive).
  int reference_member() const { return reference_; }
  const std::vector<AugmentedState>& members() const { return states_; }
  /// Per-member QFI after the last step (zeros after reset).
  const std::vector<double>& member_qfi() const { return qfi_; }
  double current_average_qfi() const { return average_qfi_; }

 private:
  Eigen::VectorXd observe() const;

  GyroEnvConfig cfg_;
  std::vector<DynamicsContext> contexts_;
  std::vector<AugmentedState> states_;
  std::vector<double> qfi_;
  int reference_ = 0;
  int step_ = 0;
  double last_action_ = 0.0;
  double average_qfi_ = 0.0;
  double cumulative_ = 0.0;
};

/// Feature transform of a raw gyro observation: asinh on the amplitude,
/// moment and F-bar features; step fraction and previous action unchanged.
Eigen::VectorXd normalize_observation(const Eigen::VectorXd& raw);

struct PpoConfig {
  double clip_epsilon = 0.2;
  double value_coeff = 0.5;
  double entropy_coeff = 0.01;
  double discount = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  int epochs_per_update = 10;
  int minibatch_size = 64;
  int rollout_episodes = 32;
  std::vector<int> hidden_sizes{64, 64};
  double max_grad_norm = 0.5;
  double log_std_init = -0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Actor: tanh-squashed Gaussian mean with a state-independent log-std.
/// Critic: separate network with scalar output.
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(int obs_size, int action_size, double low, double high, const PpoConfig& cfg);

  void initialize(std::mt19937_64& rng);

  Eigen::VectorXd mean(const Eigen::VectorXd& obs) const;
  double value(const Eigen::VectorXd& obs) const;
  double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const;
  double entropy() const;

  nn::Mlp actor, critic;
  Eigen::VectorXd log_std;
  double low = -1.0, high = 1.0;

  /// Flat [actor, log_std, critic] parameter vector.
  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& v);
  Eigen::Index parameter_count() const;

  Eigen::MatrixXd squash(const Eigen::MatrixXd& pre) const;
};

struct Transition {
  Eigen::VectorXd obs;
  Eigen::VectorXd action;  // as sampled, before the environment clamps it
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
  double average_qfi = 0.0;
};

struct Episode {
  std::vector<Transition> steps;
  double total_reward = 0.0;
  double best_average_qfi = 0.0;
};

/// GAE over one complete episode (terminal value 0); fills advantage and ret.
void compute_gae(Episode& ep, double discount, double lambda);

/// Zero-mean, unit-variance advantages across the whole batch.
void normalize_advantages(std::vector<Transition>& batch);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
};

/// min(r A, clip(r, 1 - eps, 1 + eps) A).
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

struct PpoLoss {
  double total = 0.0;  // policy + c1 value - c2 entropy
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  Eigen::VectorXd grad;  // d total / d flat()
};

/// Minibatch loss and its exact gradient with respect to the flat parameters.
PpoLoss ppo_loss(const ActorCritic& ac, std::span<const Transition* const> minibatch,
                 const PpoConfig& cfg);

/// Clipped-surrogate update. Restores the previous parameters and throws
/// NonFiniteLoss if a loss or gradient becomes non-finite.
UpdateStats ppo_update(ActorCritic& ac, nn::Adam& opt, std::vector<Transition> batch,
                       const PpoConfig& cfg, std::mt19937_64& rng);

/// Runs one episode; stochastic when `rng` is given, mean actions otherwise.
Episode run_episode(const ActorCritic& ac, Env& env, std::mt19937_64* rng);

struct CurveRow {
  int iteration = 0;
  double eval_return = 0.0;
  double mean_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double eval_best_average_qfi = 0.0;
  double eval_mean_action = 0.0;
};

struct PolicySnapshot {
  ActorCritic model;
  PpoConfig config;
  int iterations = 0;
  double reward_scale = 1.0;
  double eval_return = 0.0;
};

struct TrainResult {
  PolicySnapshot best;
  PolicySnapshot last;
  std::vector<CurveRow> curve;
  double best_eval_average_qfi = 0.0;
};

struct TrainOptions {
  int iterations = 300;
  int threads = 1;
  /// Called after every iteration (progress reporting).
  std::function<void(const CurveRow&)> on_iteration;
};

/// Alternates rollouts and updates. For a GyroEnv whose configured reward
/// scale would make |reward| < 1e-6, the scale is recalibrated to the first
/// rollout's mean band-averaged QFI. Deterministic for a given seed,
/// independent of the thread count.
TrainResult train(Env& env, const PpoConfig& cfg, const TrainOptions& opts);

struct PolicyEvaluation {
  std::vector<double> actions;
  std::vector<double> times;          // n_steps + 1 entries, from 0
  std::vector<double> average_qfi;    // F-bar at each time
  std::vector<double> mean_precision; // mean over the grid of 1/sqrt(F)
  double total_reward = 0.0;
};

/// Deterministic episode with mean actions.
PolicyEvaluation evaluate_policy(const ActorCritic& ac, GyroEnv& env);

/// Constant-action episode.
PolicyEvaluation evaluate_constant(double action, GyroEnv& env);

std::string snapshot_to_json(const PolicySnapshot& s);
PolicySnapshot snapshot_from_json(const std::string& text);

}  // namespace gyro::rl
