#include "stir/bandit.hpp"

#include "stir/solve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stir {

namespace {

Vector unit_gaussian(Index d, Rng& rng) {
  Vector v(d);
  double norm = 0.0;
  do {
    for (Index j = 0; j < d; ++j) v[j] = rng.gaussian();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

void check(const BanditEnvConfig& config) {
  if (config.d < 1) throw InvalidParameter("need d >= 1");
  if (config.horizon < 1) throw InvalidParameter("need a positive horizon");
  if (config.arms_per_round < 1) throw InvalidParameter("need at least one arm");
  if (config.noise_sigma < 0.0) {
    throw InvalidParameter("noise sigma must be nonnegative");
  }
  if (config.corruption_fraction < 0.0 || config.corruption_fraction > 1.0) {
    throw InvalidParameter("corruption fraction must lie in [0, 1]");
  }
  if (!(config.corruption_magnitude > 0.0)) {
    throw InvalidParameter("corruption magnitude must be positive");
  }
}

double clip(double x, double bound) {
  return std::max(-bound, std::min(bound, x));
}

SolverConfig refit_config(const BanditPolicyConfig& policy) {
  SolverConfig config;
  config.initial_truncation = policy.initial_truncation;
  config.increment = policy.increment;
  config.target_accuracy = policy.target_accuracy;
  config.step_length = policy.step_length;
  config.ridge = policy.regularization;
  config.max_inner_iterations = 50;
  config.max_stages = 64;
  return config;
}

// Weighted ridge center: (sum_t s_t x_t x_t^T + reg I)^{-1} X S y.
void rebuild_design(BanditState& state) {
  const Index d = state.pulls.rows();
  state.design = state.pulls * state.weights.asDiagonal() *
                     state.pulls.transpose() +
                 state.regularization * Matrix::Identity(d, d);
  state.estimate = Eigen::LDLT<Matrix>(state.design)
                       .solve(state.pulls *
                              state.weights.cwiseProduct(state.rewards));
}

void append_pull(BanditState& state, const Vector& arm, double reward) {
  const Index t = state.t();
  state.pulls.conservativeResize(arm.size(), t + 1);
  state.pulls.col(t) = arm;
  state.rewards.conservativeResize(t + 1);
  state.rewards[t] = reward;
}

double best_clean_reward(const Vector& gold, const Matrix& arms) {
  return (arms.transpose() * gold).maxCoeff();
}

double inflated_radius(const BanditEnvConfig& env,
                       const BanditPolicyConfig& policy) {
  const double horizon = static_cast<double>(env.horizon);
  const double noise_part =
      policy.noise_scale *
      std::sqrt(static_cast<double>(env.d) * std::log(std::max(horizon, 2.0)));
  const double corruption_part =
      policy.corruption_rate * env.corruption_magnitude * horizon;
  return policy.radius_scale * (noise_part + corruption_part);
}

double oful_radius(const BanditEnvConfig& env,
                   const BanditPolicyConfig& policy) {
  const double horizon = static_cast<double>(env.horizon);
  return policy.radius_scale * policy.noise_scale *
         std::sqrt(static_cast<double>(env.d) * std::log(std::max(horizon, 2.0)));
}

}  // namespace

BanditEnv::BanditEnv(const BanditEnvConfig& config)
    : config_(config), rng_(config.seed) {
  check(config);
  gold_model_ = unit_gaussian(config_.d, rng_);
  fake_model_ = unit_gaussian(config_.d, rng_);
  decoy_arm_ = unit_gaussian(config_.d, rng_);
}

Matrix BanditEnv::next_arms() {
  Matrix arms(config_.d, config_.arms_per_round);
  for (Index j = 0; j < config_.arms_per_round; ++j) {
    arms.col(j) = unit_gaussian(config_.d, rng_);
  }
  if (config_.adversary == AdversaryStrategy::TargetedBoost) {
    arms.col(config_.arms_per_round - 1) = decoy_arm_;
  }
  current_arms_ = arms;
  return arms;
}

BanditEnv::Feedback BanditEnv::pull(Index arm_index) {
  if (current_arms_.size() == 0) {
    throw InvalidParameter("call next_arms before pull");
  }
  if (arm_index < 0 || arm_index >= current_arms_.cols()) {
    throw InvalidParameter("arm index out of range");
  }
  const Vector arm = current_arms_.col(arm_index);

  // Noise and the corruption coin are drawn on every round in the same
  // order, so two runs with one seed see identical randomness regardless of
  // which arms get played.
  const double noise = config_.noise_sigma * rng_.gaussian();
  const bool coin = rng_.uniform01() < config_.corruption_fraction;
  const bool budget_ok =
      static_cast<double>(corrupted_ + 1) <=
      config_.corruption_fraction * static_cast<double>(round_ + 1);

  double reward = gold_model_.dot(arm) + noise;
  bool corrupted = false;
  if (coin && budget_ok) {
    switch (config_.adversary) {
      case AdversaryStrategy::FakeModel:
        reward = fake_model_.dot(arm) + noise;
        corrupted = true;
        break;
      case AdversaryStrategy::TargetedBoost:
        if (arm_index == current_arms_.cols() - 1) {
          reward += config_.corruption_magnitude;
          corrupted = true;
        }
        break;
    }
  }
  reward = clip(reward, config_.corruption_magnitude);
  corrupted_ += corrupted ? 1 : 0;
  ++round_;
  current_arms_.resize(0, 0);
  return Feedback{reward, corrupted};
}

BanditState make_bandit_state(Index d, const BanditEnvConfig& env,
                              const BanditPolicyConfig& policy) {
  BanditState state;
  state.pulls = Matrix(d, 0);
  state.rewards = Vector(0);
  state.weights = Vector(0);
  state.design = policy.regularization * Matrix::Identity(d, d);
  state.estimate = Vector::Zero(d);
  state.radius = inflated_radius(env, policy);
  state.regularization = policy.regularization;
  return state;
}

Index select_arm(const BanditState& state, const Matrix& arms) {
  if (arms.rows() != state.design.rows()) {
    throw DimensionMismatch("arm dimension does not match state");
  }
  Eigen::LDLT<Matrix> ldlt(state.design);
  Index best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < arms.cols(); ++j) {
    const Vector arm = arms.col(j);
    const double width = std::sqrt(std::max(0.0, arm.dot(ldlt.solve(arm))));
    const double score = arm.dot(state.estimate) + state.radius * width;
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

RoundResult wucb_lin_round(BanditState& state, const Matrix& arms,
                           BanditEnv& env, const BanditPolicyConfig& policy) {
  const Index idx = select_arm(state, arms);
  const auto fb = env.pull(idx);
  append_pull(state, arms.col(idx), fb.reward);

  const Dataset history{state.pulls, state.rewards};
  const SolverConfig config = refit_config(policy);
  const SolverTrace fit = policy.exact_refit ? stir(history, config)
                                             : stir_gd(history, config);
  const double final_truncation = fit.stages.back().truncation;
  state.weights =
      truncated_weights(fit.final_model, history, final_truncation).weights;
  rebuild_design(state);
  state.radius = inflated_radius(env.config(), policy);

  const double best = best_clean_reward(env.gold_model(), arms);
  return RoundResult{idx, fb.reward, fb.corrupted,
                     best - env.gold_model().dot(arms.col(idx))};
}

RoundResult linucb_round(BanditState& state, const Matrix& arms,
                         BanditEnv& env, const BanditPolicyConfig& policy) {
  const Index idx = select_arm(state, arms);
  const auto fb = env.pull(idx);
  append_pull(state, arms.col(idx), fb.reward);

  state.weights = Vector::Ones(state.t());
  rebuild_design(state);
  state.radius = oful_radius(env.config(), policy);

  const double best = best_clean_reward(env.gold_model(), arms);
  return RoundResult{idx, fb.reward, fb.corrupted,
                     best - env.gold_model().dot(arms.col(idx))};
}

RoundResult rucb_lin_round(BanditState& state, const Matrix& arms,
                           BanditEnv& env, const BanditPolicyConfig& policy) {
  const Index idx = select_arm(state, arms);
  const auto fb = env.pull(idx);
  append_pull(state, arms.col(idx), fb.reward);

  const Dataset history{state.pulls, state.rewards};
  SolverConfig config = refit_config(policy);
  const SolverTrace fit = torrent(history, policy.torrent_alpha_hat, config);

  // Active set of the thresholding fit: the kept pulls carry unit weight,
  // discarded ones none.
  const Index keep = static_cast<Index>(std::ceil(
      (1.0 - policy.torrent_alpha_hat) * static_cast<double>(history.n())));
  const Vector r = residuals(fit.final_model, history);
  std::vector<Index> order(static_cast<size_t>(history.n()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&r](Index a, Index b) {
    const double ra = std::abs(r[a]), rb = std::abs(r[b]);
    if (ra != rb) return ra < rb;
    return a < b;
  });
  state.weights = Vector::Zero(history.n());
  for (Index k = 0; k < keep; ++k) state.weights[order[static_cast<size_t>(k)]] = 1.0;
  rebuild_design(state);
  state.radius = inflated_radius(env.config(), policy);

  const double best = best_clean_reward(env.gold_model(), arms);
  return RoundResult{idx, fb.reward, fb.corrupted,
                     best - env.gold_model().dot(arms.col(idx))};
}

std::vector<TrajectoryPoint> simulate(BanditPolicy policy,
                                      const BanditEnvConfig& env_config,
                                      const BanditPolicyConfig& policy_config) {
  BanditEnv env(env_config);
  BanditState state = make_bandit_state(env_config.d, env_config, policy_config);
  if (policy == BanditPolicy::LinUcb) {
    state.radius = oful_radius(env_config, policy_config);
  }
  std::vector<TrajectoryPoint> trajectory;
  trajectory.reserve(static_cast<size_t>(env_config.horizon));
  double cumulative = 0.0;
  for (int t = 0; t < env_config.horizon; ++t) {
    const Matrix arms = env.next_arms();
    RoundResult result;
    switch (policy) {
      case BanditPolicy::WucbLin:
        result = wucb_lin_round(state, arms, env, policy_config);
        break;
      case BanditPolicy::LinUcb:
        result = linucb_round(state, arms, env, policy_config);
        break;
      case BanditPolicy::RucbLin:
        result = rucb_lin_round(state, arms, env, policy_config);
        break;
    }
    cumulative += result.regret_increment;
    trajectory.push_back(TrajectoryPoint{t, result.arm_index, result.reward,
                                         result.corrupted,
                                         result.regret_increment, cumulative});
  }
  return trajectory;
}

}  // namespace stir
