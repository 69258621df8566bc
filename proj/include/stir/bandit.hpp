#pragma once

#include "stir/core.hpp"
#include "stir/rng.hpp"

#include <cstdint>
#include <vector>

namespace stir {

enum class AdversaryStrategy {
  FakeModel,      // corrupted rounds pay out under a decoy model
  TargetedBoost,  // a fixed decoy arm gets +magnitude on corrupted rounds
};

struct BanditEnvConfig {
  Index d = 10;
  int horizon = 200;
  int arms_per_round = 50;
  double noise_sigma = 0.1;
  double corruption_fraction = 0.2;   // prefix budget: at most this share
  double corruption_magnitude = 5.0;  // every reward is clipped to +-this
  AdversaryStrategy adversary = AdversaryStrategy::FakeModel;
  std::uint64_t seed = 0;
};

// Serves arm sets and (possibly corrupted) rewards. The corrupted-round count
// never exceeds corruption_fraction * (t+1) at any prefix. Each policy run
// should use its own env instance; identical seeds replay identical
// randomness round for round.
class BanditEnv {
 public:
  explicit BanditEnv(const BanditEnvConfig& config);

  const BanditEnvConfig& config() const { return config_; }
  const Vector& gold_model() const { return gold_model_; }
  const Vector& fake_model() const { return fake_model_; }

  // Arm set for the upcoming round, one arm per column, unit norm. The decoy
  // arm of the targeted adversary is always the last column.
  Matrix next_arms();

  struct Feedback {
    double reward = 0.0;
    bool corrupted = false;
  };

  // Reward for playing column arm_index of the current arm set.
  Feedback pull(Index arm_index);

  int round() const { return round_; }
  int corrupted_count() const { return corrupted_; }

 private:
  BanditEnvConfig config_;
  Rng rng_;
  Vector gold_model_;
  Vector fake_model_;
  Vector decoy_arm_;
  Matrix current_arms_;
  int round_ = 0;
  int corrupted_ = 0;
};

struct BanditPolicyConfig {
  double noise_scale = 0.1;        // sigma_0 in the radius
  double corruption_rate = 0.2;    // alpha_0 in the radius
  double radius_scale = 1.0;       // multiplies the whole radius
  double regularization = 1.0;     // added to the design matrix diagonal
  double torrent_alpha_hat = 0.15; // active-set policy only
  // Refit settings for the weighted policy.
  double initial_truncation = 0.5;
  double increment = 2.0;
  double target_accuracy = 1e-3;
  double step_length = 0.9;
  bool exact_refit = false;  // true swaps the gradient refit for exact solves
};

// Everything a policy carries between rounds.
struct BanditState {
  Matrix pulls;    // d x t, played arms
  Vector rewards;  // t
  Vector weights;  // per-pull weights from the latest refit (unit for OFUL)
  Matrix design;   // V = sum_t s_t x_t x_t^T + reg I
  Vector estimate; // center of the confidence set
  double radius = 0.0;
  double regularization = 1.0;

  Index t() const { return rewards.size(); }
};

BanditState make_bandit_state(Index d, const BanditEnvConfig& env,
                              const BanditPolicyConfig& policy);

// Optimistic arm choice: argmax <x, estimate> + radius ||x||_{V^-1}, ties to
// the lowest column index.
Index select_arm(const BanditState& state, const Matrix& arms);

struct RoundResult {
  Index arm_index = 0;
  double reward = 0.0;
  bool corrupted = false;
  double regret_increment = 0.0;  // against the clean best arm of the round
};

// One round of the truncated-weight optimistic policy: play, record, refit
// weights on the full pull history, rebuild the weighted design and center.
RoundResult wucb_lin_round(BanditState& state, const Matrix& arms,
                           BanditEnv& env, const BanditPolicyConfig& policy);

// Plain OFUL round with unit weights.
RoundResult linucb_round(BanditState& state, const Matrix& arms,
                         BanditEnv& env, const BanditPolicyConfig& policy);

// Hard-thresholding round: the active set from a TORRENT fit on the history
// defines both the design and the center; discarded pulls get weight zero.
RoundResult rucb_lin_round(BanditState& state, const Matrix& arms,
                           BanditEnv& env, const BanditPolicyConfig& policy);

enum class BanditPolicy { WucbLin, LinUcb, RucbLin };

struct TrajectoryPoint {
  int t = 0;
  Index arm_index = 0;
  double reward = 0.0;
  bool corrupted = false;
  double instant_regret = 0.0;
  double cumulative_regret = 0.0;
};

// Runs one policy to the horizon on a fresh env built from env_config.
std::vector<TrajectoryPoint> simulate(BanditPolicy policy,
                                      const BanditEnvConfig& env_config,
                                      const BanditPolicyConfig& policy_config);

}  // namespace stir
