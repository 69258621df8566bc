#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stir/bandit.hpp"
#include "stir/core.hpp"
#include "stir/rng.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace stir;

namespace {

BanditEnvConfig small_env(std::uint64_t seed) {
  BanditEnvConfig env;
  env.d = 4;
  env.horizon = 80;
  env.arms_per_round = 12;
  env.noise_sigma = 0.1;
  env.corruption_fraction = 0.25;
  env.corruption_magnitude = 5.0;
  env.seed = seed;
  return env;
}

BanditPolicyConfig small_policy() {
  BanditPolicyConfig policy;
  policy.noise_scale = 0.1;
  policy.corruption_rate = 0.25;
  policy.radius_scale = 0.05;
  return policy;
}

bool same_trajectory(const std::vector<TrajectoryPoint>& a,
                     const std::vector<TrajectoryPoint>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].arm_index != b[i].arm_index || a[i].reward != b[i].reward ||
        a[i].corrupted != b[i].corrupted ||
        a[i].cumulative_regret != b[i].cumulative_regret)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("arm selection on hand-built confidence sets") {
  BanditState state;
  state.design = Matrix::Identity(2, 2);
  state.estimate = Vector::Zero(2);
  state.regularization = 1.0;

  Matrix arms(2, 3);
  arms << 1, 0, 1,
          0, 1, 0;

  // zero radius, zero estimate: full tie, lowest index wins
  state.radius = 0.0;
  CHECK(select_arm(state, arms) == 0);

  // estimate pointing at e2 picks the e2 arm
  state.estimate << 0, 0.5;
  CHECK(select_arm(state, arms) == 1);

  // a skewed design makes the poorly explored direction win on width
  state.estimate.setZero();
  state.radius = 10.0;
  state.design << 1, 0,
                  0, 100;
  CHECK(select_arm(state, arms) == 0);  // ||e1||_{V^-1} = 1 > 0.1
}

TEST_CASE("arm selection prefers mean plus width, not mean alone") {
  BanditState state;
  state.design = Matrix::Identity(2, 2);
  state.design(0, 0) = 100.0;  // e1 well explored
  state.estimate = Vector(2);
  state.estimate << 0.3, 0.0;
  state.radius = 1.0;

  Matrix arms(2, 2);
  arms << 1, 0,
          0, 1;
  // scores: 0.3 + 1*0.1 = 0.4 vs 0.0 + 1*1.0 = 1.0
  CHECK(select_arm(state, arms) == 1);
}

TEST_CASE("environment respects the corruption prefix budget") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    auto cfg = small_env(seed);
    BanditEnv env(cfg);
    Rng picker(seed * 17 + 1);
    int corrupted_so_far = 0;
    for (int t = 0; t < cfg.horizon; ++t) {
      Matrix arms = env.next_arms();
      REQUIRE(arms.cols() == cfg.arms_per_round);
      for (Index a = 0; a < arms.cols(); ++a)
        CHECK(arms.col(a).norm() == doctest::Approx(1.0).epsilon(1e-12));

      auto fb = env.pull(static_cast<Index>(picker.below(arms.cols())));
      corrupted_so_far += fb.corrupted ? 1 : 0;
      CHECK(std::abs(fb.reward) <= cfg.corruption_magnitude + 1e-12);
      CHECK(double(corrupted_so_far) <=
            cfg.corruption_fraction * double(t + 1) + 1.0);
    }
    CHECK(env.corrupted_count() == corrupted_so_far);
  }
}

TEST_CASE("a zero corruption budget never corrupts") {
  auto cfg = small_env(5);
  cfg.corruption_fraction = 0.0;
  BanditEnv env(cfg);
  for (int t = 0; t < cfg.horizon; ++t) {
    env.next_arms();
    auto fb = env.pull(0);
    CHECK_FALSE(fb.corrupted);
  }
  CHECK(env.corrupted_count() == 0);
}

TEST_CASE("pull order errors are rejected") {
  auto cfg = small_env(6);
  BanditEnv env(cfg);
  CHECK_THROWS_AS(env.pull(0), InvalidParameter);  // no arm set served yet
  Matrix arms = env.next_arms();
  CHECK_THROWS_AS(env.pull(arms.cols()), InvalidParameter);
  CHECK_THROWS_AS(env.pull(-1), InvalidParameter);
  CHECK_NOTHROW(env.pull(0));
  CHECK_THROWS_AS(env.pull(0), InvalidParameter);  // same set pulled twice
}

TEST_CASE("simulation is reproducible and well-formed") {
  auto cfg = small_env(7);
  auto policy = small_policy();

  for (auto kind :
       {BanditPolicy::WucbLin, BanditPolicy::LinUcb, BanditPolicy::RucbLin}) {
    auto a = simulate(kind, cfg, policy);
    auto b = simulate(kind, cfg, policy);
    REQUIRE(a.size() == static_cast<size_t>(cfg.horizon));
    CHECK(same_trajectory(a, b));

    double cum = 0.0;
    for (int t = 0; t < cfg.horizon; ++t) {
      CHECK(a[t].t == t);
      CHECK(a[t].instant_regret >= -1e-12);
      cum += a[t].instant_regret;
      CHECK(a[t].cumulative_regret == doctest::Approx(cum).epsilon(1e-12));
      CHECK(a[t].arm_index >= 0);
      CHECK(a[t].arm_index < cfg.arms_per_round);
    }
  }
}

TEST_CASE("different seeds give different trajectories") {
  auto policy = small_policy();
  auto a = simulate(BanditPolicy::LinUcb, small_env(8), policy);
  auto b = simulate(BanditPolicy::LinUcb, small_env(9), policy);
  CHECK_FALSE(same_trajectory(a, b));
}

TEST_CASE("a single arm per round forces zero regret") {
  auto cfg = small_env(10);
  cfg.arms_per_round = 1;
  auto traj = simulate(BanditPolicy::WucbLin, cfg, small_policy());
  for (const auto& p : traj) {
    CHECK(p.arm_index == 0);
    CHECK(p.instant_regret == 0.0);
  }
}

TEST_CASE("selection is invariant to permuting distinct-score arms") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    BanditState state;
    Index d = 3;
    Matrix a = Matrix::Random(d, d);
    state.design = a * a.transpose() + Matrix::Identity(d, d);
    state.estimate = Vector::Random(d);
    state.radius = 0.5;
    state.regularization = 1.0;

    Matrix arms(d, 5);
    for (Index j = 0; j < 5; ++j) {
      Vector x(d);
      for (Index i = 0; i < d; ++i) x(i) = rng.gaussian();
      arms.col(j) = x.normalized();
    }

    Index pick = select_arm(state, arms);

    // rotate the columns and check the same vector wins
    Matrix rotated(d, 5);
    for (Index j = 0; j < 5; ++j) rotated.col(j) = arms.col((j + 2) % 5);
    Index pick_rot = select_arm(state, rotated);
    CHECK((rotated.col(pick_rot) - arms.col(pick)).norm() <= 1e-14);
  }
}

TEST_CASE("weighted policy down-weights corrupted pulls") {
  auto cfg = small_env(12);
  cfg.horizon = 120;
  cfg.corruption_fraction = 0.25;
  auto policy = small_policy();

  BanditEnv env(cfg);
  auto state = make_bandit_state(cfg.d, cfg, policy);
  std::vector<bool> corrupted;
  for (int t = 0; t < cfg.horizon; ++t) {
    Matrix arms = env.next_arms();
    auto res = wucb_lin_round(state, arms, env, policy);
    corrupted.push_back(res.corrupted);
  }

  REQUIRE(state.weights.size() == cfg.horizon);
  double bad_mean = 0, good_mean = 0;
  int bad = 0, good = 0;
  for (int t = 0; t < cfg.horizon; ++t) {
    if (corrupted[t]) {
      bad_mean += state.weights(t);
      ++bad;
    } else {
      good_mean += state.weights(t);
      ++good;
    }
  }
  REQUIRE(bad > 5);
  REQUIRE(good > 5);
  bad_mean /= bad;
  good_mean /= good;
  CHECK(bad_mean < good_mean);
}

TEST_CASE("with no corruption the active-set policy mirrors plain oful") {
  auto cfg = small_env(13);
  auto policy = small_policy();
  policy.torrent_alpha_hat = 0.0;
  policy.corruption_rate = 0.0;  // radii now coincide

  auto rucb = simulate(BanditPolicy::RucbLin, cfg, policy);
  auto oful = simulate(BanditPolicy::LinUcb, cfg, policy);
  CHECK(same_trajectory(rucb, oful));
}

TEST_CASE("late rounds regret less than early rounds once learning settles") {
  auto cfg = small_env(14);
  cfg.horizon = 160;
  cfg.corruption_fraction = 0.0;
  auto policy = small_policy();

  double early = 0, late = 0;
  for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
    auto c = cfg;
    c.seed = seed;
    auto traj = simulate(BanditPolicy::LinUcb, c, policy);
    for (int t = 0; t < 40; ++t) early += traj[t].instant_regret;
    for (int t = 120; t < 160; ++t) late += traj[t].instant_regret;
  }
  CHECK(late < early);
}

TEST_CASE("state bookkeeping grows with the horizon") {
  auto cfg = small_env(15);
  cfg.horizon = 30;
  auto policy = small_policy();
  BanditEnv env(cfg);
  auto state = make_bandit_state(cfg.d, cfg, policy);
  for (int t = 0; t < cfg.horizon; ++t) {
    Matrix arms = env.next_arms();
    linucb_round(state, arms, env, policy);
    CHECK(state.t() == t + 1);
    CHECK(state.pulls.cols() == t + 1);
  }
  // unit weights for the plain policy
  for (Index i = 0; i < state.t(); ++i) CHECK(state.weights(i) == 1.0);
}

TEST_CASE("config validation") {
  auto cfg = small_env(16);
  cfg.corruption_fraction = 1.5;
  CHECK_THROWS_AS(BanditEnv{cfg}, InvalidParameter);
  cfg = small_env(16);
  cfg.horizon = 0;
  CHECK_THROWS_AS(BanditEnv{cfg}, InvalidParameter);
  cfg = small_env(16);
  cfg.arms_per_round = 0;
  CHECK_THROWS_AS(BanditEnv{cfg}, InvalidParameter);
}
