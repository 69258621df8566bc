#include "stir/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

namespace {

using namespace stir;

const std::map<std::string, CovariateDistribution> kDistributions{
    {"isotropic", CovariateDistribution::IsotropicGaussian},
    {"nonisotropic", CovariateDistribution::NonIsotropicGaussian},
    {"noncentered", CovariateDistribution::NonCenteredGaussian},
    {"sphere", CovariateDistribution::BoundedSphere},
};

const std::map<std::string, CorruptionMode> kModes{
    {"fake", CorruptionMode::FakeModel},
    {"heavy", CorruptionMode::IidHeavy},
    {"offset", CorruptionMode::ConstantOffset},
};

const std::map<std::string, AdversaryStrategy> kAdversaries{
    {"fake", AdversaryStrategy::FakeModel},
    {"boost", AdversaryStrategy::TargetedBoost},
};

// Shared flat view of GeneratorSpec for CLI binding.
struct GenFlags {
  std::int64_t n = 1000;
  std::int64_t d = 10;
  double alpha = 0.15;
  double sigma = 0.0;
  double offset = 5.0;
  double radius = 1.0;
  std::vector<double> cov_diag;
  std::vector<double> mean;
  std::uint64_t seed = 0;

  GeneratorSpec spec(CovariateDistribution dist, CorruptionMode mode) const {
    GeneratorSpec s;
    s.n = n;
    s.d = d;
    s.covariates.kind = dist;
    if (!cov_diag.empty()) {
      s.covariates.covariance =
          Eigen::Map<const Vector>(cov_diag.data(),
                                   static_cast<Index>(cov_diag.size()))
              .asDiagonal();
    }
    if (!mean.empty()) {
      s.covariates.mean = Eigen::Map<const Vector>(
          mean.data(), static_cast<Index>(mean.size()));
    }
    s.covariates.sphere_radius = radius;
    s.corruption_fraction = alpha;
    s.corruption_mode = mode;
    s.dense_noise_sigma = sigma;
    s.constant_offset = offset;
    s.seed = seed;
    return s;
  }
};

void add_gen_options(CLI::App* app, GenFlags& flags,
                     CovariateDistribution& dist, CorruptionMode& mode) {
  app->add_option("--n", flags.n, "points")->check(CLI::PositiveNumber);
  app->add_option("--d", flags.d, "features")->check(CLI::PositiveNumber);
  app->add_option("--alpha", flags.alpha, "corrupted fraction in [0, 0.5)");
  app->add_option("--sigma", flags.sigma, "dense noise level");
  app->add_option("--dist", dist, "covariate distribution")
      ->transform(CLI::CheckedTransformer(kDistributions, CLI::ignore_case));
  app->add_option("--mode", mode, "corruption mode")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  app->add_option("--cov-diag", flags.cov_diag,
                  "diagonal covariance entries (nonisotropic)");
  app->add_option("--mean", flags.mean, "covariate mean (noncentered)");
  app->add_option("--radius", flags.radius, "sphere radius");
  app->add_option("--offset", flags.offset, "constant corruption offset");
  app->add_option("--seed", flags.seed, "rng seed");
}

void add_solver_options(CLI::App* app, SolverConfig& config, bool& auto_m1) {
  app->add_option("--m1", config.initial_truncation, "starting truncation");
  app->add_option("--eta", config.increment, "stage growth factor");
  app->add_option("--target", config.target_accuracy, "target accuracy");
  app->add_option("--max-stages", config.max_stages, "stage cap");
  app->add_option("--max-inner", config.max_inner_iterations,
                  "inner iteration cap");
  app->add_option("--step", config.step_length, "gradient step length C");
  app->add_option("--ridge", config.ridge, "ridge added to normal systems");
  app->add_flag("--auto-m1", auto_m1, "search for a safe starting truncation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust linear regression toolkit"};
  app.set_config("--config", "", "read options from an ini file");
  app.require_subcommand(1);
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "print the resolved configuration and exit")
      ->configurable(false);

  // gen
  GenFlags gen_flags;
  auto gen_dist = CovariateDistribution::IsotropicGaussian;
  auto gen_mode = CorruptionMode::FakeModel;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "generate a corrupted dataset");
  add_gen_options(gen, gen_flags, gen_dist, gen_mode);
  gen->add_option("--out", gen_out, "output prefix (.csv and .truth)")
      ->required();

  // fit
  FitCommand fit_cmd;
  bool fit_auto_m1 = false;
  CLI::App* fit = app.add_subcommand("fit", "fit one dataset");
  fit->add_option("--data", fit_cmd.data, "dataset csv")->required();
  fit->add_option("--truth", fit_cmd.truth, "ground truth sidecar");
  fit->add_option("--solver", fit_cmd.solver,
                  "stir|stir-gd|irls|ols|torrent|torrent-gd");
  add_solver_options(fit, fit_cmd.config, fit_auto_m1);
  fit->add_option("--alpha-hat", fit_cmd.torrent_alpha_hat,
                  "assumed corruption for torrent");
  fit->add_option("--irls-m", fit_cmd.irls_truncation,
                  "fixed truncation for irls");
  fit->add_flag("--init-fake", fit_cmd.init_at_fake,
                "start from the sidecar's decoy model");
  fit->add_option("--trace-out", fit_cmd.trace_out, "trace jsonl path");
  fit->add_option("--out", fit_cmd.summary_out, "summary csv path");

  // sweep
  SweepCommand sweep_cmd;
  GenFlags sweep_flags;
  auto sweep_dist = CovariateDistribution::IsotropicGaussian;
  auto sweep_mode = CorruptionMode::FakeModel;
  bool sweep_auto_m1 = false;
  CLI::App* sweep = app.add_subcommand("sweep", "error sweep over one axis");
  add_gen_options(sweep, sweep_flags, sweep_dist, sweep_mode);
  add_solver_options(sweep, sweep_cmd.config, sweep_auto_m1);
  sweep->add_option("--axis", sweep_cmd.axis, "n|d|alpha|sigma");
  sweep->add_option("--values", sweep_cmd.values, "axis values")->required();
  sweep->add_option("--solvers", sweep_cmd.solvers, "solvers to compare");
  sweep->add_option("--trials", sweep_cmd.trials, "trials per cell");
  sweep->add_option("--alpha-hat", sweep_cmd.torrent_alpha_hat,
                    "assumed corruption for torrent");
  sweep->add_option("--irls-m", sweep_cmd.irls_truncation,
                    "fixed truncation for irls");
  sweep->add_flag("--init-fake", sweep_cmd.init_at_fake,
                  "start every fit from the decoy model");
  sweep->add_option("--jobs", sweep_cmd.jobs, "worker threads");
  sweep->add_option("--out", sweep_cmd.out, "summary csv path");

  // bandit
  BanditCommand bandit_cmd;
  CLI::App* bandit = app.add_subcommand("bandit", "corrupted bandit runs");
  bandit->add_option("--d", bandit_cmd.env.d, "dimension");
  bandit->add_option("--horizon", bandit_cmd.env.horizon, "rounds");
  bandit->add_option("--arms", bandit_cmd.env.arms_per_round, "arms per round");
  bandit->add_option("--noise", bandit_cmd.env.noise_sigma, "reward noise");
  bandit->add_option("--eta-b", bandit_cmd.env.corruption_fraction,
                     "corrupted round budget");
  bandit->add_option("--b-mag", bandit_cmd.env.corruption_magnitude,
                     "reward bound");
  bandit->add_option("--adversary", bandit_cmd.env.adversary, "fake|boost")
      ->transform(CLI::CheckedTransformer(kAdversaries, CLI::ignore_case));
  bandit->add_option("--seed", bandit_cmd.env.seed, "base env seed");
  bandit->add_option("--policies", bandit_cmd.policies, "wucb|rucb|linucb");
  bandit->add_option("--trials", bandit_cmd.trials, "environments per policy");
  bandit->add_option("--sigma0", bandit_cmd.policy.noise_scale,
                     "radius noise scale");
  bandit->add_option("--alpha0", bandit_cmd.policy.corruption_rate,
                     "radius corruption rate");
  bandit->add_option("--radius-scale", bandit_cmd.policy.radius_scale,
                     "confidence radius multiplier");
  bandit->add_option("--reg", bandit_cmd.policy.regularization,
                     "design ridge");
  bandit->add_option("--alpha-hat", bandit_cmd.policy.torrent_alpha_hat,
                     "active-set policy corruption guess");
  bandit->add_flag("--exact-refit", bandit_cmd.policy.exact_refit,
                   "use exact weighted solves in refits");
  bandit->add_option("--jobs", bandit_cmd.jobs, "worker threads");
  bandit->add_option("--out", bandit_cmd.out_prefix,
                     "trajectory/summary path prefix");

  // estimate-constant
  EstimateCommand est_cmd;
  CLI::App* est = app.add_subcommand("estimate-constant",
                                     "estimate design constants");
  est->add_flag("--noisy", est_cmd.noisy, "noisy-regime constant");
  est->add_option("--sigma", est_cmd.noise_sigma, "noise level (noisy mode)");
  est->add_option("--samples", est_cmd.samples, "monte carlo samples");
  est->add_option("--angles", est_cmd.angle_count, "direction grid size");
  est->add_option("--r-count", est_cmd.r_count, "radial grid size");
  est->add_option("--eta", est_cmd.eta, "stage factor for the threshold");
  est->add_option("--seed", est_cmd.seed, "rng seed");
  est->add_option("--jobs", est_cmd.jobs, "worker threads");
  est->add_option("--out", est_cmd.out, "json report path");

  CLI11_PARSE(app, argc, argv);

  if (print_config) {
    std::cout << app.config_to_str(false, true);
    return 0;
  }

  try {
    if (gen->parsed()) {
      GenCommand cmd{gen_flags.spec(gen_dist, gen_mode), gen_out};
      return run_gen(cmd, std::cout);
    }
    if (fit->parsed()) {
      fit_cmd.config.auto_initial_truncation = fit_auto_m1;
      return run_fit(fit_cmd, std::cout);
    }
    if (sweep->parsed()) {
      sweep_cmd.base = sweep_flags.spec(sweep_dist, sweep_mode);
      sweep_cmd.seed = sweep_flags.seed;
      sweep_cmd.config.auto_initial_truncation = sweep_auto_m1;
      return run_sweep(sweep_cmd, std::cout);
    }
    if (bandit->parsed()) {
      return run_bandit(bandit_cmd, std::cout);
    }
    if (est->parsed()) {
      return run_estimate(est_cmd, std::cout);
    }
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
