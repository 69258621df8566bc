#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stir/core.hpp"
#include "stir/datagen.hpp"
#include "stir/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

using namespace stir;

namespace {

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (!same_bits(a(i, j), b(i, j))) return false;
  return true;
}

bool bit_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Index i = 0; i < a.size(); ++i)
    if (!same_bits(a(i), b(i))) return false;
  return true;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  GeneratorSpec spec;
  spec.n = 80;
  spec.d = 5;
  spec.corruption_fraction = 0.2;
  spec.dense_noise_sigma = 0.3;
  spec.seed = 101;

  auto [d1, t1] = generate(spec);
  auto [d2, t2] = generate(spec);
  CHECK(bit_equal(d1.covariates, d2.covariates));
  CHECK(bit_equal(d1.responses, d2.responses));
  CHECK(bit_equal(t1.gold_model, t2.gold_model));
  CHECK(t1.corruption_support == t2.corruption_support);

  spec.seed = 102;
  auto [d3, t3] = generate(spec);
  CHECK_FALSE(bit_equal(d1.responses, d3.responses));
}

TEST_CASE("corruption support has exactly floor(alpha n) sorted unique points") {
  for (auto [n, alpha] : {std::pair<Index, double>{100, 0.15},
                          {101, 0.15},
                          {7, 0.45},
                          {50, 0.0}}) {
    GeneratorSpec spec;
    spec.n = n;
    spec.d = 3;
    spec.corruption_fraction = alpha;
    spec.seed = 11 + n;
    auto [data, truth] = generate(spec);

    auto want = static_cast<size_t>(std::floor(alpha * double(n)));
    CHECK(truth.corruption_support.size() == want);
    CHECK(std::is_sorted(truth.corruption_support.begin(),
                         truth.corruption_support.end()));
    std::set<Index> unique(truth.corruption_support.begin(),
                           truth.corruption_support.end());
    CHECK(unique.size() == want);
    for (Index i : truth.corruption_support) {
      CHECK(i >= 0);
      CHECK(i < n);
    }
    // off-support corruption is exactly zero
    for (Index i = 0; i < n; ++i)
      if (!truth.is_corrupted(i)) CHECK(truth.corruption_values(i) == 0.0);
  }
}

TEST_CASE("responses decompose exactly as signal + corruption + noise") {
  for (auto mode : {CorruptionMode::FakeModel, CorruptionMode::IidHeavy,
                    CorruptionMode::ConstantOffset}) {
    GeneratorSpec spec;
    spec.n = 120;
    spec.d = 6;
    spec.corruption_fraction = 0.25;
    spec.corruption_mode = mode;
    spec.dense_noise_sigma = 0.1;
    spec.seed = 21;
    auto [data, truth] = generate(spec);

    Vector reconstructed = data.covariates.transpose() * truth.gold_model +
                           truth.corruption_values + truth.dense_noise;
    for (Index i = 0; i < spec.n; ++i)
      CHECK(data.responses(i) ==
            doctest::Approx(reconstructed(i)).epsilon(1e-12));
  }
}

TEST_CASE("decoy-model corruption interpolates the decoy exactly") {
  GeneratorSpec spec;
  spec.n = 200;
  spec.d = 8;
  spec.corruption_fraction = 0.3;
  spec.corruption_mode = CorruptionMode::FakeModel;
  spec.dense_noise_sigma = 0.5;  // noise must not leak onto corrupted points
  spec.seed = 22;
  auto [data, truth] = generate(spec);

  REQUIRE(truth.fake_model.has_value());
  for (Index j : truth.corruption_support) {
    double r = data.covariates.col(j).dot(*truth.fake_model) -
               data.responses(j);
    CHECK(r == 0.0);  // written from the decoy, so exact
    CHECK(truth.dense_noise(j) == 0.0);
  }
}

TEST_CASE("gold and decoy models are unit norm") {
  GeneratorSpec spec;
  spec.n = 30;
  spec.d = 12;
  spec.corruption_fraction = 0.1;
  spec.seed = 23;
  auto [data, truth] = generate(spec);
  CHECK(truth.gold_model.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(truth.fake_model->norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dense noise hits clean points at the right scale") {
  GeneratorSpec spec;
  spec.n = 20000;
  spec.d = 3;
  spec.corruption_fraction = 0.2;
  spec.dense_noise_sigma = 0.7;
  spec.seed = 24;
  auto [data, truth] = generate(spec);

  double ss = 0.0;
  Index clean = 0;
  for (Index i = 0; i < spec.n; ++i) {
    if (truth.is_corrupted(i)) {
      CHECK(truth.dense_noise(i) == 0.0);
    } else {
      ss += truth.dense_noise(i) * truth.dense_noise(i);
      ++clean;
    }
  }
  double sd = std::sqrt(ss / double(clean));
  CHECK(sd == doctest::Approx(0.7).epsilon(0.05));

  spec.dense_noise_sigma = 0.0;
  auto [d0, t0] = generate(spec);
  CHECK(t0.dense_noise.norm() == 0.0);
}

TEST_CASE("heavy-tailed corruption lands only on the support, scaled to the model") {
  GeneratorSpec spec;
  spec.n = 500;
  spec.d = 4;
  spec.corruption_fraction = 0.2;
  spec.corruption_mode = CorruptionMode::IidHeavy;
  spec.seed = 25;
  auto [data, truth] = generate(spec);

  CHECK_FALSE(truth.fake_model.has_value());
  int distinct = 0;
  double first = truth.corruption_values(truth.corruption_support.front());
  for (Index j : truth.corruption_support) {
    CHECK(std::isfinite(truth.corruption_values(j)));
    if (truth.corruption_values(j) != first) ++distinct;
  }
  CHECK(distinct > 0);  // not a constant pattern
}

TEST_CASE("constant-offset corruption is the literal offset") {
  GeneratorSpec spec;
  spec.n = 60;
  spec.d = 3;
  spec.corruption_fraction = 0.25;
  spec.corruption_mode = CorruptionMode::ConstantOffset;
  spec.constant_offset = -4.25;
  spec.seed = 26;
  auto [data, truth] = generate(spec);
  for (Index j : truth.corruption_support)
    CHECK(truth.corruption_values(j) == -4.25);
}

TEST_CASE("sphere covariates sit on the sphere") {
  GeneratorSpec spec;
  spec.n = 100;
  spec.d = 6;
  spec.covariates.kind = CovariateDistribution::BoundedSphere;
  spec.covariates.sphere_radius = 2.5;
  spec.seed = 27;
  auto [data, truth] = generate(spec);
  for (Index j = 0; j < spec.n; ++j)
    CHECK(data.covariates.col(j).norm() == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("correlated gaussian covariates match the requested covariance") {
  GeneratorSpec spec;
  spec.n = 40000;
  spec.d = 2;
  spec.covariates.kind = CovariateDistribution::NonIsotropicGaussian;
  Matrix cov(2, 2);
  cov << 4.0, 1.2,
         1.2, 1.0;
  spec.covariates.covariance = cov;
  spec.seed = 28;
  auto [data, truth] = generate(spec);

  Matrix emp = data.covariates * data.covariates.transpose() / double(spec.n);
  CHECK(emp(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(emp(1, 1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(emp(0, 1) == doctest::Approx(1.2).epsilon(0.08));
}

TEST_CASE("non-centered covariates recover their mean") {
  GeneratorSpec spec;
  spec.n = 40000;
  spec.d = 3;
  spec.covariates.kind = CovariateDistribution::NonCenteredGaussian;
  Vector mu(3);
  mu << 1.0, -2.0, 0.5;
  spec.covariates.mean = mu;
  spec.seed = 29;
  auto [data, truth] = generate(spec);

  Vector emp = data.covariates.rowwise().mean();
  for (Index k = 0; k < 3; ++k)
    CHECK(emp(k) == doctest::Approx(mu(k)).epsilon(0.02));
}

TEST_CASE("pairing and centering is the advertised arithmetic") {
  GeneratorSpec spec;
  spec.n = 11;  // odd, so the last point is dropped
  spec.d = 3;
  spec.seed = 30;
  auto [data, truth] = generate(spec);

  Dataset paired = pair_and_center(data);
  Index m = 5;
  REQUIRE(paired.n() == m);
  const double inv = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < m; ++i) {
    Vector want =
        (data.covariates.col(i) - data.covariates.col(i + m)) * inv;
    CHECK((paired.covariates.col(i) - want).norm() <= 1e-15);
    CHECK(paired.responses(i) ==
          doctest::Approx((data.responses(i) - data.responses(i + m)) * inv)
              .epsilon(1e-15));
  }
}

TEST_CASE("pairing removes the covariate mean and keeps the model") {
  GeneratorSpec spec;
  spec.n = 20000;
  spec.d = 4;
  spec.covariates.kind = CovariateDistribution::NonCenteredGaussian;
  Vector mu(4);
  mu << 3, 3, -3, 1;
  spec.covariates.mean = mu;
  spec.corruption_fraction = 0.1;
  spec.corruption_mode = CorruptionMode::ConstantOffset;
  spec.seed = 31;
  auto [data, truth] = generate(spec);

  Dataset paired = pair_and_center(data);
  Vector emp = paired.covariates.rowwise().mean();
  CHECK(emp.norm() <= 0.05);  // mean removed up to sampling error

  // the paired responses still follow the gold model off the touched pairs,
  // and at most 2 floor(alpha n) pairs are touched
  Vector r = paired.covariates.transpose() * truth.gold_model -
             paired.responses;
  Index touched = 0;
  for (Index i = 0; i < paired.n(); ++i)
    if (std::abs(r(i)) > 1e-9) ++touched;
  CHECK(touched <= 2 * static_cast<Index>(truth.corruption_support.size()));
  CHECK(touched >= 1);  // corruption did not vanish
}

TEST_CASE("explicit centering returns the mean it removed") {
  GeneratorSpec spec;
  spec.n = 500;
  spec.d = 3;
  spec.covariates.kind = CovariateDistribution::NonCenteredGaussian;
  Vector mu(3);
  mu << 2, 0, -1;
  spec.covariates.mean = mu;
  spec.seed = 32;
  auto [data, truth] = generate(spec);

  auto [centered, mean] = center_covariates(data);
  Vector direct = data.covariates.rowwise().mean();
  CHECK((mean - direct).norm() <= 1e-14);
  CHECK(centered.covariates.rowwise().mean().norm() <= 1e-13);
  CHECK(bit_equal(centered.responses, data.responses));
}

TEST_CASE("generator rejects malformed specs") {
  GeneratorSpec spec;
  spec.n = 10;
  spec.d = 2;

  GeneratorSpec bad = spec;
  bad.corruption_fraction = 0.5;
  CHECK_THROWS_AS(generate(bad), InvalidSpec);
  bad.corruption_fraction = -0.1;
  CHECK_THROWS_AS(generate(bad), InvalidSpec);

  bad = spec;
  bad.n = 0;
  CHECK_THROWS_AS(generate(bad), InvalidSpec);

  bad = spec;
  bad.dense_noise_sigma = -1.0;
  CHECK_THROWS_AS(generate(bad), InvalidSpec);

  bad = spec;
  bad.covariates.kind = CovariateDistribution::NonIsotropicGaussian;
  bad.covariates.covariance = Matrix::Ones(2, 2);  // rank one, not PD
  CHECK_THROWS_AS(generate(bad), InvalidSpec);

  bad = spec;
  bad.covariates.kind = CovariateDistribution::NonIsotropicGaussian;
  bad.covariates.covariance = Matrix::Identity(3, 3);  // wrong size for d=2
  CHECK_THROWS_AS(generate(bad), InvalidSpec);

  bad = spec;
  bad.covariates.kind = CovariateDistribution::NonCenteredGaussian;
  bad.covariates.mean = Vector::Zero(5);
  CHECK_THROWS_AS(generate(bad), InvalidSpec);

  bad = spec;
  bad.covariates.kind = CovariateDistribution::BoundedSphere;
  bad.covariates.sphere_radius = 0.0;
  CHECK_THROWS_AS(generate(bad), InvalidSpec);
}

TEST_CASE("covariate norms stay within the gaussian envelope") {
  GeneratorSpec spec;
  spec.n = 1000;
  spec.d = 10;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    spec.seed = seed;
    auto [data, truth] = generate(spec);
    double bound = std::sqrt(double(spec.d)) +
                   4.0 * std::sqrt(2.0 * std::log(double(spec.n)));
    CHECK(data.max_column_norm() <= bound);
  }
}

TEST_CASE("support is drawn before covariates and stays put") {
  // changing only the covariate law must not move the corrupted subset
  GeneratorSpec a;
  a.n = 300;
  a.d = 4;
  a.corruption_fraction = 0.2;
  a.seed = 33;

  GeneratorSpec b = a;
  b.covariates.kind = CovariateDistribution::BoundedSphere;
  b.covariates.sphere_radius = 3.0;

  auto [da, ta] = generate(a);
  auto [db, tb] = generate(b);
  CHECK(ta.corruption_support == tb.corruption_support);
}
