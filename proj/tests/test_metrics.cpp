#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "taskshift/error.hpp"
#include "taskshift/estimators.hpp"
#include "taskshift/metrics.hpp"

using namespace taskshift;

namespace {

Vector gaussian_vec(Eigen::Index n, std::uint64_t seed) {
  Rng rng(SeedRecord{seed, 1, 0});
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Estimate explicit_estimate(Vector theta) { return make_estimate(std::move(theta), EstimateKind::Explicit); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

TEST(ExcessRisk, Examples) {
  const auto spec = CovarianceSpec::from_lambdas({8, 1, 1});
  const Vector star = (Vector(3) << 0.3, -1, 2).finished();
  EXPECT_EQ(excess_risk(spec, star, star), 0.0);
  EXPECT_EQ(excess_risk(spec, star, Vector(star + Vector::Unit(3, 0))), 8.0);
}

TEST(ExcessRisk, MonteCarloOracle) {
  Vector lam = gaussian_vec(20, 1).cwiseAbs().array() + 0.1;
  std::vector<double> lv(lam.data(), lam.data() + lam.size());
  std::sort(lv.begin(), lv.end(), std::greater<>());
  const auto spec = CovarianceSpec::from_lambdas(lv);
  const Vector star = gaussian_vec(20, 2);
  const Vector theta = gaussian_vec(20, 3);
  const Vector diff = theta - star;

  Rng rng(SeedRecord{4, 0, 0});
  double acc = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    double proj = 0.0;
    for (std::size_t j = 0; j < 20; ++j) proj += std::sqrt(spec.lambda(j)) * rng.normal() * diff(static_cast<Eigen::Index>(j));
    acc += proj * proj;
  }
  const double mc = acc / trials;
  const double closed = excess_risk(spec, star, theta);
  EXPECT_NEAR(mc, closed, 0.03 * closed);
}

TEST(ExcessRisk, EqualsQuadraticForm) {
  const auto spec = build_ensemble(PolyDecay{1.5, 0.25, 0.0}, 30);
  const Vector star = gaussian_vec(static_cast<Eigen::Index>(spec.dim()), 5);
  const Vector theta = gaussian_vec(static_cast<Eigen::Index>(spec.dim()), 6);
  const Vector diff = theta - star;
  const double form = diff.transpose() * spec.as_vector().asDiagonal() * diff;
  EXPECT_NEAR(excess_risk(spec, star, theta), form, 1e-12 * form);
  EXPECT_NEAR(sigma_inner(spec, diff, diff), form, 1e-12 * form);
}

TEST(SurvivalContamination, Examples) {
  const auto spec = build_ensemble(Spiked{1.5, 0.5, 0.25}, 16);
  const auto sig = make_sparse(spec, {0, 1}, {1.0, -0.5});

  const auto exact = survival_contamination(spec, sig, explicit_estimate(sig.theta_star()));
  EXPECT_EQ(exact.survival, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(exact.contamination, 0.0);

  const auto zero = survival_contamination(spec, sig, explicit_estimate(Vector::Zero(64)));
  EXPECT_EQ(zero.survival, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(zero.contamination, 0.0);
  EXPECT_DOUBLE_EQ(risk_from_survival(sig, zero), 1.25);

  const std::size_t q = 40;
  Vector contaminated = sig.theta_star();
  contaminated(q) += 1.0 / std::sqrt(spec.lambda(q));
  const auto one = survival_contamination(spec, sig, explicit_estimate(contaminated));
  EXPECT_NEAR(one.contamination, 1.0, 1e-14);
  EXPECT_NEAR(one.survival[0], 1.0, 1e-15);
}

TEST(SurvivalContamination, RiskIdentity) {
  const auto spec = build_ensemble(Spiked{1.5, 0.5, 0.25}, 36);
  const auto sig = make_sparse(spec, {0, 1, 7}, {1.0, -0.5, -0.15});
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto est = explicit_estimate(gaussian_vec(static_cast<Eigen::Index>(spec.dim()), seed));
    const double direct = excess_risk(spec, sig, est);
    const double via = risk_from_survival(sig, survival_contamination(spec, sig, est));
    EXPECT_NEAR(direct, via, 1e-10 * direct);
  }
}

TEST(SurvivalContamination, DenseSignalRejected) {
  const auto spec = CovarianceSpec::from_lambdas({1, 1});
  const auto sig = make_explicit(spec, (Vector(2) << 1, 1).finished());
  try {
    survival_contamination(spec, sig, explicit_estimate(Vector::Zero(2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DenseSignal);
  }
}

TEST(Decomposition, UnitMarginLabelsHaveNoTaskShift) {
  // x_i^T theta* = +-1 for every row, so the sign labels equal the regression labels.
  const auto spec = CovarianceSpec::from_lambdas({1, 1, 1, 1, 1, 1});
  const auto sig = make_sparse(spec, {0}, {1.0});
  Matrix X(3, 6);
  X << 1, 0.3, -0.2, 0.5, 1.1, -0.7,
      -1, 0.9, 0.4, -0.1, 0.2, 0.6,
       1, -0.5, 0.8, 0.3, -0.4, 0.1;
  const Vector y = X * sig.theta_star();
  const auto ds = make_dataset(X, y, y);
  const auto f = gram_factorize(ds.X);
  const auto reg = mni(ds.X, ds.y_reg, f, LabelKind::Regression);
  const auto cls = mni(ds.X, ds.y_cls, f, LabelKind::Classification);
  const auto rec = decompose_lemma2(spec, sig, ds, reg, cls);
  EXPECT_NEAR(*rec.task_shift_error, 0.0, 1e-28);
  EXPECT_NEAR(rec.risk, *rec.bias, 1e-14);
}

TEST(Decomposition, ZeroTargetLeavesOnlyTaskShift) {
  const auto spec = CovarianceSpec::from_lambdas({4, 2, 1, 1, 1});
  const auto sig = make_explicit(spec, Vector::Zero(5));
  Matrix X(2, 5);
  X << 1, 2, 0, -1, 0.5,
       0, 1, 1, 0.3, -2;
  const auto ds = make_dataset(X, Vector::Zero(2), (Vector(2) << 1, -1).finished());
  const auto f = gram_factorize(ds.X);
  const auto reg = mni(ds.X, ds.y_reg, f, LabelKind::Regression);
  const auto cls = mni(ds.X, ds.y_cls, f, LabelKind::Classification);
  const auto rec = decompose_lemma2(spec, sig, ds, reg, cls);
  EXPECT_EQ(*rec.bias, 0.0);
  EXPECT_EQ(*rec.cross_term, 0.0);
  EXPECT_NEAR(rec.risk, *rec.task_shift_error, 1e-14 * rec.risk);
  EXPECT_GT(rec.risk, 0.0);
}

TEST(Decomposition, ThreeTermIdentityOnSpikedData) {
  const auto spec = build_ensemble(Spiked{1.5, 0.5, 0.25}, 100);
  const auto sig = make_sparse(spec, {0, 1}, {1.0, -0.5});
  const auto ds = sample_dataset(spec, sig, 100, SeedRecord{21, 0, 0});
  const auto f = gram_factorize(ds.X);
  const auto reg = mni(ds.X, ds.y_reg, f, LabelKind::Regression);
  const auto cls = mni(ds.X, ds.y_cls, f, LabelKind::Classification);
  const auto rec = decompose_lemma2(spec, sig, ds, reg, cls);
  const double total = *rec.bias + *rec.task_shift_error + *rec.cross_term;
  EXPECT_NEAR(rec.risk, total, 1e-8 * rec.risk);
  EXPECT_NEAR(*rec.bias, excess_risk(spec, sig, reg), 0.0);
  EXPECT_EQ(rec.survival.size(), 2u);
  EXPECT_NEAR(lemma2_two_term_residual(rec), std::abs(*rec.cross_term) / rec.risk, 1e-10);
}

TEST(Decomposition, NoisyLabelsRejected) {
  const auto spec = build_ensemble(Spiked{1.5, 0.5, 0.25}, 20);
  const auto sig = make_sparse(spec, {0, 1}, {1.0, -0.5});
  const auto ds = sample_dataset(spec, sig, 20, SeedRecord{22, 0, 0}, 0.1);
  const auto f = gram_factorize(ds.X);
  const auto reg = mni(ds.X, ds.y_reg, f, LabelKind::Regression);
  const auto cls = mni(ds.X, ds.y_cls, f, LabelKind::Classification);
  try {
    decompose_lemma2(spec, sig, ds, reg, cls);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoisyLabels);
  }
}

TEST(EmpiricalB, DowndateMatchesRecomputation) {
  const auto spec = build_ensemble(Spiked{1.5, 0.5, 0.25}, 80);
  const auto sig = make_sparse(spec, {0, 1, 7}, {1.0, -0.5, -0.15});
  const auto ds = sample_dataset(spec, sig, 80, SeedRecord{23, 0, 0});
  const auto f = gram_factorize(ds.X);
  const std::size_t k = *spec.spike_length();
  const auto fresh = empirical_b(ds, spec, sig, k);
  const auto down = empirical_b(ds, spec, sig, k, &f);
  ASSERT_EQ(fresh.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GT(fresh[i], 0.0);
    EXPECT_NEAR(down[i], fresh[i], 1e-8 * fresh[i]);
  }
  EXPECT_EQ(support_with_head(sig, 3), (IndexSet{0, 1, 2, 7}));
}

TEST(EmpiricalB, TraceOfKeptGramByInverse) {
  const auto spec = CovarianceSpec::from_lambdas({5, 1, 1, 1, 1});
  const auto sig = make_sparse(spec, {0}, {1.0});
  Matrix X = Matrix::Zero(3, 5);
  // Kept columns 1..3 give A = 2 I_3 once column 0 is left out.
  X(0, 1) = X(1, 2) = X(2, 3) = std::sqrt(2.0);
  X(0, 0) = 0.7;
  const Vector y = X * sig.theta_star();
  const auto ds = make_dataset(X, y, y.array().sign().matrix());
  const auto b = empirical_b(ds, spec, sig, 0);
  EXPECT_NEAR(b[0], 5.0 * 1.5, 1e-14);
}

TEST(EmpiricalB, GrowsWithNWhenSupportIsInTheSpike) {
  // Seeds 0..9; compares medians at n = 200 and n = 800.
  const Spiked model{1.2, 0.5, 0.25};
  std::vector<double> small;
  std::vector<double> large;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t n : {200u, 800u}) {
      const auto spec = build_ensemble(model, n);
      const auto sig = make_sparse(spec, {0, 1}, {1.0, -0.5});
      const auto ds = sample_dataset(spec, sig, n, SeedRecord{100 + seed, n, 0});
      const auto b = empirical_b(ds, spec, sig, *spec.spike_length());
      (n == 200 ? small : large).push_back(b[0]);
    }
  }
  EXPECT_GT(median(large), median(small));
}

TEST(SeparationRatio, Examples) {
  const auto spec = CovarianceSpec::from_lambdas({1, 1, 1, 1});
  const auto sig = make_sparse(spec, {0, 2}, {1.0, 1.0});
  EXPECT_EQ(separation_ratio(sig.theta_star(), sig), std::numeric_limits<double>::infinity());
  const Vector theta = (Vector(4) << 0.9, 0.1, -0.8, 0.05).finished();
  EXPECT_DOUBLE_EQ(separation_ratio(theta, sig), 8.0);
}

TEST(SeparationRatio, AboveOneIffTopTRecoversSupport) {
  const auto spec = CovarianceSpec::from_lambdas({1, 1, 1, 1, 1, 1});
  Rng rng(SeedRecord{31, 0, 0});
  int recovered = 0;
  for (int trial = 0; trial < 500; ++trial) {
    IndexSet support{static_cast<std::size_t>(trial % 6), static_cast<std::size_t>((trial / 6) % 5 + 1)};
    if (support[0] == support[1]) support[1] = (support[1] + 1) % 6;
    normalize(support);
    const auto sig = make_sparse(spec, support, {1.0, 1.0});
    Vector theta(6);
    for (Eigen::Index j = 0; j < 6; ++j) theta(j) = rng.normal();
    const bool exact = recover_support(theta, TopT{2}) == support;
    recovered += exact ? 1 : 0;
    EXPECT_EQ(separation_ratio(theta, sig) > 1.0, exact) << trial;
  }
  EXPECT_GT(recovered, 0);
  EXPECT_LT(recovered, 500);
}
