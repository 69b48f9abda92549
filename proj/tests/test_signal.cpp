#include <cmath>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "taskshift/config.hpp"
#include "taskshift/error.hpp"
#include "taskshift/signal.hpp"

using namespace taskshift;

namespace {

CovarianceSpec spiked16() { return build_ensemble(Spiked{1.5, 0.5, 0.25}, 16); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

}  // namespace

TEST(MakeSparse, SpikedExample) {
  const auto spec = spiked16();
  const auto sig = make_sparse(spec, {0, 1}, {1.0, -0.5});
  EXPECT_NEAR(sig.theta_star()(0), 0.353553, 1e-6);
  EXPECT_NEAR(sig.theta_star()(1), -0.176777, 1e-6);
  EXPECT_DOUBLE_EQ(sig.strength(), 1.25);
  EXPECT_EQ(sig.kind(), SignalKind::SparseFixed);
  for (Eigen::Index j = 2; j < 64; ++j) EXPECT_EQ(sig.theta_star()(j), 0.0);
}

TEST(MakeSparse, CriticalStrength) {
  const auto spec = build_ensemble(PolyDecay{1.5, 1.0, 2.0}, 20);
  const auto sig = make_sparse(spec, {4}, {std::sqrt(2.0 / std::numbers::pi)});
  EXPECT_NEAR(sig.strength(), 2.0 / std::numbers::pi, 1e-15);
}

TEST(MakeSparse, IsotropicSingleCoordinate) {
  const auto spec = CovarianceSpec::from_lambdas(std::vector<double>(5, 1.0));
  const auto sig = make_sparse(spec, {2}, {2.0});
  EXPECT_EQ(sig.theta_star(), (Vector(5) << 0, 0, 2, 0, 0).finished());
}

TEST(MakeSparse, SortsSupportWithCoefficients) {
  const auto spec = spiked16();
  const auto sig = make_sparse(spec, {7, 0}, {-0.15, 1.0});
  EXPECT_EQ(sig.support(), (IndexSet{0, 7}));
  EXPECT_EQ(sig.coeffs(), (std::vector<double>{1.0, -0.15}));
  EXPECT_EQ(sig.support_position(7), 1u);
  EXPECT_EQ(sig.support_position(3), Signal::npos);
}

TEST(MakeSparse, Errors) {
  const auto spec = spiked16();
  EXPECT_EQ(code_of([&] { make_sparse(spec, {0, 1}, {1.0, 0.0}); }), ErrorCode::ZeroCoefficient);
  EXPECT_EQ(code_of([&] { make_sparse(spec, {0, 64}, {1.0, 1.0}); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([&] { make_sparse(spec, {3, 3}, {1.0, 1.0}); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([&] { make_sparse(spec, {0}, {1.0, 1.0}); }), ErrorCode::DimensionMismatch);
}

TEST(MakeSparse, StrengthMatchesQuadraticForm) {
  const auto spec = build_ensemble(PolyDecay{1.5, 0.25, 0.0}, 30);
  const auto sig = make_sparse(spec, {0, 3, 9}, {0.2, -0.1, 0.7});
  double direct = 0.0;
  for (std::size_t j = 0; j < spec.dim(); ++j) {
    const double t = sig.theta_star()(static_cast<Eigen::Index>(j));
    direct += spec.lambda(j) * t * t;
  }
  EXPECT_NEAR(direct, sig.strength(), 1e-12 * sig.strength());
}

TEST(Beta, Examples) {
  const auto spec = spiked16();
  const auto sig = make_sparse(spec, {0, 1}, {1.0, -0.5});
  EXPECT_DOUBLE_EQ(beta(sig, 0), 0.8);
  EXPECT_DOUBLE_EQ(beta(sig, 1), 0.2);
  EXPECT_EQ(code_of([&] { beta(sig, 5); }), ErrorCode::IndexNotInSupport);

  EXPECT_DOUBLE_EQ(beta(make_sparse(spec, {3}, {0.3}), 3), 1.0);
  const auto small = make_sparse(spec, {0, 1}, {0.2, -0.1});
  EXPECT_NEAR(beta(small, 0), 0.8, 1e-12);
  EXPECT_NEAR(beta(small, 1), 0.2, 1e-12);
  EXPECT_NEAR(beta(small, 0) + beta(small, 1), 1.0, 1e-12);
}

TEST(Rademacher, PreservesMagnitudesAndIsAnInvolution) {
  const auto spec = CovarianceSpec::from_lambdas({1, 1, 1});
  const auto base = make_explicit(spec, (Vector(3) << 1, 0, 2).finished());
  Rng a(SeedRecord{1, 2, 3});
  Rng b(SeedRecord{1, 2, 3});
  const auto once = make_rademacher(base, a);
  const auto twice = make_rademacher(once, b);
  EXPECT_EQ(twice.theta_star(), base.theta_star());
  EXPECT_EQ(once.theta_star().cwiseAbs(), base.theta_star().cwiseAbs());
  EXPECT_DOUBLE_EQ(once.strength(), base.strength());
}

TEST(Rademacher, SignsAverageToZero) {
  const auto spec = build_ensemble(Spiked{1.5, 0.5, 0.25}, 16);
  const auto base = make_sparse(spec, {0, 1}, {1.0, -0.5});
  Rng rng(SeedRecord{11, 0, 0});
  const int draws = 10000;
  double sum0 = 0.0;
  for (int i = 0; i < draws; ++i) sum0 += make_rademacher(base, rng).theta_star()(0);
  const double mean = sum0 / draws;
  const double se = std::abs(base.theta_star()(0)) / std::sqrt(static_cast<double>(draws));
  EXPECT_LT(std::abs(mean), 4.0 * se);
  EXPECT_EQ(make_rademacher(base, rng).kind(), SignalKind::SparseRademacher);
}

TEST(DenseGaussian, StrengthHasUnitMean) {
  const auto spec = build_ensemble(PolyDecay{1.5, 0.25, 0.0}, 20);
  Rng rng(SeedRecord{5, 0, 0});
  double total = 0.0;
  for (int i = 0; i < 1000; ++i) total += make_dense_gaussian(spec, rng).strength();
  EXPECT_NEAR(total / 1000.0, 1.0, 0.05);
}

TEST(DenseGaussian, VarianceOfSingleCoordinate) {
  const auto spec = CovarianceSpec::from_lambdas({4.0});
  Rng rng(SeedRecord{6, 0, 0});
  const int draws = 10000;
  double ss = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double t = make_dense_gaussian(spec, rng).theta_star()(0);
    ss += t * t;
  }
  EXPECT_NEAR(ss / draws, 0.25, 0.025);
}

TEST(DenseGaussian, DeterministicAndDense) {
  const auto spec = build_ensemble(Isotropic{2.0, 1.5}, 10);
  Rng a(SeedRecord{9, 9, 9});
  Rng b(SeedRecord{9, 9, 9});
  const auto s1 = make_dense_gaussian(spec, a);
  const auto s2 = make_dense_gaussian(spec, b);
  EXPECT_EQ(s1.theta_star(), s2.theta_star());
  EXPECT_EQ(s1.kind(), SignalKind::DenseGaussian);
  EXPECT_FALSE(s1.is_sparse());
  EXPECT_EQ(s1.support().size(), spec.dim());
  for (std::size_t k = 0; k < spec.dim(); ++k) {
    EXPECT_DOUBLE_EQ(s1.coeffs()[k], s1.theta_star()(static_cast<Eigen::Index>(k)) * std::sqrt(2.0));
  }
}

TEST(SignalBinding, CrossSpecUseIsAnError) {
  const auto sig = make_sparse(spiked16(), {0}, {1.0});
  const auto other = build_ensemble(Spiked{1.5, 0.5, 0.25}, 20);
  EXPECT_EQ(code_of([&] { require_bound(other, sig); }), ErrorCode::DimensionMismatch);
}

TEST(SignalJson, OneBasedSupport) {
  const auto sig = make_sparse(spiked16(), {0, 7}, {1.0, -0.15});
  const auto j = to_json(sig);
  EXPECT_EQ(j.at("kind"), "sparse_fixed");
  EXPECT_EQ(j.at("support"), nlohmann::json({1, 8}));
  EXPECT_EQ(j.at("d"), 64);
  EXPECT_NEAR(j.at("strength").get<double>(), 1.0225, 1e-15);
}
