#pragma once

#include <cstddef>
#include <iosfwd>

#include "taskshift/covariance.hpp"
#include "taskshift/rng.hpp"
#include "taskshift/signal.hpp"
#include "taskshift/types.hpp"

namespace taskshift {

/// Gaussian design with regression labels y_reg = X theta* and classification
/// labels y_cls = sgn(y_reg), the latter optionally flipped with probability
/// label_noise. sgn(0) is +1.
struct Dataset {
  Matrix X;      // n x d, rows x_i ~ N(0, Sigma)
  Vector y_reg;  // length n
  Vector y_cls;  // length n, entries in {-1, +1}
  double label_noise = 0.0;
  SeedRecord seed;

  std::size_t n() const noexcept { return static_cast<std::size_t>(X.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(X.cols()); }
};

struct FewShotSet {
  Matrix Xp;  // m x d
  Vector yp;  // y'_i = x'_i^T theta* + eps_i
  double sigma2 = 0.0;
  SeedRecord seed;

  std::size_t m() const noexcept { return static_cast<std::size_t>(Xp.rows()); }
};

// d_i = (yhat_i - ytilde_i) / ytilde_i, so that yhat = ytilde + diag .* ytilde.
struct DependentNoise {
  Vector diag;
};

double sign_of(double x) noexcept;

// Design entries are drawn from the Design sub-stream of `seed`; flips from
// LabelFlips, so the noiseless part of a noisy dataset matches the noiseless
// dataset drawn from the same seed.
Dataset sample_dataset(const CovarianceSpec& spec, const Signal& signal, std::size_t n,
                       const SeedRecord& seed, double label_noise = 0.0);

// Builds a Dataset from caller-chosen X and labels (fixtures, ansatz labels).
Dataset make_dataset(Matrix X, Vector y_reg, Vector y_cls);

FewShotSet sample_fewshot(const CovarianceSpec& spec, const Signal& signal, std::size_t m,
                          double sigma2, const SeedRecord& seed);

// m x d Gaussian design with column j scaled by sqrt(lambda_j).
Matrix sample_design(const CovarianceSpec& spec, std::size_t rows, Rng& rng);

DependentNoise dependent_noise(const Dataset& ds);

// ytilde + diag .* ytilde
Vector reconstruct_labels(const Dataset& ds, const DependentNoise& noise);

/// Binary design dump: magic "MNIX0001", then n and d as little-endian u32,
/// then n*d row-major little-endian f64.
void write_design(std::ostream& out, const Matrix& X);
Matrix read_design(std::istream& in);

}  // namespace taskshift
