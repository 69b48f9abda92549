#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Cholesky>

#include "taskshift/covariance.hpp"
#include "taskshift/synth.hpp"
#include "taskshift/types.hpp"

namespace taskshift {

enum class EstimateKind { RegressionMNI, ClassificationMNI, Postprocessed, Rescaled, Explicit };

std::string to_string(EstimateKind kind);

struct EstimateDiagnostics {
  double gram_condition_estimate = std::numeric_limits<double>::quiet_NaN();
  double jitter_used = 0.0;
  bool underdetermined = false;
};

struct Estimate {
  Vector theta;
  EstimateKind kind = EstimateKind::Explicit;
  EstimateDiagnostics diagnostics;
  std::optional<IndexSet> support;  // set for postprocessed and rescaled estimates
};

Estimate make_estimate(Vector theta, EstimateKind kind = EstimateKind::Explicit);

/// Cholesky factor of the Gram matrix A = X X^T (plus jitter on the diagonal
/// when the first attempt fails).
class GramFactor {
 public:
  // Factorizes A directly; used by gram_factorize and by leave-out Grams.
  static GramFactor from_gram(Matrix gram);

  const Matrix& gram() const noexcept { return gram_; }
  Matrix lower() const { return llt_.matrixL(); }
  double jitter() const noexcept { return jitter_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(gram_.rows()); }

  // (max L_ii / min L_ii)^2, a cheap lower estimate of cond(A).
  double condition_estimate() const noexcept { return condition_; }

  // Solves (A + jitter I) w = rhs.
  Vector solve(const Vector& rhs) const;

  // Tr((A + jitter I)^-1) = ||L^-1||_F^2 via n triangular solves.
  double trace_inverse() const;

 private:
  GramFactor() = default;

  Matrix gram_;
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
  double condition_ = 0.0;
};

// A = X X^T, lower triangle computed by a symmetric rank-k update.
Matrix gram_matrix(const Matrix& X);

// Retries once with jitter 1e-10 Tr(A)/n; a jittered factor whose smallest
// pivot is still at the jitter scale means X is rank deficient (SingularGram).
GramFactor gram_factorize(const Matrix& X);

enum class LabelKind { Regression, Classification };

/// Minimum-norm interpolator X^T (X X^T)^-1 labels.
Estimate mni(const Matrix& X, const Vector& labels, const GramFactor& factor, LabelKind kind);

struct TopT {
  std::size_t t = 1;
};

struct Threshold {
  const CovarianceSpec* spec = nullptr;  // spectrum of the generating covariance
  double coeff = 1.0;
};

using RecoveryMode = std::variant<TopT, Threshold>;

/// Support recovery from the classification MNI: the t largest |theta_j|
/// (ties go to the smaller index), or every j with |theta_j| >= coeff / sqrt(lambda_j).
IndexSet recover_support(const Vector& theta_hat, const RecoveryMode& mode);

/// Least squares restricted to `support` on the few-shot set. Falls back to the
/// minimum-norm least-squares solution (flagged underdetermined) when the
/// restricted design is rank deficient.
Estimate restricted_least_squares(const FewShotSet& fs, const IndexSet& support);

/// theta_hat_j * sqrt(pi * strength / 2) on the support, zero elsewhere.
Estimate rescale_zero_shot(const Vector& theta_hat, const IndexSet& support, double strength);

}  // namespace taskshift
