#include "taskshift/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/QR>

#include "taskshift/error.hpp"

namespace taskshift {

std::string to_string(EstimateKind kind) {
  switch (kind) {
    case EstimateKind::RegressionMNI: return "regression_mni";
    case EstimateKind::ClassificationMNI: return "classification_mni";
    case EstimateKind::Postprocessed: return "postprocessed";
    case EstimateKind::Rescaled: return "rescaled";
    case EstimateKind::Explicit: return "explicit";
  }
  return "unknown";
}

Estimate make_estimate(Vector theta, EstimateKind kind) {
  Estimate est;
  est.theta = std::move(theta);
  est.kind = kind;
  return est;
}

Matrix gram_matrix(const Matrix& X) {
  const auto n = X.rows();
  Matrix A = Matrix::Zero(n, n);
  A.selfadjointView<Eigen::Lower>().rankUpdate(X);
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
  return A;
}

namespace {

struct Attempt {
  Eigen::LLT<Matrix> llt;
  bool ok = false;
  double min_pivot_sq = 0.0;
  double max_pivot_sq = 0.0;
};

Attempt try_factor(const Matrix& A) {
  Attempt at;
  at.llt.compute(A);
  if (at.llt.info() != Eigen::Success) return at;
  const Vector diag = at.llt.matrixLLT().diagonal();
  at.min_pivot_sq = diag.minCoeff() * diag.minCoeff();
  at.max_pivot_sq = diag.maxCoeff() * diag.maxCoeff();
  at.ok = std::isfinite(at.min_pivot_sq) && at.min_pivot_sq > 0.0;
  return at;
}

}  // namespace

GramFactor GramFactor::from_gram(Matrix gram) {
  const auto n = gram.rows();
  if (n < 1 || gram.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "Gram matrix must be square and non-empty");
  }
  const double max_diag = gram.diagonal().maxCoeff();
  const double mean_diag = gram.diagonal().sum() / static_cast<double>(n);
  const double eps = std::numeric_limits<double>::epsilon();

  GramFactor f;
  Attempt first = try_factor(gram);
  if (first.ok && first.min_pivot_sq > static_cast<double>(n) * eps * max_diag) {
    f.llt_ = std::move(first.llt);
    f.condition_ = first.max_pivot_sq / first.min_pivot_sq;
    f.gram_ = std::move(gram);
    return f;
  }

  const double jitter = 1e-10 * mean_diag;
  Matrix jittered = gram;
  jittered.diagonal().array() += jitter;
  Attempt second = try_factor(jittered);
  if (!second.ok || second.min_pivot_sq <= 2.0 * jitter) {
    throw Error(ErrorCode::SingularGram,
                "Gram matrix is singular even after jitter; the design is rank deficient");
  }
  f.llt_ = std::move(second.llt);
  f.condition_ = second.max_pivot_sq / second.min_pivot_sq;
  f.jitter_ = jitter;
  f.gram_ = std::move(gram);
  return f;
}

Vector GramFactor::solve(const Vector& rhs) const {
  if (rhs.size() != gram_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side length differs from the Gram size");
  }
  return llt_.solve(rhs);
}

double GramFactor::trace_inverse() const {
  // Tr(A^-1) = Tr(L^-T L^-1) = ||L^-1||_F^2
  Matrix inv_lower = Matrix::Identity(gram_.rows(), gram_.cols());
  llt_.matrixL().solveInPlace(inv_lower);
  return inv_lower.squaredNorm();
}

GramFactor gram_factorize(const Matrix& X) {
  if (X.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "design has no rows");
  return GramFactor::from_gram(gram_matrix(X));
}

Estimate mni(const Matrix& X, const Vector& labels, const GramFactor& factor, LabelKind kind) {
  if (labels.size() != X.rows() || factor.size() != static_cast<std::size_t>(X.rows())) {
    throw Error(ErrorCode::DimensionMismatch, "labels, design and Gram factor disagree on n");
  }
  const Vector w = factor.solve(labels);
  Estimate est;
  est.theta.noalias() = X.transpose() * w;
  est.kind = kind == LabelKind::Regression ? EstimateKind::RegressionMNI
                                           : EstimateKind::ClassificationMNI;
  est.diagnostics.gram_condition_estimate = factor.condition_estimate();
  est.diagnostics.jitter_used = factor.jitter();
  return est;
}

IndexSet recover_support(const Vector& theta_hat, const RecoveryMode& mode) {
  const auto d = static_cast<std::size_t>(theta_hat.size());
  IndexSet out;
  if (const auto* top = std::get_if<TopT>(&mode)) {
    if (top->t < 1 || top->t > d) {
      throw Error(ErrorCode::ParameterOutOfRange, "TopT needs 1 <= t <= d");
    }
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto by_magnitude = [&](std::size_t a, std::size_t b) {
      const double ma = std::abs(theta_hat(static_cast<Eigen::Index>(a)));
      const double mb = std::abs(theta_hat(static_cast<Eigen::Index>(b)));
      return ma > mb || (ma == mb && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(top->t), idx.end(),
                      by_magnitude);
    out.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(top->t));
    return normalize(out);
  }

  const auto& th = std::get<Threshold>(mode);
  if (th.spec == nullptr || th.spec->dim() != d) {
    throw Error(ErrorCode::DimensionMismatch, "threshold recovery needs the generating spectrum");
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (std::abs(theta_hat(static_cast<Eigen::Index>(j))) >= th.coeff / std::sqrt(th.spec->lambda(j))) {
      out.push_back(j);
    }
  }
  return out;
}

Estimate restricted_least_squares(const FewShotSet& fs, const IndexSet& support) {
  if (support.empty()) throw Error(ErrorCode::EmptySupport, "least squares needs a support");
  const auto d = fs.Xp.cols();
  Matrix restricted(fs.Xp.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] >= static_cast<std::size_t>(d)) {
      throw Error(ErrorCode::IndexOutOfRange, "support index outside the few-shot design");
    }
    restricted.col(static_cast<Eigen::Index>(k)) = fs.Xp.col(static_cast<Eigen::Index>(support[k]));
  }

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(restricted);
  const Vector coef = cod.solve(fs.yp);

  Estimate est;
  est.kind = EstimateKind::Postprocessed;
  est.theta = Vector::Zero(d);
  for (std::size_t k = 0; k < support.size(); ++k) {
    est.theta(static_cast<Eigen::Index>(support[k])) = coef(static_cast<Eigen::Index>(k));
  }
  est.support = support;
  est.diagnostics.underdetermined =
      cod.rank() < static_cast<Eigen::Index>(support.size());
  return est;
}

Estimate rescale_zero_shot(const Vector& theta_hat, const IndexSet& support, double strength) {
  if (support.empty()) throw Error(ErrorCode::EmptySupport, "rescaling needs a support");
  if (!(strength > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "strength must be positive");
  const double factor = std::sqrt(std::numbers::pi * strength / 2.0);
  Estimate est;
  est.kind = EstimateKind::Rescaled;
  est.theta = Vector::Zero(theta_hat.size());
  for (std::size_t j : support) {
    if (j >= static_cast<std::size_t>(theta_hat.size())) {
      throw Error(ErrorCode::IndexOutOfRange, "support index outside theta");
    }
    const auto jj = static_cast<Eigen::Index>(j);
    est.theta(jj) = factor * theta_hat(jj);
  }
  est.support = support;
  return est;
}

}  // namespace taskshift
