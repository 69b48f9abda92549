#include "taskshift/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taskshift/error.hpp"
#include "taskshift/numeric.hpp"

namespace taskshift {

std::string to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::SparseFixed: return "sparse_fixed";
    case SignalKind::SparseRademacher: return "sparse_rademacher";
    case SignalKind::DenseGaussian: return "dense_gaussian";
    case SignalKind::Explicit: return "explicit";
  }
  return "unknown";
}

std::size_t Signal::support_position(std::size_t j) const noexcept {
  auto it = std::lower_bound(support_.begin(), support_.end(), j);
  if (it == support_.end() || *it != j) return npos;
  return static_cast<std::size_t>(it - support_.begin());
}

namespace {

double strength_of(const std::vector<double>& coeffs) {
  CompensatedSum acc;
  for (double a : coeffs) acc.add(a * a);
  return acc.value();
}

}  // namespace

Signal make_sparse(const CovarianceSpec& spec, const IndexSet& support,
                   const std::vector<double>& coeffs) {
  if (support.size() != coeffs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "support and coefficient counts differ");
  }
  const std::size_t d = spec.dim();
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return support[x] < support[y]; });

  Signal sig;
  sig.kind_ = SignalKind::SparseFixed;
  sig.theta_ = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t pos : order) {
    const std::size_t j = support[pos];
    const double a = coeffs[pos];
    if (j >= d) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "support index " + std::to_string(j) + " outside dimension " + std::to_string(d));
    }
    if (!sig.support_.empty() && sig.support_.back() == j) {
      throw Error(ErrorCode::IndexOutOfRange, "duplicate support index " + std::to_string(j));
    }
    if (a == 0.0 || !std::isfinite(a)) {
      throw Error(ErrorCode::ZeroCoefficient,
                  "coefficient for index " + std::to_string(j) + " must be nonzero");
    }
    sig.support_.push_back(j);
    sig.coeffs_.push_back(a);
    sig.theta_(static_cast<Eigen::Index>(j)) = a / std::sqrt(spec.lambda(j));
  }
  sig.strength_ = strength_of(sig.coeffs_);
  return sig;
}

Signal make_rademacher(const Signal& base, Rng& rng) {
  Signal sig = base;
  if (base.kind_ != SignalKind::DenseGaussian) sig.kind_ = SignalKind::SparseRademacher;
  // One coin per coordinate (not per support entry) so the flip pattern of a
  // coordinate does not depend on which other coordinates are nonzero.
  for (Eigen::Index j = 0; j < sig.theta_.size(); ++j) {
    if (rng.bernoulli(0.5)) sig.theta_(j) = -sig.theta_(j);
  }
  for (std::size_t pos = 0; pos < sig.support_.size(); ++pos) {
    const auto j = static_cast<Eigen::Index>(sig.support_[pos]);
    if ((sig.theta_(j) < 0.0) != (base.theta_(j) < 0.0)) sig.coeffs_[pos] = -sig.coeffs_[pos];
  }
  return sig;
}

Signal make_dense_gaussian(const CovarianceSpec& spec, Rng& rng) {
  const std::size_t d = spec.dim();
  Signal sig;
  sig.kind_ = SignalKind::DenseGaussian;
  sig.theta_.resize(static_cast<Eigen::Index>(d));
  sig.support_.resize(d);
  sig.coeffs_.resize(d);
  const double dd = static_cast<double>(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double lam = spec.lambda(j);
    const double theta = rng.normal() / std::sqrt(dd * lam);
    sig.theta_(static_cast<Eigen::Index>(j)) = theta;
    sig.support_[j] = j;
    sig.coeffs_[j] = theta * std::sqrt(lam);
  }
  sig.strength_ = strength_of(sig.coeffs_);
  return sig;
}

Signal make_explicit(const CovarianceSpec& spec, Vector theta_star) {
  if (static_cast<std::size_t>(theta_star.size()) != spec.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "theta* length differs from the spec dimension");
  }
  Signal sig;
  sig.kind_ = SignalKind::Explicit;
  for (Eigen::Index j = 0; j < theta_star.size(); ++j) {
    if (theta_star(j) != 0.0) {
      sig.support_.push_back(static_cast<std::size_t>(j));
      sig.coeffs_.push_back(theta_star(j) * std::sqrt(spec.lambda(static_cast<std::size_t>(j))));
    }
  }
  sig.theta_ = std::move(theta_star);
  sig.strength_ = strength_of(sig.coeffs_);
  return sig;
}

double beta(const Signal& signal, std::size_t j) {
  const std::size_t pos = signal.support_position(j);
  if (pos == Signal::npos) {
    throw Error(ErrorCode::IndexNotInSupport, "index " + std::to_string(j) + " not in support");
  }
  const double a = signal.coeffs()[pos];
  return a * a / signal.strength();
}

void require_bound(const CovarianceSpec& spec, const Signal& signal) {
  if (spec.dim() != signal.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "signal of dimension " + std::to_string(signal.dim()) +
                    " used with a spec of dimension " + std::to_string(spec.dim()));
  }
}

}  // namespace taskshift
