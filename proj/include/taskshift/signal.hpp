#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "taskshift/covariance.hpp"
#include "taskshift/rng.hpp"
#include "taskshift/types.hpp"

namespace taskshift {

enum class SignalKind { SparseFixed, SparseRademacher, DenseGaussian, Explicit };

std::string to_string(SignalKind kind);

/// Ground truth theta* together with its support S and the normalized
/// coefficients a_j = theta*_j sqrt(lambda_j).
class Signal {
 public:
  const Vector& theta_star() const noexcept { return theta_; }
  const IndexSet& support() const noexcept { return support_; }
  // Aligned with support().
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  // ||Sigma^{1/2} theta*||^2
  double strength() const noexcept { return strength_; }
  SignalKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(theta_.size()); }

  bool is_sparse() const noexcept { return support_.size() < dim(); }
  // Position of j inside support(), or npos.
  std::size_t support_position(std::size_t j) const noexcept;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  friend Signal make_sparse(const CovarianceSpec&, const IndexSet&, const std::vector<double>&);
  friend Signal make_rademacher(const Signal&, Rng&);
  friend Signal make_dense_gaussian(const CovarianceSpec&, Rng&);
  friend Signal make_explicit(const CovarianceSpec&, Vector);

  Vector theta_;
  IndexSet support_;
  std::vector<double> coeffs_;
  double strength_ = 0.0;
  SignalKind kind_ = SignalKind::Explicit;
};

// theta*_j = a_j / sqrt(lambda_j) on the support, zero elsewhere. `support`
// need not be sorted; coeffs follow its order.
Signal make_sparse(const CovarianceSpec& spec, const IndexSet& support,
                   const std::vector<double>& coeffs);

// Flips the sign of every coordinate independently with probability 1/2.
Signal make_rademacher(const Signal& base, Rng& rng);

// theta*_j ~ N(0, 1 / (d lambda_j)); strength is the realized value.
Signal make_dense_gaussian(const CovarianceSpec& spec, Rng& rng);

// Any theta* (including zero); support is the set of nonzero coordinates.
Signal make_explicit(const CovarianceSpec& spec, Vector theta_star);

/// Share of the signal energy carried by support index j: a_j^2 / sum a_k^2.
double beta(const Signal& signal, std::size_t j);

// Throws DimensionMismatch unless the signal was built for a spec of this dimension.
void require_bound(const CovarianceSpec& spec, const Signal& signal);

}  // namespace taskshift
