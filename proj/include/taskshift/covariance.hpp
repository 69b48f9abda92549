#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "taskshift/types.hpp"

namespace taskshift {

// Two-level spectrum: d = ceil(n^p), spike length s = ceil(n^r), a = n^-q.
struct Spiked {
  double p = 1.5;
  double q = 0.5;
  double r = 0.25;
};

// lambda_j = j^-u * ln^-v(j + 1), d = ceil(n^p).
struct PolyDecay {
  double p = 1.5;
  double u = 0.0;
  double v = 0.0;
};

// Flat spectrum scale * I with d = ceil(n^p).
struct Isotropic {
  double scale = 1.0;
  double p = 1.5;
};

// A caller-supplied spectrum. Inside a CovarianceSpec the lambdas member is
// left empty; the spectrum itself lives in the spec.
struct Explicit {
  std::vector<double> lambdas;
};

using Provenance = std::variant<Spiked, PolyDecay, Isotropic, Explicit>;

std::string provenance_name(const Provenance& provenance);

struct EnsembleOptions {
  std::size_t dimension_cap = 200000;
};

class CovarianceSpec;
CovarianceSpec build_ensemble(const Provenance& provenance, std::size_t n,
                              const EnsembleOptions& options);

/// Diagonal covariance Sigma = diag(lambda_1 >= ... >= lambda_d > 0).
class CovarianceSpec {
 public:
  // Validates positivity and monotonicity.
  static CovarianceSpec from_lambdas(std::vector<double> lambdas,
                                     Provenance provenance = Explicit{});

  std::size_t dim() const noexcept { return lambdas_.size(); }
  std::span<const double> lambdas() const noexcept { return lambdas_; }
  double lambda(std::size_t j) const { return lambdas_.at(j); }
  const Provenance& provenance() const noexcept { return provenance_; }

  // Sample size the spec was built for; 0 for explicit spectra.
  std::size_t built_for_n() const noexcept { return n_; }

  // Spike length s for spiked spectra.
  std::optional<std::size_t> spike_length() const noexcept { return spike_length_; }

  // Tr(Sigma) in compensated summation.
  double trace() const noexcept { return trace_; }

  // Regime tags raised at construction, e.g. "no-benign-overfitting".
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  Vector as_vector() const;

 private:
  CovarianceSpec() = default;
  friend CovarianceSpec build_ensemble(const Provenance&, std::size_t, const EnsembleOptions&);

  std::vector<double> lambdas_;
  Provenance provenance_;
  std::size_t n_ = 0;
  std::optional<std::size_t> spike_length_;
  double trace_ = 0.0;
  std::vector<std::string> warnings_;
};

// ceil(n^exponent), snapping to the nearest integer when n^exponent is within
// floating-point noise of it (16^1.5 must give 64, not 65).
std::size_t ceil_power(std::size_t n, double exponent);

CovarianceSpec build_ensemble(const Provenance& provenance, std::size_t n);

struct EffectiveRankReport {
  std::size_t k = 0;
  double r_k = 0.0;
  double R_k = 0.0;
  std::optional<std::size_t> k_star;  // nullopt encodes "infinite"
  double b = 2.0;
  std::size_t n = 0;
};

/// r_k and R_k at index k plus k* = min{k >= 0 : r_k >= b n}.
EffectiveRankReport effective_ranks(const CovarianceSpec& spec, std::size_t k, std::size_t n,
                                    double b = 2.0);

// Linear scan over suffix sums; nullopt if no k <= d - 1 qualifies.
std::optional<std::size_t> compute_k_star(const CovarianceSpec& spec, std::size_t n,
                                          double b = 2.0);

// The value of k* that the ensemble definition states outright: s when
// q < 1 - r and 0 when q > 1 - r for spiked spectra. nullopt otherwise.
std::optional<std::size_t> construction_k_star(const CovarianceSpec& spec);

/// Sigma with the rows and columns in `excluded` removed. The result is
/// re-sorted non-increasing and tagged Explicit.
CovarianceSpec leave_out_spectrum(const CovarianceSpec& spec, const IndexSet& excluded);

}  // namespace taskshift
