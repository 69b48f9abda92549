#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "taskshift/covariance.hpp"
#include "taskshift/types.hpp"

namespace taskshift {

enum class Regime {
  SpikedConsistentIfTuned,
  SpikedInconsistent,
  PolyBenign,
  PolyNonBenign,
  General,
};

std::string to_string(Regime regime);

// A point prediction has lower == upper.
struct RiskInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool is_point() const noexcept { return lower == upper; }
};

struct TheoryPrediction {
  std::optional<RiskInterval> limiting_risk;  // nullopt: divergence regime
  std::vector<double> per_support_su;         // aligned with the coefficient order
  Regime regime = Regime::General;
};

// sqrt(2 / (pi * strength))
double attenuation_constant(double strength);

// kappa * b / (1 + b); b = +inf gives kappa.
double limiting_survival(double b, double strength);

/// sum_j a_j^2 (kappa * b_j / (1 + b_j) - 1)^2.
double limiting_risk_general(const std::vector<double>& b, const std::vector<double>& coeffs,
                             double strength);

/// Spiked limit: in-spike coordinates survive with b_j = inf when q < 1 - r;
/// everything is attenuated to zero when q > 1 - r.
TheoryPrediction limiting_risk_spiked(const Spiked& params, const std::vector<double>& coeffs,
                                      const std::vector<bool>& in_spike, double strength);

enum class PolyBand { Head, Mid, Tail };

/// Polynomial-decay limit. Full attenuation when p(1-u) > 1. Otherwise a
/// bracket over the Head/Mid/Tail split of the support: Head coordinates
/// survive, Tail coordinates vanish, and Mid coordinates contribute the
/// min/max of (kappa c_j - 1)^2. Without c_j values the envelope over
/// c in [0, 1] is used.
TheoryPrediction limiting_risk_poly(const PolyDecay& params, const std::vector<double>& coeffs,
                                    double strength, const std::vector<PolyBand>& partition,
                                    const std::optional<std::vector<double>>& mid_c = std::nullopt);

// n^((1 - p(1-u)) / u)
double poly_band_threshold(const PolyDecay& params, std::size_t n);

/// Band per support index (0-based): Head below threshold/guard, Tail at or
/// above threshold*guard, Mid in between. Compared against the 1-based index.
std::vector<PolyBand> default_poly_partition(const PolyDecay& params, std::size_t n,
                                             const IndexSet& support, double guard = 10.0);

struct Upper {};
struct LowerAnsatz {
  double alpha = 0.0;
  double sigma2 = 0.0;
};
using BoundSide = std::variant<Upper, LowerAnsatz>;

/// Task-shift error bound shapes with every absolute constant set to 1.
/// Upper: n (k*/n + n / R_{k*}) strength. LowerAnsatz: alpha^2 sigma2
/// (sum_{j<=k*} lambda_j + (n / R_{k*}) sum_{j>k*} lambda_j), or alpha^2 sigma2
/// once k* >= n. An infinite k* (nullopt) gives +inf for Upper.
double taskshift_bound_theorem2(const CovarianceSpec& spec, std::size_t n, double strength,
                                const BoundSide& side, std::optional<std::size_t> k_star);

// Same, with k* computed from the spectrum at n (b = 2).
double taskshift_bound_theorem2(const CovarianceSpec& spec, std::size_t n, double strength,
                                const BoundSide& side);

struct BiasBounds {
  double upper = 0.0;
  double lower = 0.0;
};

/// Upper: ||Sigma|| ||theta*||^2 max(sqrt(r0/n), r0/n).
/// Lower: sum_j lambda_j bar_theta_j^2 / (1 + n lambda_j / Tr Sigma)^2.
BiasBounds bias_bounds_lemma3(const CovarianceSpec& spec, std::size_t n, double theta_norm2,
                              const Vector& bar_theta);

/// Finite-n reading of the known-t support recovery conditions. Each ratio
/// compares the left side of a "much smaller than" condition with its right
/// side; values well below 1 mean the condition holds at this n. Ratios are
/// NaN when the condition is vacuous (no q in S^c within the head).
struct RecoveryConditions {
  bool support_in_head = false;  // S within the top k* indices
  double head_ratio = 0.0;       // max_j lambda_j / (min_q lambda_q n^(1-2eps) / t^2)
  double tail_ratio = 0.0;       // max_j lambda_j t^2 n^(1+2eps) lambda_tail_max / (tail trace)^2
};

RecoveryConditions support_recovery_conditions(const CovarianceSpec& spec, std::size_t n,
                                               const IndexSet& support, std::size_t k_star,
                                               double eps = 0.1);

enum class TradeoffRegime {
  BiasPersists,       // k* = 0: regression bias stays bounded away from zero
  TaskShiftPersists,  // k* > 0: task-shift error stays bounded away from zero
};

std::string to_string(TradeoffRegime regime);

// Classified from k* at the largest simulated n, which stands in for its limit.
TradeoffRegime classify_tradeoff(std::size_t k_star_at_largest_n);

/// Regime of a spiked or polynomial ensemble, independent of n.
Regime classify_regime(const Provenance& provenance);

}  // namespace taskshift
