#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "taskshift/covariance.hpp"
#include "taskshift/estimators.hpp"
#include "taskshift/signal.hpp"
#include "taskshift/synth.hpp"
#include "taskshift/types.hpp"

namespace taskshift {

/// Per-estimate risk summary. Vectors indexed by support position follow
/// Signal::support() order.
struct MetricsRecord {
  double risk = 0.0;
  std::vector<double> survival;  // SU_j = theta_j / theta*_j
  double contamination = 0.0;    // sqrt(sum_{j not in S} lambda_j theta_j^2)
  std::optional<double> bias;              // risk of the paired regression MNI
  std::optional<double> task_shift_error;  // (theta_hat - theta_tilde)^T Sigma (theta_hat - theta_tilde)
  // 2 (theta_hat - theta_tilde)^T Sigma (theta_tilde - theta*), the remainder
  // of the two-term split.
  std::optional<double> cross_term;
  std::optional<std::vector<double>> b_empirical;
};

// sum_j lambda_j (theta_j - theta*_j)^2 in compensated summation.
double excess_risk(const CovarianceSpec& spec, const Vector& theta_star, const Vector& theta);
double excess_risk(const CovarianceSpec& spec, const Signal& signal, const Estimate& est);

// (u - v)^T Sigma (w - z) for diagonal Sigma.
double sigma_inner(const CovarianceSpec& spec, const Vector& u, const Vector& v);

struct SurvivalContamination {
  std::vector<double> survival;
  double contamination = 0.0;
};

SurvivalContamination survival_contamination(const CovarianceSpec& spec, const Signal& signal,
                                             const Estimate& est);

// sum_{j in S} a_j^2 (SU_j - 1)^2 + CN^2
double risk_from_survival(const Signal& signal, const SurvivalContamination& sc);

/// risk(theta_hat) split into bias, task-shift error and the cross term. Throws
/// DecompositionViolation when the three terms fail to add up to the risk to
/// 1e-6 relative.
MetricsRecord decompose_lemma2(const CovarianceSpec& spec, const Signal& signal, const Dataset& ds,
                               const Estimate& theta_reg, const Estimate& theta_cls);

// |risk - (bias + task_shift_error)| / risk, the size of the two-term identity's residual.
double lemma2_two_term_residual(const MetricsRecord& rec);

/// lambda_j Tr(A_{-Sbar}^{-1}) for j in S, with Sbar = S u {0, ..., k_star - 1}.
/// A_{-Sbar} is rebuilt from the design with the Sbar columns removed, or,
/// when the full Gram factor is supplied, downdated from it.
std::vector<double> empirical_b(const Dataset& ds, const CovarianceSpec& spec, const Signal& signal,
                                std::size_t k_star, const GramFactor* full = nullptr);

// S u [k_star], sorted.
IndexSet support_with_head(const Signal& signal, std::size_t k_star);

/// min_{j in S} |theta_j| / max_{j not in S} |theta_j|; +inf when the
/// off-support entries are all zero.
double separation_ratio(const Vector& theta, const Signal& signal);

}  // namespace taskshift
