#include "taskshift/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "taskshift/error.hpp"
#include "taskshift/numeric.hpp"

namespace taskshift {

namespace {

constexpr double kBoundaryTol = 1e-12;

void require_strength(double strength) {
  if (!(strength > 0.0) || !std::isfinite(strength)) {
    throw Error(ErrorCode::ParameterOutOfRange, "signal strength must be positive and finite");
  }
}

double sum_squares(const std::vector<double>& coeffs) {
  CompensatedSum acc;
  for (double a : coeffs) acc += a * a;
  return acc.value();
}

}  // namespace

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::SpikedConsistentIfTuned: return "spiked_consistent_if_tuned";
    case Regime::SpikedInconsistent: return "spiked_inconsistent";
    case Regime::PolyBenign: return "poly_benign";
    case Regime::PolyNonBenign: return "poly_non_benign";
    case Regime::General: return "general";
  }
  return "unknown";
}

std::string to_string(TradeoffRegime regime) {
  return regime == TradeoffRegime::BiasPersists ? "bias_persists" : "task_shift_persists";
}

double attenuation_constant(double strength) {
  require_strength(strength);
  return std::sqrt(2.0 / (std::numbers::pi * strength));
}

double limiting_survival(double b, double strength) {
  if (!(b >= 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "b_j must be non-negative");
  const double ratio = std::isinf(b) ? 1.0 : b / (1.0 + b);
  return attenuation_constant(strength) * ratio;
}

double limiting_risk_general(const std::vector<double>& b, const std::vector<double>& coeffs,
                             double strength) {
  if (b.size() != coeffs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one b_j per support coefficient");
  }
  CompensatedSum acc;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double gap = limiting_survival(b[k], strength) - 1.0;
    acc += coeffs[k] * coeffs[k] * gap * gap;
  }
  return acc.value();
}

TheoryPrediction limiting_risk_spiked(const Spiked& params, const std::vector<double>& coeffs,
                                      const std::vector<bool>& in_spike, double strength) {
  if (in_spike.size() != coeffs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one spike flag per support coefficient");
  }
  const double edge = 1.0 - params.r;
  if (std::abs(params.q - edge) <= kBoundaryTol) {
    throw Error(ErrorCode::BoundaryRegime, "q = 1 - r is not covered by the limit");
  }

  TheoryPrediction pred;
  pred.per_support_su.assign(coeffs.size(), 0.0);
  if (params.q > edge) {
    pred.regime = Regime::SpikedInconsistent;
    const double total = sum_squares(coeffs);
    pred.limiting_risk = RiskInterval{total, total};
    return pred;
  }

  pred.regime = Regime::SpikedConsistentIfTuned;
  const double kappa = attenuation_constant(strength);
  CompensatedSum acc;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const double a2 = coeffs[k] * coeffs[k];
    if (in_spike[k]) {
      pred.per_support_su[k] = kappa;
      acc += a2 * (kappa - 1.0) * (kappa - 1.0);
    } else {
      acc += a2;
    }
  }
  pred.limiting_risk = RiskInterval{acc.value(), acc.value()};
  return pred;
}

double poly_band_threshold(const PolyDecay& params, std::size_t n) {
  if (!(params.u > 0.0)) {
    throw Error(ErrorCode::UnsupportedRegime, "band threshold needs u > 0");
  }
  const double exponent = (1.0 - params.p * (1.0 - params.u)) / params.u;
  return std::pow(static_cast<double>(n), exponent);
}

std::vector<PolyBand> default_poly_partition(const PolyDecay& params, std::size_t n,
                                             const IndexSet& support, double guard) {
  if (!(guard >= 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "guard band must be >= 1");
  const double threshold = poly_band_threshold(params, n);
  std::vector<PolyBand> out;
  out.reserve(support.size());
  for (std::size_t j : support) {
    const double index = static_cast<double>(j + 1);
    if (index <= threshold / guard) {
      out.push_back(PolyBand::Head);
    } else if (index >= threshold * guard) {
      out.push_back(PolyBand::Tail);
    } else {
      out.push_back(PolyBand::Mid);
    }
  }
  return out;
}

TheoryPrediction limiting_risk_poly(const PolyDecay& params, const std::vector<double>& coeffs,
                                    double strength, const std::vector<PolyBand>& partition,
                                    const std::optional<std::vector<double>>& mid_c) {
  const bool decaying = params.v == 0.0 && params.u >= 0.0 && params.u < 1.0;
  const bool log_benign = params.u == 1.0 && params.v == 2.0;
  if (!decaying && !log_benign) {
    throw Error(ErrorCode::UnsupportedRegime,
                "the polynomial limit covers v = 0 with u in [0, 1), and u = 1 with v = 2");
  }
  const double growth = params.p * (1.0 - params.u);
  if (std::abs(growth - 1.0) <= kBoundaryTol) {
    throw Error(ErrorCode::UnsupportedRegime, "p (1 - u) = 1 is not covered by the limit");
  }

  TheoryPrediction pred;
  pred.per_support_su.assign(coeffs.size(), 0.0);
  if (growth > 1.0) {
    pred.regime = Regime::PolyNonBenign;
    const double total = sum_squares(coeffs);
    pred.limiting_risk = RiskInterval{total, total};
    return pred;
  }

  if (partition.size() != coeffs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one band per support coefficient");
  }
  pred.regime = Regime::PolyBenign;
  const double kappa = attenuation_constant(strength);
  auto mid_loss = [&](double c) { return (kappa * c - 1.0) * (kappa * c - 1.0); };

  double mid_lo = std::numeric_limits<double>::infinity();
  double mid_hi = -std::numeric_limits<double>::infinity();
  if (mid_c) {
    std::size_t mid_seen = 0;
    for (std::size_t k = 0; k < partition.size(); ++k) {
      if (partition[k] != PolyBand::Mid) continue;
      if (mid_seen >= mid_c->size()) {
        throw Error(ErrorCode::DimensionMismatch, "one c_j per mid-band coefficient");
      }
      const double c = (*mid_c)[mid_seen++];
      mid_lo = std::min(mid_lo, mid_loss(c));
      mid_hi = std::max(mid_hi, mid_loss(c));
    }
  } else {
    // (kappa c - 1)^2 over c in [0, 1]: minimum at c = min(1, 1/kappa).
    mid_lo = kappa >= 1.0 ? 0.0 : mid_loss(1.0);
    mid_hi = std::max(mid_loss(0.0), mid_loss(1.0));
  }

  CompensatedSum lo;
  CompensatedSum hi;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const double a2 = coeffs[k] * coeffs[k];
    switch (partition[k]) {
      case PolyBand::Head:
        pred.per_support_su[k] = kappa;
        lo += a2 * mid_loss(1.0);
        hi += a2 * mid_loss(1.0);
        break;
      case PolyBand::Mid:
        pred.per_support_su[k] = std::numeric_limits<double>::quiet_NaN();
        lo += a2 * mid_lo;
        hi += a2 * mid_hi;
        break;
      case PolyBand::Tail:
        lo += a2;
        hi += a2;
        break;
    }
  }
  pred.limiting_risk = RiskInterval{lo.value(), hi.value()};
  return pred;
}

double taskshift_bound_theorem2(const CovarianceSpec& spec, std::size_t n, double strength,
                                const BoundSide& side, std::optional<std::size_t> k_star) {
  if (n < 1) throw Error(ErrorCode::ParameterOutOfRange, "n must be positive");
  const double nn = static_cast<double>(n);

  if (const auto* lower = std::get_if<LowerAnsatz>(&side)) {
    const double scale = lower->alpha * lower->alpha * lower->sigma2;
    if (!k_star || *k_star >= n) return scale;
    const auto ranks = effective_ranks(spec, *k_star, n);
    CompensatedSum head;
    CompensatedSum tail;
    const auto lam = spec.lambdas();
    for (std::size_t j = 0; j < lam.size(); ++j) (j < *k_star ? head : tail) += lam[j];
    return scale * (head.value() + nn / ranks.R_k * tail.value());
  }

  if (!k_star || *k_star >= spec.dim()) return std::numeric_limits<double>::infinity();
  const auto ranks = effective_ranks(spec, *k_star, n);
  return nn * (static_cast<double>(*k_star) / nn + nn / ranks.R_k) * strength;
}

double taskshift_bound_theorem2(const CovarianceSpec& spec, std::size_t n, double strength,
                                const BoundSide& side) {
  return taskshift_bound_theorem2(spec, n, strength, side, compute_k_star(spec, n));
}

BiasBounds bias_bounds_lemma3(const CovarianceSpec& spec, std::size_t n, double theta_norm2,
                              const Vector& bar_theta) {
  if (n < 1) throw Error(ErrorCode::ParameterOutOfRange, "n must be positive");
  if (static_cast<std::size_t>(bar_theta.size()) != spec.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "bar_theta length differs from d");
  }
  const double nn = static_cast<double>(n);
  const double top = spec.lambda(0);
  const double trace = spec.trace();
  const double r0 = trace / top;

  BiasBounds out;
  out.upper = top * theta_norm2 * std::max(std::sqrt(r0 / nn), r0 / nn);

  CompensatedSum acc;
  const auto lam = spec.lambdas();
  for (std::size_t j = 0; j < lam.size(); ++j) {
    const double t = bar_theta(static_cast<Eigen::Index>(j));
    const double denom = 1.0 + nn * lam[j] / trace;
    acc += lam[j] * t * t / (denom * denom);
  }
  out.lower = acc.value();
  return out;
}

RecoveryConditions support_recovery_conditions(const CovarianceSpec& spec, std::size_t n,
                                               const IndexSet& support, std::size_t k_star,
                                               double eps) {
  if (support.empty()) throw Error(ErrorCode::EmptySupport, "conditions need a support");
  if (k_star >= spec.dim()) throw Error(ErrorCode::IndexOutOfRange, "k* must leave a tail");
  const double nn = static_cast<double>(n);
  const double t2 = static_cast<double>(support.size() * support.size());

  RecoveryConditions out;
  out.support_in_head = support.back() < k_star;
  double max_support = 0.0;
  for (std::size_t j : support) max_support = std::max(max_support, spec.lambda(j));

  double min_head_off = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < k_star; ++q) {
    if (!std::binary_search(support.begin(), support.end(), q)) {
      min_head_off = std::min(min_head_off, spec.lambda(q));
    }
  }
  out.head_ratio = std::isinf(min_head_off)
                       ? std::numeric_limits<double>::quiet_NaN()
                       : max_support * t2 / (min_head_off * std::pow(nn, 1.0 - 2.0 * eps));

  CompensatedSum tail;
  const auto lam = spec.lambdas();
  for (std::size_t j = k_star; j < lam.size(); ++j) tail += lam[j];
  const double tail_top = spec.lambda(k_star);
  out.tail_ratio = max_support * t2 * std::pow(nn, 1.0 + 2.0 * eps) * tail_top /
                   (tail.value() * tail.value());
  return out;
}

TradeoffRegime classify_tradeoff(std::size_t k_star_at_largest_n) {
  return k_star_at_largest_n == 0 ? TradeoffRegime::BiasPersists
                                  : TradeoffRegime::TaskShiftPersists;
}

Regime classify_regime(const Provenance& provenance) {
  if (const auto* s = std::get_if<Spiked>(&provenance)) {
    return s->q < 1.0 - s->r ? Regime::SpikedConsistentIfTuned : Regime::SpikedInconsistent;
  }
  if (const auto* p = std::get_if<PolyDecay>(&provenance)) {
    return p->p * (1.0 - p->u) > 1.0 ? Regime::PolyNonBenign : Regime::PolyBenign;
  }
  if (const auto* iso = std::get_if<Isotropic>(&provenance)) {
    return iso->p > 1.0 ? Regime::PolyNonBenign : Regime::PolyBenign;
  }
  return Regime::General;
}

}  // namespace taskshift
