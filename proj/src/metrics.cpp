#include "taskshift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "taskshift/error.hpp"
#include "taskshift/numeric.hpp"

namespace taskshift {

namespace {

void require_length(const CovarianceSpec& spec, const Vector& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != spec.dim()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " length differs from d");
  }
}

void require_sparse(const Signal& signal) {
  if (!signal.is_sparse()) {
    throw Error(ErrorCode::DenseSignal, "survival and contamination need a proper support");
  }
}

}  // namespace

double excess_risk(const CovarianceSpec& spec, const Vector& theta_star, const Vector& theta) {
  require_length(spec, theta_star, "theta*");
  require_length(spec, theta, "theta");
  CompensatedSum acc;
  const auto lam = spec.lambdas();
  for (std::size_t j = 0; j < lam.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double diff = theta(jj) - theta_star(jj);
    acc += lam[j] * diff * diff;
  }
  return acc.value();
}

double excess_risk(const CovarianceSpec& spec, const Signal& signal, const Estimate& est) {
  return excess_risk(spec, signal.theta_star(), est.theta);
}

double sigma_inner(const CovarianceSpec& spec, const Vector& u, const Vector& v) {
  require_length(spec, u, "u");
  require_length(spec, v, "v");
  CompensatedSum acc;
  const auto lam = spec.lambdas();
  for (std::size_t j = 0; j < lam.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    acc += lam[j] * u(jj) * v(jj);
  }
  return acc.value();
}

SurvivalContamination survival_contamination(const CovarianceSpec& spec, const Signal& signal,
                                             const Estimate& est) {
  require_sparse(signal);
  require_length(spec, est.theta, "theta");
  require_bound(spec, signal);

  SurvivalContamination out;
  const auto& support = signal.support();
  out.survival.reserve(support.size());
  for (std::size_t j : support) {
    const auto jj = static_cast<Eigen::Index>(j);
    out.survival.push_back(est.theta(jj) / signal.theta_star()(jj));
  }

  CompensatedSum acc;
  const auto lam = spec.lambdas();
  auto next = support.begin();
  for (std::size_t j = 0; j < lam.size(); ++j) {
    if (next != support.end() && *next == j) {
      ++next;
      continue;
    }
    const double t = est.theta(static_cast<Eigen::Index>(j));
    acc += lam[j] * t * t;
  }
  out.contamination = std::sqrt(acc.value());
  return out;
}

double risk_from_survival(const Signal& signal, const SurvivalContamination& sc) {
  CompensatedSum acc;
  const auto& a = signal.coeffs();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double gap = sc.survival.at(k) - 1.0;
    acc += a[k] * a[k] * gap * gap;
  }
  acc += sc.contamination * sc.contamination;
  return acc.value();
}

MetricsRecord decompose_lemma2(const CovarianceSpec& spec, const Signal& signal, const Dataset& ds,
                               const Estimate& theta_reg, const Estimate& theta_cls) {
  if (ds.label_noise != 0.0) {
    throw Error(ErrorCode::NoisyLabels, "the risk decomposition needs noiseless labels");
  }
  require_bound(spec, signal);
  if (ds.d() != spec.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset dimension differs from the spectrum");
  }

  const Vector& star = signal.theta_star();
  const Vector shift = theta_cls.theta - theta_reg.theta;
  const Vector reg_err = theta_reg.theta - star;

  MetricsRecord rec;
  rec.risk = excess_risk(spec, star, theta_cls.theta);
  rec.bias = excess_risk(spec, star, theta_reg.theta);
  rec.task_shift_error = sigma_inner(spec, shift, shift);
  rec.cross_term = 2.0 * sigma_inner(spec, shift, reg_err);
  if (signal.is_sparse()) {
    const auto sc = survival_contamination(spec, signal, theta_cls);
    rec.survival = sc.survival;
    rec.contamination = sc.contamination;
  }

  const double total = *rec.bias + *rec.task_shift_error + *rec.cross_term;
  const double scale = std::max({rec.risk, *rec.bias + *rec.task_shift_error,
                                 std::numeric_limits<double>::min()});
  if (std::abs(rec.risk - total) > 1e-6 * scale) {
    throw Error(ErrorCode::DecompositionViolation,
                "risk differs from bias + task-shift error + cross term beyond 1e-6 relative");
  }
  return rec;
}

double lemma2_two_term_residual(const MetricsRecord& rec) {
  if (!rec.bias || !rec.task_shift_error) {
    throw Error(ErrorCode::InvalidConfig, "record carries no decomposition");
  }
  const double gap = std::abs(rec.risk - (*rec.bias + *rec.task_shift_error));
  if (rec.risk == 0.0) return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return gap / rec.risk;
}

IndexSet support_with_head(const Signal& signal, std::size_t k_star) {
  IndexSet out = signal.support();
  for (std::size_t j = 0; j < k_star && j < signal.dim(); ++j) out.push_back(j);
  return normalize(out);
}

std::vector<double> empirical_b(const Dataset& ds, const CovarianceSpec& spec, const Signal& signal,
                                std::size_t k_star, const GramFactor* full) {
  require_bound(spec, signal);
  if (ds.d() != spec.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset dimension differs from the spectrum");
  }
  const IndexSet head = support_with_head(signal, k_star);
  if (head.size() >= spec.dim()) {
    throw Error(ErrorCode::ParameterOutOfRange, "S u [k*] must leave at least one column");
  }

  const auto n = static_cast<Eigen::Index>(ds.n());
  Matrix gram;
  if (full != nullptr) {
    if (full->size() != ds.n() || full->jitter() != 0.0) {
      // A jittered full factor would carry its jitter into the leave-out Gram.
      full = nullptr;
    }
  }
  if (full != nullptr) {
    Matrix removed(n, static_cast<Eigen::Index>(head.size()));
    for (std::size_t k = 0; k < head.size(); ++k) {
      removed.col(static_cast<Eigen::Index>(k)) = ds.X.col(static_cast<Eigen::Index>(head[k]));
    }
    gram = full->gram();
    gram.noalias() -= removed * removed.transpose();
  } else {
    Matrix kept(n, static_cast<Eigen::Index>(spec.dim() - head.size()));
    Eigen::Index col = 0;
    auto next = head.begin();
    for (std::size_t j = 0; j < spec.dim(); ++j) {
      if (next != head.end() && *next == j) {
        ++next;
        continue;
      }
      kept.col(col++) = ds.X.col(static_cast<Eigen::Index>(j));
    }
    gram = gram_matrix(kept);
  }

  const double trace = GramFactor::from_gram(std::move(gram)).trace_inverse();
  std::vector<double> out;
  out.reserve(signal.support().size());
  for (std::size_t j : signal.support()) out.push_back(spec.lambda(j) * trace);
  return out;
}

double separation_ratio(const Vector& theta, const Signal& signal) {
  if (!signal.is_sparse()) {
    throw Error(ErrorCode::DenseSignal, "separation ratio needs a proper support");
  }
  if (static_cast<std::size_t>(theta.size()) != signal.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "theta length differs from the signal");
  }
  double min_in = std::numeric_limits<double>::infinity();
  double max_out = 0.0;
  const auto& support = signal.support();
  auto next = support.begin();
  for (std::size_t j = 0; j < signal.dim(); ++j) {
    const double mag = std::abs(theta(static_cast<Eigen::Index>(j)));
    if (next != support.end() && *next == j) {
      ++next;
      min_in = std::min(min_in, mag);
    } else {
      max_out = std::max(max_out, mag);
    }
  }
  if (max_out == 0.0) return std::numeric_limits<double>::infinity();
  return min_in / max_out;
}

}  // namespace taskshift
