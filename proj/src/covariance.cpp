#include "taskshift/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "taskshift/error.hpp"
#include "taskshift/numeric.hpp"

namespace taskshift {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::ParameterOutOfRange, message);
}

std::vector<double> spiked_lambdas(const Spiked& sp, std::size_t n, std::size_t d,
                                   std::size_t s) {
  const double a = std::pow(static_cast<double>(n), -sp.q);
  const double dd = static_cast<double>(d);
  const double spike = a * dd / static_cast<double>(s);
  const double tail = (1.0 - a) * dd / static_cast<double>(d - s);
  std::vector<double> lambdas(d, tail);
  std::fill(lambdas.begin(), lambdas.begin() + static_cast<std::ptrdiff_t>(s), spike);
  return lambdas;
}

}  // namespace

std::string provenance_name(const Provenance& provenance) {
  return std::visit(Overloaded{
                        [](const Spiked&) { return std::string("spiked"); },
                        [](const PolyDecay&) { return std::string("poly"); },
                        [](const Isotropic&) { return std::string("isotropic"); },
                        [](const Explicit&) { return std::string("explicit"); },
                    },
                    provenance);
}

CovarianceSpec CovarianceSpec::from_lambdas(std::vector<double> lambdas, Provenance provenance) {
  if (lambdas.empty()) throw Error(ErrorCode::ParameterOutOfRange, "empty spectrum");
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (!(lambdas[j] > 0.0) || !std::isfinite(lambdas[j])) {
      throw Error(ErrorCode::ParameterOutOfRange,
                  "eigenvalue " + std::to_string(j) + " is not positive and finite");
    }
    if (j > 0 && lambdas[j] > lambdas[j - 1]) {
      throw Error(ErrorCode::ParameterOutOfRange,
                  "spectrum must be non-increasing (index " + std::to_string(j) + ")");
    }
  }
  if (auto* ex = std::get_if<Explicit>(&provenance)) ex->lambdas.clear();

  CovarianceSpec spec;
  spec.lambdas_ = std::move(lambdas);
  spec.provenance_ = std::move(provenance);
  spec.trace_ = compensated_sum(spec.lambdas_);
  return spec;
}

Vector CovarianceSpec::as_vector() const {
  return Eigen::Map<const Vector>(lambdas_.data(), static_cast<Eigen::Index>(lambdas_.size()));
}

std::size_t ceil_power(std::size_t n, double exponent) {
  const double x = std::pow(static_cast<double>(n), exponent);
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, nearest)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(x));
}

CovarianceSpec build_ensemble(const Provenance& provenance, std::size_t n,
                              const EnsembleOptions& options) {
  require(n >= 2, "ensemble construction needs n >= 2");

  auto dimension_for = [&](double p) {
    require(p > 1.0, "dimension exponent p must exceed 1");
    const double d_real = std::pow(static_cast<double>(n), p);
    if (!(d_real <= static_cast<double>(options.dimension_cap))) {
      std::ostringstream msg;
      msg << "ceil(n^p) = " << d_real << " exceeds the dimension cap "
          << options.dimension_cap;
      throw Error(ErrorCode::DimensionOverflow, msg.str());
    }
    const std::size_t d = ceil_power(n, p);
    if (d > options.dimension_cap) {
      throw Error(ErrorCode::DimensionOverflow, "dimension exceeds the configured cap");
    }
    return d;
  };

  CovarianceSpec spec = std::visit(
      Overloaded{
          [&](const Spiked& sp) {
            require(sp.r >= 0.0 && sp.r < 1.0, "spiked r must lie in [0, 1)");
            require(sp.q > 0.0, "spiked q must be positive");
            require(sp.q < sp.p - sp.r, "spiked ensemble requires q < p - r");
            const std::size_t d = dimension_for(sp.p);
            const std::size_t s = ceil_power(n, sp.r);
            require(s < d, "spike length must be smaller than the dimension");
            auto out = CovarianceSpec::from_lambdas(spiked_lambdas(sp, n, d, s), sp);
            out.spike_length_ = s;
            return out;
          },
          [&](const PolyDecay& pd) {
            require(pd.u >= 0.0 && pd.v >= 0.0, "polynomial decay needs u, v >= 0");
            const std::size_t d = dimension_for(pd.p);
            std::vector<double> lambdas(d);
            for (std::size_t j = 1; j <= d; ++j) {
              const double jj = static_cast<double>(j);
              lambdas[j - 1] = std::pow(jj, -pd.u) * std::pow(std::log(jj + 1.0), -pd.v);
            }
            auto out = CovarianceSpec::from_lambdas(std::move(lambdas), pd);
            if (pd.v == 0.0 && pd.u < 1.0 && pd.p * (1.0 - pd.u) > 1.0) {
              out.warnings_.push_back("no-benign-overfitting");
            }
            return out;
          },
          [&](const Isotropic& iso) {
            require(iso.scale > 0.0, "isotropic scale must be positive");
            const std::size_t d = dimension_for(iso.p);
            return CovarianceSpec::from_lambdas(std::vector<double>(d, iso.scale), iso);
          },
          [&](const Explicit& ex) {
            if (ex.lambdas.size() > options.dimension_cap) {
              throw Error(ErrorCode::DimensionOverflow, "explicit spectrum exceeds the cap");
            }
            return CovarianceSpec::from_lambdas(ex.lambdas, Explicit{});
          },
      },
      provenance);
  spec.n_ = std::holds_alternative<Explicit>(provenance) ? 0 : n;
  return spec;
}

EffectiveRankReport effective_ranks(const CovarianceSpec& spec, std::size_t k, std::size_t n,
                                    double b) {
  const std::size_t d = spec.dim();
  if (k >= d) {
    throw Error(ErrorCode::IndexOutOfRange,
                "k = " + std::to_string(k) + " must be below d = " + std::to_string(d));
  }
  if (!(b > 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "b must exceed 1");
  const auto lambdas = spec.lambdas();
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (std::size_t j = k; j < d; ++j) {
    sum.add(lambdas[j]);
    sum_sq.add(lambdas[j] * lambdas[j]);
  }
  EffectiveRankReport report;
  report.k = k;
  report.r_k = sum.value() / lambdas[k];
  report.R_k = sum.value() * sum.value() / sum_sq.value();
  report.k_star = compute_k_star(spec, n, b);
  report.b = b;
  report.n = n;
  return report;
}

std::optional<std::size_t> compute_k_star(const CovarianceSpec& spec, std::size_t n, double b) {
  if (!(b > 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "b must exceed 1");
  const auto lambdas = spec.lambdas();
  const std::size_t d = lambdas.size();
  // suffix[k] = sum_{j >= k} lambda_j, accumulated from the small end.
  std::vector<double> suffix(d + 1, 0.0);
  CompensatedSum acc;
  for (std::size_t j = d; j-- > 0;) {
    acc.add(lambdas[j]);
    suffix[j] = acc.value();
  }
  const double threshold = b * static_cast<double>(n);
  for (std::size_t k = 0; k < d; ++k) {
    if (suffix[k] / lambdas[k] >= threshold) return k;
  }
  return std::nullopt;
}

std::optional<std::size_t> construction_k_star(const CovarianceSpec& spec) {
  const auto* sp = std::get_if<Spiked>(&spec.provenance());
  if (sp == nullptr || !spec.spike_length()) return std::nullopt;
  if (sp->q < 1.0 - sp->r) return *spec.spike_length();
  if (sp->q > 1.0 - sp->r) return std::size_t{0};
  return std::nullopt;
}

CovarianceSpec leave_out_spectrum(const CovarianceSpec& spec, const IndexSet& excluded) {
  const std::size_t d = spec.dim();
  std::vector<bool> drop(d, false);
  for (std::size_t j : excluded) {
    if (j >= d) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "excluded index " + std::to_string(j) + " outside [0, " + std::to_string(d) + ")");
    }
    drop[j] = true;
  }
  std::vector<double> kept;
  kept.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (!drop[j]) kept.push_back(spec.lambdas()[j]);
  }
  if (kept.empty()) throw Error(ErrorCode::ParameterOutOfRange, "every index was excluded");
  std::sort(kept.begin(), kept.end(), std::greater<>());
  return CovarianceSpec::from_lambdas(std::move(kept), Explicit{});
}

}  // namespace taskshift

namespace taskshift {

CovarianceSpec build_ensemble(const Provenance& provenance, std::size_t n) {
  return build_ensemble(provenance, n, EnsembleOptions{});
}

}  // namespace taskshift
