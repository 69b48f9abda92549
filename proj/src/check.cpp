#include "taskshift/check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/QR>

#include "taskshift/covariance.hpp"
#include "taskshift/estimators.hpp"
#include "taskshift/metrics.hpp"
#include "taskshift/signal.hpp"
#include "taskshift/synth.hpp"

namespace taskshift {

namespace {

struct Worst {
  double value = 0.0;
  std::string where;

  void update(double v, const std::string& at) {
    if (!(v <= value)) {  // also catches NaN
      value = v;
      where = at;
    }
  }
};

CheckResult verdict(const std::string& name, const Worst& w, double tol) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "worst %.3e (tol %.0e)%s%s", w.value, tol,
                w.where.empty() ? "" : " at ", w.where.c_str());
  return {name, w.value <= tol, buf};
}

double rel(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

Provenance ensemble_for(std::size_t i) {
  switch (i % 3) {
    case 0: return Spiked{1.5, 0.5, 0.25};
    case 1: return PolyDecay{1.5, 0.25, 0.0};
    default: return Isotropic{1.0, 1.5};
  }
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  Worst interp_reg;
  Worst interp_cls;
  Worst two_term;
  Worst three_term;
  Worst su_cn;
  Worst reconstruct;

  const std::size_t count = std::max<std::size_t>(options.configurations, 1);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = 20 + (count == 1 ? 0 : i * 180 / (count - 1));
    const auto spec = build_ensemble(ensemble_for(i), n);
    const auto sig = make_sparse(spec, {0, 1}, {1.0, -0.5});
    const SeedRecord seed{options.base_seed, i, 0};
    const auto ds = sample_dataset(spec, sig, n, seed);
    const auto factor = gram_factorize(ds.X);
    const auto reg = mni(ds.X, ds.y_reg, factor, LabelKind::Regression);
    const auto cls = mni(ds.X, ds.y_cls, factor, LabelKind::Classification);
    const std::string at = provenance_name(spec.provenance()) + " n=" + std::to_string(n);

    const double ymax = ds.y_reg.cwiseAbs().maxCoeff();
    interp_reg.update((ds.X * reg.theta - ds.y_reg).cwiseAbs().maxCoeff() / std::max(1.0, ymax), at);
    interp_cls.update((ds.X * cls.theta - ds.y_cls).cwiseAbs().maxCoeff(), at);

    const auto rec = decompose_lemma2(spec, sig, ds, reg, cls);
    two_term.update(lemma2_two_term_residual(rec), at);
    three_term.update(rel(rec.risk, *rec.bias + *rec.task_shift_error + *rec.cross_term), at);

    const auto top = recover_support(cls.theta, TopT{sig.support().size()});
    const auto fs = sample_fewshot(spec, sig, 40, 1.0, SeedRecord{options.base_seed, i, 1});
    for (const Estimate& est : {reg, cls, rescale_zero_shot(cls.theta, top, sig.strength()),
                                restricted_least_squares(fs, top)}) {
      const double risk = excess_risk(spec, sig, est);
      const double via = risk_from_survival(sig, survival_contamination(spec, sig, est));
      su_cn.update(rel(risk, via), at + " " + to_string(est.kind));
    }

    const auto noise = dependent_noise(ds);
    reconstruct.update((reconstruct_labels(ds, noise) - ds.y_cls).cwiseAbs().maxCoeff(), at);
  }

  std::vector<CheckResult> out;
  out.push_back(verdict("interpolation (regression MNI)", interp_reg, 1e-8));
  out.push_back(verdict("interpolation (classification MNI)", interp_cls, 1e-8));
  out.push_back(verdict("risk = bias + task-shift error", two_term, 1e-8));
  out.push_back(verdict("risk = bias + task-shift error + cross term", three_term, 1e-8));
  out.push_back(verdict("risk = sum a_j^2 (SU_j - 1)^2 + CN^2", su_cn, 1e-10));
  out.push_back(verdict("labels = y + D y", reconstruct, 1e-12));

  // Pseudo-inverse oracle on small instances, solved by orthogonal decomposition.
  Worst pinv;
  Rng rng(SeedRecord{options.base_seed, 1000, 0});
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + trial % 5);
    const auto d = std::max<Eigen::Index>(n, static_cast<Eigen::Index>(1 + (trial / 5) % 8));
    Matrix X(n, d);
    Vector y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) X(r, c) = rng.normal();
      y(r) = rng.normal();
    }
    const auto est = mni(X, y, gram_factorize(X), LabelKind::Regression);
    const Vector oracle = X.completeOrthogonalDecomposition().pseudoInverse() * y;
    pinv.update((est.theta - oracle).cwiseAbs().maxCoeff() / std::max(1.0, oracle.cwiseAbs().maxCoeff()),
                "n=" + std::to_string(n) + " d=" + std::to_string(d));
  }
  out.push_back(verdict("MNI matches the pseudo-inverse", pinv, 1e-8));

  Worst trace;
  for (std::size_t trial = 0; trial < 5; ++trial) {
    Matrix B(20, 30);
    for (Eigen::Index r = 0; r < B.rows(); ++r) {
      for (Eigen::Index c = 0; c < B.cols(); ++c) B(r, c) = rng.normal();
    }
    const Matrix A = B * B.transpose();
    const double via_solves = GramFactor::from_gram(A).trace_inverse();
    const double via_inverse = A.inverse().trace();
    trace.update(rel(via_solves, via_inverse), "trial " + std::to_string(trial));
  }
  out.push_back(verdict("Tr(A^-1) by solves matches the explicit inverse", trace, 1e-8));
  return out;
}

void print_checks(std::ostream& out, const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
  }
}

}  // namespace taskshift
