#include "taskshift/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "taskshift/error.hpp"
#include "taskshift/estimators.hpp"
#include "taskshift/metrics.hpp"
#include "taskshift/synth.hpp"
#include "taskshift/theory.hpp"

namespace taskshift {

using nlohmann::json;

std::string to_string(SweepKind kind) { return kind == SweepKind::N ? "n" : "m"; }

std::size_t RowSchema::index(const std::string& name) const {
  const auto it = std::find(metrics.begin(), metrics.end(), name);
  if (it == metrics.end()) throw Error(ErrorCode::InvalidConfig, "no metric column " + name);
  return static_cast<std::size_t>(it - metrics.begin());
}

bool RowSchema::contains(const std::string& name) const {
  return std::find(metrics.begin(), metrics.end(), name) != metrics.end();
}

RowSchema row_schema(const ExperimentConfig& cfg) {
  RowSchema schema;
  auto& m = schema.metrics;
  const bool sparse = !cfg.signal.dense_gaussian;
  if (sparse) {
    IndexSet sorted = cfg.signal.support;
    normalize(sorted);
    for (std::size_t j : sorted) schema.support_labels.push_back(j + 1);
  }
  auto per_support = [&](const std::string& prefix) {
    for (std::size_t label : schema.support_labels) m.push_back(prefix + std::to_string(label));
  };

  m.insert(m.end(), {"d", "spike_length", "k_star", "k_star_computed", "strength", "risk", "bias",
                     "task_shift_error", "cross_term", "two_term_residual"});
  if (sparse) {
    m.push_back("contamination");
    per_support("su_");
    per_support("abs_theta_");
    m.insert(m.end(), {"max_abs_head_offsupport", "max_abs_tail_offsupport", "separation_ratio",
                       "support_recovered", "recovered_size"});
    per_support("b_emp_");
    per_support("pred_su_");
    per_support("pred_su_emp_");
  }
  m.insert(m.end(), {"pred_limit_risk", "pred_limit_risk_lo", "pred_limit_risk_hi",
                     "pred_limit_risk_emp", "bound_upper_ts", "bound_lower_ts", "ts_ansatz",
                     "ansatz_alpha", "ts_ratio_upper", "bias_lb", "bias_ub", "recovery_head_ratio",
                     "recovery_tail_ratio", "assumption2_ok", "gram_condition", "jitter",
                     "underdetermined"});
  return schema;
}

std::optional<double> value(const RowSchema& schema, const ResultRow& row, const std::string& name) {
  return row.values.at(schema.index(name));
}

namespace {

constexpr std::uint64_t kTagTrain = 0x7472;
constexpr std::uint64_t kTagFewShotN = 0x664e;
constexpr std::uint64_t kTagFewShotM = 0x664d;

using Columns = std::vector<std::pair<std::string, std::optional<double>>>;

double flag(bool b) { return b ? 1.0 : 0.0; }

std::optional<double> finite_or_none(double x) {
  return std::isnan(x) ? std::nullopt : std::optional<double>(x);
}

ResultRow blank_row(const RowSchema& schema, SweepKind sweep, std::size_t n,
                    std::optional<std::size_t> m, std::size_t draw, EstimatorId id) {
  ResultRow row;
  row.sweep = sweep;
  row.n = n;
  row.m = m;
  row.draw = draw;
  row.estimator = id;
  row.values.assign(schema.metrics.size(), std::nullopt);
  return row;
}

void apply(const RowSchema& schema, ResultRow& row, const Columns& cols) {
  for (const auto& [name, v] : cols) {
    if (schema.contains(name)) row.values[schema.index(name)] = v;
  }
}

std::string label(const std::string& prefix, std::size_t j) { return prefix + std::to_string(j + 1); }

struct KStar {
  std::optional<std::size_t> used;      // construction value when the ensemble states one
  std::optional<std::size_t> computed;  // min{k : r_k >= b n}
};

KStar resolve_k_star(const ExperimentConfig& cfg, const CovarianceSpec& spec, std::size_t n) {
  KStar ks;
  ks.computed = compute_k_star(spec, n, cfg.k_star_b);
  const auto stated = construction_k_star(spec);
  ks.used = stated ? stated : ks.computed;
  return ks;
}

std::optional<TheoryPrediction> predict(const CovarianceSpec& spec, const Signal& sig, std::size_t n) {
  if (!sig.is_sparse()) return std::nullopt;
  const auto& coeffs = sig.coeffs();
  try {
    if (const auto* sp = std::get_if<Spiked>(&spec.provenance())) {
      std::vector<bool> in_spike;
      const std::size_t s = spec.spike_length().value_or(0);
      for (std::size_t j : sig.support()) in_spike.push_back(j < s);
      return limiting_risk_spiked(*sp, coeffs, in_spike, sig.strength());
    }
    if (const auto* poly = std::get_if<PolyDecay>(&spec.provenance())) {
      std::vector<PolyBand> bands;
      if (poly->p * (1.0 - poly->u) < 1.0) bands = default_poly_partition(*poly, n, sig.support());
      return limiting_risk_poly(*poly, coeffs, sig.strength(), bands);
    }
    if (const auto* iso = std::get_if<Isotropic>(&spec.provenance())) {
      // A flat spectrum is the u = 0 member of the polynomial family.
      return limiting_risk_poly(PolyDecay{iso->p, 0.0, 0.0}, coeffs, sig.strength(), {});
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BoundaryRegime && e.code() != ErrorCode::UnsupportedRegime) throw;
  }
  return std::nullopt;
}

struct Cell {
  CovarianceSpec spec;
  Signal signal;
  Dataset ds;
  GramFactor factor;
  Estimate reg;
  Estimate cls;
  KStar ks;
};

Cell build_cell(const ExperimentConfig& cfg, std::size_t n, std::size_t draw) {
  auto spec = build_ensemble(cfg.ensemble, n, EnsembleOptions{cfg.dimension_cap});
  const SeedRecord seed = cell_seed(cfg, n, draw);
  Rng signal_rng(substream(seed, StreamPurpose::Signal));
  auto signal = build_signal(cfg.signal, spec, signal_rng);
  auto ds = sample_dataset(spec, signal, n, seed, cfg.label_noise);
  auto factor = gram_factorize(ds.X);
  auto reg = mni(ds.X, ds.y_reg, factor, LabelKind::Regression);
  auto cls = mni(ds.X, ds.y_cls, factor, LabelKind::Classification);
  auto ks = resolve_k_star(cfg, spec, n);
  return Cell{std::move(spec), std::move(signal), std::move(ds), std::move(factor),
              std::move(reg),  std::move(cls),    ks};
}

Columns basic_columns(const Cell& c) {
  auto to_opt = [](std::optional<std::size_t> k) {
    return k ? std::optional<double>(static_cast<double>(*k)) : std::nullopt;
  };
  return {
      {"d", static_cast<double>(c.spec.dim())},
      {"spike_length", to_opt(c.spec.spike_length())},
      {"k_star", to_opt(c.ks.used)},
      {"k_star_computed", to_opt(c.ks.computed)},
      {"strength", c.signal.strength()},
      {"gram_condition", finite_or_none(c.factor.condition_estimate())},
      {"jitter", c.factor.jitter()},
  };
}

// Columns shared by every estimator row of an n-sweep cell.
Columns cell_columns(const ExperimentConfig& cfg, const Cell& c, std::size_t n) {
  Columns cols = basic_columns(c);
  const auto& spec = c.spec;
  const auto& sig = c.signal;
  const double t = static_cast<double>(sig.support().size());
  cols.emplace_back("assumption2_ok", flag(t < std::pow(static_cast<double>(n), 0.4)));

  if (sig.is_sparse() && c.ks.used &&
      support_with_head(sig, *c.ks.used).size() < spec.dim()) {
    const auto b = empirical_b(c.ds, spec, sig, *c.ks.used, &c.factor);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const std::size_t j = sig.support()[k];
      cols.emplace_back(label("b_emp_", j), b[k]);
      cols.emplace_back(label("pred_su_emp_", j), limiting_survival(b[k], sig.strength()));
    }
    cols.emplace_back("pred_limit_risk_emp", limiting_risk_general(b, sig.coeffs(), sig.strength()));
  }
  if (sig.is_sparse() && c.ks.used && *c.ks.used < spec.dim()) {
    const auto rc = support_recovery_conditions(spec, n, sig.support(), *c.ks.used);
    cols.emplace_back("recovery_head_ratio", finite_or_none(rc.head_ratio));
    cols.emplace_back("recovery_tail_ratio", rc.tail_ratio);
  }

  // Lower-bound sigma^2 = min_j E theta*_j^2: zero for sparse signals.
  const double sigma2 = sig.is_sparse() ? 0.0 : 1.0 / (static_cast<double>(spec.dim()) * spec.lambda(0));
  const double upper = taskshift_bound_theorem2(spec, n, sig.strength(), Upper{}, c.ks.used);
  cols.emplace_back("bound_upper_ts", upper);

  if (cfg.ansatz) {
    // Constant-magnitude fixture: regression labels R * sgn(y), so D = alpha I
    // with alpha = 1/R - 1.
    const Vector signs = c.ds.y_reg.unaryExpr([](double y) { return sign_of(y); });
    const double R = c.ds.y_reg.cwiseAbs().mean();
    const Estimate cls0 = mni(c.ds.X, signs, c.factor, LabelKind::Classification);
    const Estimate reg0 = mni(c.ds.X, Vector(R * signs), c.factor, LabelKind::Regression);
    const Vector shift = cls0.theta - reg0.theta;
    const double ts = sigma_inner(spec, shift, shift);
    const double alpha = 1.0 / R - 1.0;
    cols.emplace_back("ts_ansatz", ts);
    cols.emplace_back("ansatz_alpha", alpha);
    cols.emplace_back("ts_ratio_upper", ts / upper);
    cols.emplace_back("bound_lower_ts", taskshift_bound_theorem2(
                                            spec, n, sig.strength(), LowerAnsatz{alpha, sigma2}, c.ks.used));
  }

  const Vector& star = sig.theta_star();
  const auto bias = bias_bounds_lemma3(spec, n, star.squaredNorm(), star.cwiseAbs());
  cols.emplace_back("bias_lb", bias.lower);
  cols.emplace_back("bias_ub", bias.upper);
  return cols;
}

Columns estimate_columns(const Cell& c, const Estimate& est, const std::optional<IndexSet>& recovered) {
  Columns cols;
  const auto& sig = c.signal;
  cols.emplace_back("risk", excess_risk(c.spec, sig, est));
  if (est.support) cols.emplace_back("underdetermined", flag(est.diagnostics.underdetermined));
  if (!sig.is_sparse()) return cols;

  const auto sc = survival_contamination(c.spec, sig, est);
  cols.emplace_back("contamination", sc.contamination);
  for (std::size_t k = 0; k < sig.support().size(); ++k) {
    const std::size_t j = sig.support()[k];
    cols.emplace_back(label("su_", j), sc.survival[k]);
    cols.emplace_back(label("abs_theta_", j), std::abs(est.theta(static_cast<Eigen::Index>(j))));
  }
  const std::size_t head = c.ks.used.value_or(0);
  double max_head = 0.0;
  double max_tail = 0.0;
  bool any_head = false;
  for (std::size_t j = 0; j < sig.dim(); ++j) {
    if (sig.support_position(j) != Signal::npos) continue;
    const double mag = std::abs(est.theta(static_cast<Eigen::Index>(j)));
    if (j < head) {
      any_head = true;
      max_head = std::max(max_head, mag);
    } else {
      max_tail = std::max(max_tail, mag);
    }
  }
  cols.emplace_back("max_abs_head_offsupport", any_head ? std::optional<double>(max_head) : std::nullopt);
  cols.emplace_back("max_abs_tail_offsupport", max_tail);
  cols.emplace_back("separation_ratio", separation_ratio(est.theta, sig));
  if (recovered) {
    cols.emplace_back("support_recovered", flag(*recovered == sig.support()));
    cols.emplace_back("recovered_size", static_cast<double>(recovered->size()));
  }
  return cols;
}

// Algorithm 2, or the zero estimate when thresholding kept nothing.
Estimate postprocess(const FewShotSet& fs, const IndexSet& support, std::size_t d) {
  if (support.empty()) {
    Estimate est = make_estimate(Vector::Zero(static_cast<Eigen::Index>(d)), EstimateKind::Postprocessed);
    est.support = support;
    est.diagnostics.underdetermined = true;
    return est;
  }
  return restricted_least_squares(fs, support);
}

std::vector<ResultRow> n_cell(const ExperimentConfig& cfg, const RowSchema& schema, std::size_t n,
                              std::size_t draw) {
  const Cell c = build_cell(cfg, n, draw);
  const Columns shared = cell_columns(cfg, c, n);
  const auto& sig = c.signal;

  std::optional<IndexSet> top;
  if (sig.is_sparse()) top = recover_support(c.cls.theta, TopT{sig.support().size()});
  std::optional<FewShotSet> fs;
  if (cfg.needs_fewshot()) {
    fs = sample_fewshot(c.spec, sig, cfg.fewshot_m, cfg.fewshot_sigma2,
                        fewshot_seed(cfg, SweepKind::N, n, draw));
  }

  std::vector<ResultRow> rows;
  auto ids = cfg.estimators;
  std::sort(ids.begin(), ids.end());
  for (EstimatorId id : ids) {
    ResultRow row = blank_row(schema, SweepKind::N, n, std::nullopt, draw, id);
    apply(schema, row, shared);
    switch (id) {
      case EstimatorId::RegMni: {
        apply(schema, row, estimate_columns(c, c.reg, std::nullopt));
        apply(schema, row, {{"bias", value(schema, row, "risk")}});
        break;
      }
      case EstimatorId::ClsMni: {
        apply(schema, row, estimate_columns(c, c.cls, top));
        if (cfg.label_noise == 0.0) {
          const auto rec = decompose_lemma2(c.spec, sig, c.ds, c.reg, c.cls);
          apply(schema, row,
                {{"bias", rec.bias},
                 {"task_shift_error", rec.task_shift_error},
                 {"cross_term", rec.cross_term},
                 {"two_term_residual", lemma2_two_term_residual(rec)}});
        }
        if (const auto pred = predict(c.spec, sig, n)) {
          if (pred->limiting_risk) {
            const auto& r = *pred->limiting_risk;
            apply(schema, row, {{"pred_limit_risk_lo", r.lower}, {"pred_limit_risk_hi", r.upper}});
            if (r.is_point()) apply(schema, row, {{"pred_limit_risk", r.lower}});
          }
          for (std::size_t k = 0; k < pred->per_support_su.size(); ++k) {
            apply(schema, row, {{label("pred_su_", sig.support()[k]),
                                 finite_or_none(pred->per_support_su[k])}});
          }
        }
        break;
      }
      case EstimatorId::ToptPost:
        apply(schema, row, estimate_columns(c, postprocess(*fs, *top, sig.dim()), top));
        break;
      case EstimatorId::ThresholdPost: {
        const auto kept = recover_support(c.cls.theta, Threshold{&c.spec, cfg.threshold_coeff});
        apply(schema, row, estimate_columns(c, postprocess(*fs, kept, sig.dim()), kept));
        break;
      }
      case EstimatorId::Rescaled:
        apply(schema, row,
              estimate_columns(c, rescale_zero_shot(c.cls.theta, *top, sig.strength()), top));
        break;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EstimatorId> m_estimators(const ExperimentConfig& cfg) {
  std::vector<EstimatorId> ids;
  for (auto id : {EstimatorId::ToptPost, EstimatorId::ThresholdPost}) {
    if (cfg.has(id)) ids.push_back(id);
  }
  return ids;
}

std::vector<ResultRow> m_cell(const ExperimentConfig& cfg, const RowSchema& schema, std::size_t draw) {
  const std::size_t n = cfg.fixed_n_for_m_sweep;
  const Cell c = build_cell(cfg, n, draw);
  const Columns shared = basic_columns(c);
  const auto& sig = c.signal;
  const IndexSet top = recover_support(c.cls.theta, TopT{sig.support().size()});
  const IndexSet kept = recover_support(c.cls.theta, Threshold{&c.spec, cfg.threshold_coeff});

  std::vector<ResultRow> rows;
  for (std::size_t m : cfg.m_grid) {
    const auto fs = sample_fewshot(c.spec, sig, m, cfg.fewshot_sigma2,
                                   fewshot_seed(cfg, SweepKind::M, m, draw));
    for (EstimatorId id : m_estimators(cfg)) {
      const IndexSet& support = id == EstimatorId::ToptPost ? top : kept;
      ResultRow row = blank_row(schema, SweepKind::M, n, m, draw, id);
      apply(schema, row, shared);
      apply(schema, row, estimate_columns(c, postprocess(fs, support, sig.dim()), support));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string context(SweepKind sweep, std::size_t n, std::size_t draw) {
  return to_string(sweep) + "-sweep cell n=" + std::to_string(n) + " draw=" + std::to_string(draw) + ": ";
}

template <typename Fn>
std::vector<ResultRow> with_context(SweepKind sweep, std::size_t n, std::size_t draw, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), context(sweep, n, draw) + e.detail());
  }
}

}  // namespace

SeedRecord cell_seed(const ExperimentConfig& cfg, std::size_t n, std::size_t draw) {
  std::uint64_t id = hash_combine(config_hash(cfg), kTagTrain);
  id = hash_combine(id, n);
  id = hash_combine(id, draw);
  return SeedRecord{cfg.base_seed, id, draw};
}

SeedRecord fewshot_seed(const ExperimentConfig& cfg, SweepKind sweep, std::size_t point,
                        std::size_t draw) {
  std::uint64_t id = hash_combine(config_hash(cfg), sweep == SweepKind::N ? kTagFewShotN : kTagFewShotM);
  id = hash_combine(id, point);
  id = hash_combine(id, draw);
  return SeedRecord{cfg.base_seed, id, draw};
}

std::vector<ResultRow> run_point(const ExperimentConfig& cfg, std::size_t n, std::size_t draw) {
  validate(cfg);
  const RowSchema schema = row_schema(cfg);
  return with_context(SweepKind::N, n, draw, [&] { return n_cell(cfg, schema, n, draw); });
}

std::vector<ResultRow> run_m_point(const ExperimentConfig& cfg, std::size_t draw) {
  validate(cfg);
  if (cfg.signal.dense_gaussian) {
    throw Error(ErrorCode::InvalidConfig, "the m sweep needs a sparse signal");
  }
  const RowSchema schema = row_schema(cfg);
  return with_context(SweepKind::M, cfg.fixed_n_for_m_sweep, draw,
                      [&] { return m_cell(cfg, schema, draw); });
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

auto row_key(const ResultRow& r) {
  return std::make_tuple(r.sweep, r.n, r.m.value_or(0), r.draw, r.estimator);
}

auto group_key(const ResultRow& r) {
  return std::make_tuple(r.sweep, r.n, r.m.value_or(0), r.estimator);
}

}  // namespace

std::vector<AggregateRow> aggregate(const RowSchema& schema, const std::vector<ResultRow>& rows) {
  std::map<decltype(group_key(rows.front())), std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) groups[group_key(r)].push_back(&r);

  std::vector<AggregateRow> out;
  for (const auto& [key, members] : groups) {
    AggregateRow agg;
    agg.sweep = members.front()->sweep;
    agg.n = members.front()->n;
    agg.m = members.front()->m;
    agg.estimator = members.front()->estimator;
    const std::size_t width = schema.metrics.size();
    agg.mean.assign(width, std::nullopt);
    agg.std.assign(width, std::nullopt);
    agg.median.assign(width, std::nullopt);
    for (const auto* r : members) (r->ok() ? agg.count : agg.failed) += 1;

    for (std::size_t k = 0; k < width; ++k) {
      std::vector<double> xs;
      for (const auto* r : members) {
        if (r->ok() && r->values[k]) xs.push_back(*r->values[k]);
      }
      if (xs.empty()) continue;
      double sum = 0.0;
      for (double x : xs) sum += x;
      const double mean = sum / static_cast<double>(xs.size());
      agg.mean[k] = mean;
      if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        agg.std[k] = std::sqrt(ss / static_cast<double>(xs.size() - 1));
      }
      agg.median[k] = median_of(std::move(xs));
    }
    out.push_back(std::move(agg));
  }
  return out;
}

namespace {

std::string size_cell(std::optional<std::size_t> v) { return v ? std::to_string(*v) : std::string(); }

json taskshift_bound_band(const RowSchema& schema, const std::vector<ResultRow>& rows,
                   const std::vector<std::size_t>& n_grid) {
  if (!schema.contains("ts_ratio_upper")) return nullptr;
  json per_n = json::array();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t n : n_grid) {
    std::map<std::size_t, double> by_draw;  // one value per draw; every row repeats it
    for (const auto& r : rows) {
      if (r.sweep != SweepKind::N || r.n != n || !r.ok()) continue;
      if (const auto v = value(schema, r, "ts_ratio_upper")) by_draw.emplace(r.draw, *v);
    }
    if (by_draw.empty()) continue;
    std::vector<double> xs;
    for (const auto& [draw, v] : by_draw) xs.push_back(v);
    const double med = median_of(xs);
    per_n.push_back({{"n", n}, {"median_ratio", med}});
    if (std::isfinite(med) && med > 0.0) {
      lo = std::min(lo, med);
      hi = std::max(hi, med);
    }
  }
  json band = {{"per_n", per_n}};
  if (hi > 0.0) band.update({{"min", lo}, {"max", hi}, {"factor", hi / lo}});
  return band;
}

json build_meta(const ExperimentConfig& cfg, const RowSchema& schema,
                const std::vector<ResultRow>& rows, std::size_t cells, std::size_t failed_cells) {
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["config_hash"] = hex64(config_hash(cfg));
  meta["name"] = cfg.name;
  meta["cells"] = cells;
  meta["failed_cells"] = failed_cells;
  meta["std_estimator"] = "unbiased (divides by count - 1)";
  meta["k_star_b"] = cfg.k_star_b;

  json warnings = json::array();
  json grid = json::array();
  std::optional<std::size_t> last_k;
  for (std::size_t n : cfg.n_grid) {
    try {
      const auto spec = build_ensemble(cfg.ensemble, n, EnsembleOptions{cfg.dimension_cap});
      const auto ks = resolve_k_star(cfg, spec, n);
      grid.push_back({{"n", n},
                      {"d", spec.dim()},
                      {"k_star", ks.used ? json(*ks.used) : json(nullptr)},
                      {"k_star_computed", ks.computed ? json(*ks.computed) : json(nullptr)}});
      last_k = ks.used;
      for (const auto& w : spec.warnings()) warnings.push_back("n=" + std::to_string(n) + ": " + w);
    } catch (const Error& e) {
      grid.push_back({{"n", n}, {"error", e.what()}});
    }
    const double t = static_cast<double>(cfg.signal.support.size());
    if (!cfg.signal.dense_gaussian && t >= std::pow(static_cast<double>(n), 0.4)) {
      warnings.push_back("n=" + std::to_string(n) + ": sparsity t=" +
                         std::to_string(cfg.signal.support.size()) +
                         " is not below n^0.4; recovery guarantees may not apply");
    }
  }
  meta["grid"] = grid;
  meta["warnings"] = warnings;
  if (last_k) {
    meta["tradeoff_regime"] = {{"label", to_string(classify_tradeoff(*last_k))},
                               {"from_k_star_at_n", cfg.n_grid.back()}};
  }
  meta["regime"] = to_string(classify_regime(cfg.ensemble));
  meta["taskshift_bound_band"] = taskshift_bound_band(schema, rows, cfg.n_grid);
  return meta;
}

struct Job {
  SweepKind sweep;
  std::size_t n;
  std::size_t draw;
};

std::vector<ResultRow> failed_rows(const ExperimentConfig& cfg, const RowSchema& schema,
                                   const Job& job, const std::string& message) {
  std::vector<ResultRow> rows;
  if (job.sweep == SweepKind::N) {
    auto ids = cfg.estimators;
    std::sort(ids.begin(), ids.end());
    for (auto id : ids) {
      rows.push_back(blank_row(schema, SweepKind::N, job.n, std::nullopt, job.draw, id));
      rows.back().error = message;
    }
  } else {
    for (std::size_t m : cfg.m_grid) {
      for (auto id : m_estimators(cfg)) {
        rows.push_back(blank_row(schema, SweepKind::M, job.n, m, job.draw, id));
        rows.back().error = message;
      }
    }
  }
  return rows;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, const RunOptions& options) {
  validate(cfg);
  SweepResult result;
  result.schema = row_schema(cfg);
  const RowSchema& schema = result.schema;

  std::vector<Job> jobs;
  for (std::size_t n : cfg.n_grid) {
    for (std::size_t d = 0; d < cfg.draws; ++d) jobs.push_back({SweepKind::N, n, d});
  }
  if (!cfg.signal.dense_gaussian && !cfg.m_grid.empty() && !m_estimators(cfg).empty()) {
    for (std::size_t d = 0; d < cfg.draws; ++d) {
      jobs.push_back({SweepKind::M, cfg.fixed_n_for_m_sweep, d});
    }
  }

  std::vector<std::vector<ResultRow>> outputs(jobs.size());
  std::vector<char> failed(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const auto start = std::chrono::steady_clock::now();
      std::string message;
      try {
        outputs[i] = job.sweep == SweepKind::N
                         ? with_context(job.sweep, job.n, job.draw,
                                        [&] { return n_cell(cfg, schema, job.n, job.draw); })
                         : with_context(job.sweep, job.n, job.draw,
                                        [&] { return m_cell(cfg, schema, job.draw); });
      } catch (const std::exception& e) {
        message = e.what();
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!message.empty()) {
        outputs[i] = failed_rows(cfg, schema, job, message);
        failed[i] = 1;
      }
      for (auto& row : outputs[i]) row.wall_seconds = options.record_wall_time ? seconds : 0.0;
      if (options.log != nullptr) {
        std::lock_guard lock(log_mutex);
        *options.log << "[cell] " << to_string(job.sweep) << "-sweep n=" << job.n
                     << " draw=" << job.draw << (message.empty() ? " ok " : " FAILED ") << seconds
                     << "s" << (message.empty() ? "" : " " + message) << '\n';
        options.log->flush();
      }
    }
  };

  std::size_t threads = options.jobs != 0 ? options.jobs : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(jobs.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    result.failed_cells += static_cast<std::size_t>(failed[i]);
    for (auto& row : outputs[i]) result.rows.push_back(std::move(row));
  }
  std::sort(result.rows.begin(), result.rows.end(),
            [](const ResultRow& a, const ResultRow& b) { return row_key(a) < row_key(b); });
  result.agg = aggregate(schema, result.rows);
  result.meta = build_meta(cfg, schema, result.rows, jobs.size(), result.failed_cells);
  return result;
}

Table rows_table(const ExperimentConfig& cfg, const RowSchema& schema,
                 const std::vector<ResultRow>& rows) {
  Table t;
  t.header = {"schema_version", "config_hash", "sweep", "n", "m", "draw", "estimator"};
  t.header.insert(t.header.end(), schema.metrics.begin(), schema.metrics.end());
  t.header.push_back("wall_seconds");
  t.header.push_back("error");
  const std::string hash = hex64(config_hash(cfg));
  for (const auto& r : rows) {
    std::vector<std::string> cells = {std::to_string(kSchemaVersion), hash, to_string(r.sweep),
                                      std::to_string(r.n), size_cell(r.m), std::to_string(r.draw),
                                      to_string(r.estimator)};
    for (const auto& v : r.values) cells.push_back(format_optional(v));
    cells.push_back(format_double(r.wall_seconds));
    cells.push_back(r.error);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table agg_table(const RowSchema& schema, const std::vector<AggregateRow>& agg) {
  Table t;
  t.header = {"sweep", "n", "m", "estimator", "count", "failed"};
  for (const auto& name : schema.metrics) {
    t.header.push_back(name + "_mean");
    t.header.push_back(name + "_std");
    t.header.push_back(name + "_median");
  }
  for (const auto& a : agg) {
    std::vector<std::string> cells = {to_string(a.sweep), std::to_string(a.n), size_cell(a.m),
                                      to_string(a.estimator), std::to_string(a.count),
                                      std::to_string(a.failed)};
    for (std::size_t k = 0; k < schema.metrics.size(); ++k) {
      cells.push_back(format_optional(a.mean[k]));
      cells.push_back(format_optional(a.std[k]));
      cells.push_back(format_optional(a.median[k]));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                   const SweepResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "rows.csv", to_csv(rows_table(cfg, result.schema, result.rows)));
  write_text(dir / "agg.csv", to_csv(agg_table(result.schema, result.agg)));
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  write_text(dir / "meta.json", result.meta.dump(2) + "\n");
}

std::filesystem::path default_output_dir(const std::filesystem::path& root, const std::string& name) {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
  return root / name / stamp;
}

}  // namespace taskshift
