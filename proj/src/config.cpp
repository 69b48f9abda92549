#include "taskshift/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "taskshift/error.hpp"

namespace taskshift {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) invalid("unknown field '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) invalid("missing field '" + std::string(key) + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid("bad field '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

template <typename T>
void read_optional(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid("bad field '" + std::string(key) + "': " + e.what());
  }
}

bool strictly_ascending(const std::vector<std::size_t>& grid) {
  return std::adjacent_find(grid.begin(), grid.end(),
                            [](std::size_t a, std::size_t b) { return a >= b; }) == grid.end();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::RegMni: return "reg_mni";
    case EstimatorId::ClsMni: return "cls_mni";
    case EstimatorId::ToptPost: return "topt_post";
    case EstimatorId::ThresholdPost: return "threshold_post";
    case EstimatorId::Rescaled: return "rescaled";
  }
  return "unknown";
}

EstimatorId estimator_from_string(const std::string& name) {
  for (auto id : {EstimatorId::RegMni, EstimatorId::ClsMni, EstimatorId::ToptPost,
                  EstimatorId::ThresholdPost, EstimatorId::Rescaled}) {
    if (to_string(id) == name) return id;
  }
  invalid("unknown estimator '" + name + "'");
}

bool ExperimentConfig::has(EstimatorId id) const {
  return std::find(estimators.begin(), estimators.end(), id) != estimators.end();
}

bool ExperimentConfig::needs_fewshot() const {
  return has(EstimatorId::ToptPost) || has(EstimatorId::ThresholdPost);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_grid.empty()) invalid("n_grid is empty");
  if (!strictly_ascending(cfg.n_grid)) invalid("n_grid must be strictly ascending");
  if (cfg.n_grid.front() < 2) invalid("n_grid entries must be >= 2");
  if (!strictly_ascending(cfg.m_grid)) invalid("m_grid must be strictly ascending");
  if (!cfg.m_grid.empty() && cfg.m_grid.front() < 1) invalid("m_grid entries must be positive");
  if (cfg.draws < 1) invalid("draws must be >= 1");
  if (!(cfg.fewshot_sigma2 >= 0.0) || !std::isfinite(cfg.fewshot_sigma2)) {
    invalid("fewshot_sigma2 must be non-negative");
  }
  if (!(cfg.label_noise >= 0.0 && cfg.label_noise < 0.5)) invalid("label_noise must lie in [0, 0.5)");
  if (cfg.estimators.empty()) invalid("estimators is empty");
  if (cfg.fixed_n_for_m_sweep < 2) invalid("fixed_n_for_m_sweep must be >= 2");
  if (cfg.fewshot_m < 1) invalid("fewshot_m must be positive");
  if (!(cfg.k_star_b > 0.0)) invalid("k_star_b must be positive");
  if (!(cfg.threshold_coeff > 0.0)) invalid("threshold_coeff must be positive");

  const auto& sig = cfg.signal;
  if (sig.dense_gaussian) {
    if (!sig.support.empty() || !sig.coeffs.empty()) {
      invalid("dense_gaussian signals take no support or coeffs");
    }
    if (cfg.needs_fewshot() || cfg.has(EstimatorId::Rescaled)) {
      invalid("postprocessing estimators need a sparse signal");
    }
  } else {
    if (sig.support.empty()) invalid("signal.support is empty");
    if (sig.support.size() != sig.coeffs.size()) invalid("signal.support and signal.coeffs differ in length");
    IndexSet sorted = sig.support;
    normalize(sorted);
    if (sorted.size() != sig.support.size()) invalid("signal.support has duplicates");
    for (double a : sig.coeffs) {
      if (a == 0.0 || !std::isfinite(a)) invalid("signal.coeffs must be finite and nonzero");
    }
  }
}

json provenance_to_json(const Provenance& provenance) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Spiked>) {
          return {{"kind", "spiked"}, {"p", p.p}, {"q", p.q}, {"r", p.r}};
        } else if constexpr (std::is_same_v<T, PolyDecay>) {
          return {{"kind", "poly"}, {"p", p.p}, {"u", p.u}, {"v", p.v}};
        } else if constexpr (std::is_same_v<T, Isotropic>) {
          return {{"kind", "isotropic"}, {"scale", p.scale}, {"p", p.p}};
        } else {
          return {{"kind", "explicit"}, {"lambdas", p.lambdas}};
        }
      },
      provenance);
}

Provenance provenance_from_json(const json& j) {
  if (!j.is_object()) invalid("ensemble must be an object");
  const auto kind = get_field<std::string>(j, "kind", "ensemble");
  if (kind == "spiked") {
    reject_unknown(j, {"kind", "p", "q", "r"}, "ensemble");
    return Spiked{get_field<double>(j, "p", "ensemble"), get_field<double>(j, "q", "ensemble"),
                  get_field<double>(j, "r", "ensemble")};
  }
  if (kind == "poly") {
    reject_unknown(j, {"kind", "p", "u", "v"}, "ensemble");
    return PolyDecay{get_field<double>(j, "p", "ensemble"), get_field<double>(j, "u", "ensemble"),
                     get_field<double>(j, "v", "ensemble")};
  }
  if (kind == "isotropic") {
    reject_unknown(j, {"kind", "scale", "p"}, "ensemble");
    return Isotropic{get_field<double>(j, "scale", "ensemble"), get_field<double>(j, "p", "ensemble")};
  }
  if (kind == "explicit") {
    reject_unknown(j, {"kind", "lambdas"}, "ensemble");
    return Explicit{get_field<std::vector<double>>(j, "lambdas", "ensemble")};
  }
  invalid("unknown ensemble kind '" + kind + "'");
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  reject_unknown(j,
                 {"name", "ensemble", "signal", "n_grid", "m_grid", "draws", "base_seed",
                  "fewshot_sigma2", "label_noise", "estimators", "fixed_n_for_m_sweep", "fewshot_m",
                  "k_star_b", "threshold_coeff", "dimension_cap", "ansatz"},
                 "config");
  ExperimentConfig cfg;
  read_optional(j, "name", cfg.name);
  if (!j.contains("ensemble")) invalid("missing field 'ensemble'");
  cfg.ensemble = provenance_from_json(j.at("ensemble"));

  if (!j.contains("signal") || !j.at("signal").is_object()) invalid("missing object 'signal'");
  const json& sj = j.at("signal");
  reject_unknown(sj, {"support", "coeffs", "dense_gaussian", "rademacher"}, "signal");
  read_optional(sj, "dense_gaussian", cfg.signal.dense_gaussian);
  read_optional(sj, "rademacher", cfg.signal.rademacher);
  if (!cfg.signal.dense_gaussian) {
    const auto one_based = get_field<std::vector<long long>>(sj, "support", "signal");
    for (long long idx : one_based) {
      if (idx < 1) invalid("signal.support indices are 1-based");
      cfg.signal.support.push_back(static_cast<std::size_t>(idx - 1));
    }
    cfg.signal.coeffs = get_field<std::vector<double>>(sj, "coeffs", "signal");
  }

  cfg.n_grid = get_field<std::vector<std::size_t>>(j, "n_grid", "config");
  read_optional(j, "m_grid", cfg.m_grid);
  read_optional(j, "draws", cfg.draws);
  read_optional(j, "base_seed", cfg.base_seed);
  read_optional(j, "fewshot_sigma2", cfg.fewshot_sigma2);
  read_optional(j, "label_noise", cfg.label_noise);
  for (const auto& name : get_field<std::vector<std::string>>(j, "estimators", "config")) {
    const auto id = estimator_from_string(name);
    if (!cfg.has(id)) cfg.estimators.push_back(id);
  }
  read_optional(j, "fixed_n_for_m_sweep", cfg.fixed_n_for_m_sweep);
  read_optional(j, "fewshot_m", cfg.fewshot_m);
  read_optional(j, "k_star_b", cfg.k_star_b);
  read_optional(j, "threshold_coeff", cfg.threshold_coeff);
  read_optional(j, "dimension_cap", cfg.dimension_cap);
  read_optional(j, "ansatz", cfg.ansatz);
  validate(cfg);
  return cfg;
}

namespace {

json signal_config_json(const SignalConfig& sig) {
  if (sig.dense_gaussian) return {{"dense_gaussian", true}};
  std::vector<std::size_t> one_based;
  for (std::size_t j : sig.support) one_based.push_back(j + 1);
  json out = {{"support", one_based}, {"coeffs", sig.coeffs}};
  if (sig.rademacher) out["rademacher"] = true;
  return out;
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  std::vector<std::string> names;
  for (auto id : cfg.estimators) names.push_back(to_string(id));
  return {
      {"name", cfg.name},
      {"ensemble", provenance_to_json(cfg.ensemble)},
      {"signal", signal_config_json(cfg.signal)},
      {"n_grid", cfg.n_grid},
      {"m_grid", cfg.m_grid},
      {"draws", cfg.draws},
      {"base_seed", cfg.base_seed},
      {"fewshot_sigma2", cfg.fewshot_sigma2},
      {"label_noise", cfg.label_noise},
      {"estimators", names},
      {"fixed_n_for_m_sweep", cfg.fixed_n_for_m_sweep},
      {"fewshot_m", cfg.fewshot_m},
      {"k_star_b", cfg.k_star_b},
      {"threshold_coeff", cfg.threshold_coeff},
      {"dimension_cap", cfg.dimension_cap},
      {"ansatz", cfg.ansatz},
  };
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const json model = {
      {"ensemble", provenance_to_json(cfg.ensemble)},
      {"signal", signal_config_json(cfg.signal)},
      {"label_noise", cfg.label_noise},
      {"fewshot_sigma2", cfg.fewshot_sigma2},
      {"base_seed", cfg.base_seed},
  };
  return fnv1a(model.dump());
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Signal build_signal(const SignalConfig& cfg, const CovarianceSpec& spec, Rng& rng) {
  if (cfg.dense_gaussian) return make_dense_gaussian(spec, rng);
  Signal base = make_sparse(spec, cfg.support, cfg.coeffs);
  return cfg.rademacher ? make_rademacher(base, rng) : base;
}

json to_json(const Signal& signal) {
  std::vector<std::size_t> one_based;
  for (std::size_t j : signal.support()) one_based.push_back(j + 1);
  return {{"kind", to_string(signal.kind())},
          {"support", one_based},
          {"coeffs", signal.coeffs()},
          {"strength", signal.strength()},
          {"d", signal.dim()}};
}

json to_json(const Estimate& est) {
  json nonzeros = json::array();
  for (Eigen::Index j = 0; j < est.theta.size(); ++j) {
    if (est.theta(j) != 0.0) nonzeros.push_back({j + 1, est.theta(j)});
  }
  json out = {{"kind", to_string(est.kind)},
              {"nonzeros", nonzeros},
              {"diagnostics",
               {{"gram_condition_estimate", est.diagnostics.gram_condition_estimate},
                {"jitter_used", est.diagnostics.jitter_used},
                {"underdetermined", est.diagnostics.underdetermined}}}};
  if (est.support) {
    std::vector<std::size_t> one_based;
    for (std::size_t j : *est.support) one_based.push_back(j + 1);
    out["support"] = one_based;
  }
  return out;
}

}  // namespace taskshift
