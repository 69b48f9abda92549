#include "taskshift/presets.hpp"

#include <algorithm>

#include "taskshift/error.hpp"

namespace taskshift {

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "fig2i",      "fig2ii",     "spiked_outside", "poly_u25",
      "isotropic50", "regimes_q3", "regimes_q6",     "regimes_q9",
  };
  return names;
}

namespace {

ExperimentConfig base(const std::string& name, Provenance ensemble, IndexSet support,
                      std::vector<double> coeffs, std::size_t max_n) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.ensemble = std::move(ensemble);
  cfg.signal.support = std::move(support);
  cfg.signal.coeffs = std::move(coeffs);
  for (std::size_t n = 100; n <= max_n; n *= 2) cfg.n_grid.push_back(n);
  if (cfg.n_grid.empty() || cfg.n_grid.back() != max_n) {
    if (max_n < 100) cfg.n_grid.clear();
    cfg.n_grid.push_back(max_n);
  }
  cfg.m_grid = {10, 20, 50, 100, 200, 500};
  cfg.draws = 10;
  cfg.base_seed = 20240601;
  cfg.fewshot_sigma2 = 1.0;
  cfg.label_noise = 0.0;
  cfg.estimators = {EstimatorId::RegMni, EstimatorId::ClsMni, EstimatorId::ToptPost,
                    EstimatorId::ThresholdPost, EstimatorId::Rescaled};
  cfg.fixed_n_for_m_sweep = std::min<std::size_t>(1000, max_n);
  cfg.fewshot_m = 100;
  return cfg;
}

}  // namespace

ExperimentConfig preset(const std::string& name, std::size_t max_n) {
  if (max_n < 2) throw Error(ErrorCode::InvalidConfig, "max_n must be >= 2");
  ExperimentConfig cfg;
  if (name == "fig2i") {
    cfg = base(name, Spiked{1.5, 0.5, 0.25}, {0, 1}, {1.0, -0.5}, max_n);
  } else if (name == "fig2ii") {
    cfg = base(name, Spiked{1.5, 0.5, 0.55}, {0, 1}, {1.0, -0.5}, max_n);
  } else if (name == "spiked_outside") {
    cfg = base(name, Spiked{1.5, 0.5, 0.25}, {0, 1, 7}, {1.0, -0.5, -0.15}, max_n);
  } else if (name == "poly_u25") {
    cfg = base(name, PolyDecay{1.5, 0.25, 0.0}, {0, 1}, {0.2, -0.1}, max_n);
  } else if (name == "isotropic50") {
    cfg = base(name, Isotropic{50.0, 1.5}, {0, 1}, {1.0, -0.5}, max_n);
  } else if (name == "regimes_q3") {
    cfg = base(name, Spiked{1.5, 0.3, 0.5}, {0, 1}, {0.2, -0.1}, max_n);
  } else if (name == "regimes_q6") {
    cfg = base(name, Spiked{1.5, 0.6, 0.5}, {0, 1}, {0.2, -0.1}, max_n);
  } else if (name == "regimes_q9") {
    cfg = base(name, Spiked{1.5, 0.9, 0.5}, {0, 1}, {0.2, -0.1}, max_n);
  } else {
    throw Error(ErrorCode::UnknownPreset, "no preset named '" + name + "'");
  }
  validate(cfg);
  return cfg;
}

}  // namespace taskshift
