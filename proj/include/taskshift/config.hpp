#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "taskshift/covariance.hpp"
#include "taskshift/estimators.hpp"
#include "taskshift/signal.hpp"
#include "taskshift/types.hpp"

namespace taskshift {

enum class EstimatorId { RegMni, ClsMni, ToptPost, ThresholdPost, Rescaled };

std::string to_string(EstimatorId id);
EstimatorId estimator_from_string(const std::string& name);

struct SignalConfig {
  bool dense_gaussian = false;
  bool rademacher = false;      // random signs on top of the fixed coefficients
  IndexSet support;             // 0-based here, 1-based in JSON
  std::vector<double> coeffs;
};

struct ExperimentConfig {
  std::string name = "custom";
  Provenance ensemble = Spiked{};
  SignalConfig signal;
  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> m_grid;
  std::size_t draws = 10;
  std::uint64_t base_seed = 0;
  double fewshot_sigma2 = 1.0;
  double label_noise = 0.0;
  std::vector<EstimatorId> estimators;
  std::size_t fixed_n_for_m_sweep = 1000;

  std::size_t fewshot_m = 100;   // few-shot size used along the n sweep
  double k_star_b = 2.0;
  double threshold_coeff = 1.0;
  std::size_t dimension_cap = 200000;
  bool ansatz = true;            // constant-magnitude label fixture per cell

  bool has(EstimatorId id) const;
  bool needs_fewshot() const;
};

// Throws InvalidConfig with the offending field.
void validate(const ExperimentConfig& cfg);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::json provenance_to_json(const Provenance& provenance);
Provenance provenance_from_json(const nlohmann::json& j);

/// Hash of the model fields only (ensemble, signal, label noise, few-shot
/// noise, base seed). Grids and draw counts are left out so extending a sweep
/// keeps the streams of existing cells.
std::uint64_t config_hash(const ExperimentConfig& cfg);

std::string hex64(std::uint64_t value);

// Realizes the configured signal on `spec`. Dense and Rademacher signals
// draw from `rng`.
Signal build_signal(const SignalConfig& cfg, const CovarianceSpec& spec, Rng& rng);

nlohmann::json to_json(const Signal& signal);
nlohmann::json to_json(const Estimate& est);

}  // namespace taskshift
