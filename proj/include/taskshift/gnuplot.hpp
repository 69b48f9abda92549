#pragma once

#include <filesystem>

#include "taskshift/harness.hpp"

namespace taskshift {

/// Writes gnuplot scripts next to agg.csv: risk vs n (log-log), |theta_j|
/// vs n, and few-shot least-squares risk vs m. Each script renders a PNG.
void write_gnuplot_scripts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                           const RowSchema& schema);

}  // namespace taskshift
