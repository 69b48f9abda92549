#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "taskshift/config.hpp"

namespace taskshift {

const std::vector<std::string>& preset_names();

/// Named configurations scaled to desk size: n_grid doubles from 100
/// up to max_n (1600 by default), 10 draws, m sweep at n = 1000.
/// Throws UnknownPreset.
ExperimentConfig preset(const std::string& name, std::size_t max_n = 1600);

}  // namespace taskshift
