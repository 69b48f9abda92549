#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace taskshift {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Zero-based coordinate indices, kept sorted ascending and duplicate-free
// wherever an API says "index set".
using IndexSet = std::vector<std::size_t>;

// Sorts and deduplicates in place; returns the argument for chaining.
IndexSet& normalize(IndexSet& set);

}  // namespace taskshift
