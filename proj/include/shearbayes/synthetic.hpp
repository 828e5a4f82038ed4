#pragma once

#include <cstdint>

#include "shearbayes/dataset.hpp"
#include "shearbayes/fem.hpp"
#include "shearbayes/shapes.hpp"

namespace shearbayes {

/// Solves the forward problem for the true anomalies on the data-generation
/// mesh (config.dx, config.dt) and records clean data at the configured
/// receivers and record times.
DataSet generate_truth(const ParameterVector& truth, const SimulationConfig& config);

/// Adds iid Gaussian noise with sigma = alpha * max|values| / 100 and
/// records the sigma used. alpha = 0 returns the data unchanged.
DataSet add_noise(const DataSet& data, double alpha, std::uint64_t rng_seed);

/// Splits by 1-based time index: even indices (t_2, t_4, ...) and odd
/// indices (t_1, t_3, ...). Requires at least two columns.
SplitData split(const DataSet& data);

}  // namespace shearbayes
