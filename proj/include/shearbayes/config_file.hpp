#pragma once

#include <cstdint>
#include <string>

#include "shearbayes/fem.hpp"
#include "shearbayes/map_laplace.hpp"
#include "shearbayes/mcmc.hpp"
#include "shearbayes/shapes.hpp"
#include "shearbayes/topo_prior.hpp"

namespace shearbayes {

/// Everything one inversion run needs, read from a sectioned key/value
/// configuration file ([domain], [source], [truth], [prior], [sampler],
/// [optimizer]).
struct RunConfig {
  SimulationConfig data;  // data-generation discretization + acquisition
  double inversion_dx = 0.16;
  double inversion_dt = 0.0025;
  double noise_alpha = 10.0;

  ParameterVector truth;

  ShapeVariant prior_variant = ShapeVariant::smooth;
  int Q = 5;
  int Z = 500;
  double C0 = 0.3;
  bool auto_C0 = true;
  double peak_min_separation = 1.5;
  int fraction_count = 3;
  PriorHyper hyper;

  SamplerConfig sampler;  // sampler.steps = thin * steps_kept
  long steps_kept = 500;

  OptimizerConfig optimizer;
  long laplace_count = 10000;

  std::uint64_t seed = 1;
};

RunConfig load_run_config(const std::string& path);

/// Built-in single-circle test configuration (truth circle of radius 1 at
/// depth 3 under the paper-style acquisition).
RunConfig single_circle_config();

}  // namespace shearbayes
