#pragma once

#include "shearbayes/config_file.hpp"
#include "shearbayes/fem.hpp"
#include "shearbayes/shapes.hpp"

namespace shearbayes::test {

/// Small, fast configuration for unit tests: 4 x 3 domain, 5 transducers.
inline SimulationConfig tiny_config() {
  SimulationConfig cfg;
  cfg.domain = {0.0, 4.0, -3.0, 0.0};
  cfg.dx = 0.2;
  cfg.dt = 0.005;
  cfg.depth_H = 3.0;
  cfg.tau_in = 2.0;
  cfg.emitters.clear();
  cfg.receivers.clear();
  for (double x = 0.0; x <= 4.0 + 1e-12; x += 1.0) cfg.emitters.push_back({x, 0.0});
  cfg.receivers = cfg.emitters;
  const double end = cfg.effective_tau_end();
  for (double t = cfg.tau_in; t <= end + 1e-9; t += 0.05) cfg.record_times.push_back(t);
  return cfg;
}

/// Paper-scale acquisition on the coarsened (inversion) grid; a single
/// forward solve takes on the order of a second.
inline SimulationConfig inversion_scale_config() {
  return SimulationConfig::defaults().coarsened(2.0);
}

inline ParameterVector tiny_truth() {
  return ParameterVector::circle(2.0, -1.5, 0.6, 16.0, 5);
}

}  // namespace shearbayes::test
