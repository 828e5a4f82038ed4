#pragma once

#include <string>

#include "shearbayes/config_file.hpp"
#include "shearbayes/posterior.hpp"

namespace shearbayes {

/// Canonical output-file layout inside one output directory.
struct Paths {
  std::string out;

  std::string clean_data() const { return out + "/data_clean.csv"; }
  std::string noisy_data() const { return out + "/data_noisy.csv"; }
  std::string even_data() const { return out + "/data_even.csv"; }
  std::string odd_data() const { return out + "/data_odd.csv"; }
  std::string truth_shape() const { return out + "/truth_shape.csv"; }
  std::string energy_field(int fraction) const {
    return out + "/energy_f" + std::to_string(fraction) + ".field";
  }
  std::string energy_full() const { return out + "/energy_full.field"; }
  std::string circles() const { return out + "/circles.csv"; }
  std::string prior() const { return out + "/prior.json"; }
  std::string chain() const { return out + "/chain.csv"; }
  std::string diagnostics() const { return out + "/diagnostics.json"; }
  std::string map_shape() const { return out + "/map_shape.csv"; }
  std::string gamma_pt() const { return out + "/gamma_pt.csv"; }
  std::string cost_history() const { return out + "/cost_history.csv"; }
  std::string map_meta() const { return out + "/map_meta.json"; }
  std::string laplace_samples() const { return out + "/laplace_samples.csv"; }
  std::string stats(const std::string& source) const {
    return out + "/stats_" + source + ".csv";
  }
  std::string membership(const std::string& source) const {
    return out + "/membership_" + source + ".field";
  }
  std::string mean_shape_file() const { return out + "/mean_shape.csv"; }
  std::string chain_map_shape() const { return out + "/chain_map_shape.csv"; }
};

/// Inversion configuration derived from the data configuration by swapping
/// in the coarsened steps. Refuses identical steps unless the inverse-crime
/// override is set.
SimulationConfig inversion_config(const RunConfig& cfg, bool allow_inverse_crime);

/// Receiver activation windows for the topological-energy fractions.
std::vector<std::vector<int>> make_fractions(int receiver_count, int fraction_count);

void run_synth(const RunConfig& cfg, const Paths& paths, std::uint64_t seed);

struct TopoOutputs {
  std::vector<CircleGuess> circles;
  PriorSpec prior;
  double C0 = 0.3;
  bool C0_satisfied = true;
  EnergyField full_field;
};
TopoOutputs run_topo(const RunConfig& cfg, const Paths& paths, bool allow_inverse_crime);

Chain run_mcmc(const RunConfig& cfg, const Paths& paths, std::uint64_t seed,
               bool allow_inverse_crime);

MAPResult run_map(const RunConfig& cfg, const Paths& paths, bool allow_inverse_crime);

LaplaceSamples run_laplace(const RunConfig& cfg, const Paths& paths, std::uint64_t seed);

void run_report(const RunConfig& cfg, const Paths& paths, const std::string& source);

/// Posterior over the odd split read from the output directory.
std::shared_ptr<Posterior> load_posterior(const RunConfig& cfg, const Paths& paths,
                                          bool allow_inverse_crime);

}  // namespace shearbayes
