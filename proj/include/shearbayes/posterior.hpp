#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <memory>
#include <vector>

#include "shearbayes/dataset.hpp"
#include "shearbayes/fem.hpp"
#include "shearbayes/mcmc.hpp"
#include "shearbayes/topo_prior.hpp"

namespace shearbayes {

/// Gamma_n = sigma^2 * Identity.
struct NoiseCov {
  double sigma = 1.0;
};

struct PosteriorEval {
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  double log_posterior = 0.0;
  bool admissible = false;
  int forward_solves = 0;
};

/// Measurement operator on a fixed inversion mesh: rasterize, assemble,
/// solve forward and record at the observation times, flattened in the
/// acquisition ordering (all receivers at t_1, then t_2, ...).
/// Immutable after construction; predict() is safe to call concurrently.
class ForwardOperator {
 public:
  ForwardOperator(SimulationConfig config, std::vector<double> observe_times);

  const SimulationConfig& config() const { return config_; }
  const std::vector<double>& observe_times() const { return times_; }
  const Mesh& mesh() const { return ops_->mesh(); }
  int observation_dim() const {
    return static_cast<int>(config_.receivers.size() * times_.size());
  }

  /// Throws ContractViolation for inadmissible parameters.
  Eigen::VectorXd predict(const ParameterVector& nu) const;

  long solve_count() const { return solves_.load(); }

 private:
  SimulationConfig config_;
  std::vector<double> times_;
  std::shared_ptr<const MeshOperators> ops_;
  mutable std::atomic<long> solves_{0};
};

/// -(N/2) log(2 pi) - N log sigma - |pred - d|^2 / (2 sigma^2).
double log_likelihood(const Eigen::VectorXd& pred, const Eigen::VectorXd& d,
                      const NoiseCov& noise);

/// Prior log-density over the raw parameters. Inadmissible -> -inf.
/// Smooth variant: Gaussian in nu. Piecewise variant: Gaussian for centers
/// and gamma = log mu plus log-Gaussian for the radii (Matern covariance in
/// log r, with the -sum log r_j change-of-variables term).
double log_prior(const ParameterVector& nu, const PriorSpec& prior);

/// Bundles operator, prior, odd-split data and noise model. Evaluations are
/// pure and may run concurrently.
class Posterior {
 public:
  Posterior(std::shared_ptr<const ForwardOperator> op, PriorSpec prior, DataSet d_odd,
            NoiseCov noise);

  const PriorSpec& prior() const { return prior_; }
  const NoiseCov& noise() const { return noise_; }
  const ForwardOperator& forward() const { return *op_; }
  const Eigen::VectorXd& data() const { return d_flat_; }

  /// Gates on admissibility first: inadmissible evaluations perform no
  /// forward solve and return the -inf sentinel.
  PosteriorEval evaluate(const ParameterVector& nu) const;

  /// Unnormalized log-target over the prior's sampling coordinates (the
  /// Jacobian cancels against the log-Gaussian prior in log coordinates).
  double log_density_sampling(const Eigen::VectorXd& y) const;

 private:
  std::shared_ptr<const ForwardOperator> op_;
  PriorSpec prior_;
  DataSet d_odd_;
  Eigen::VectorXd d_flat_;
  NoiseCov noise_;
};

/// MCMC target over sampling coordinates, with a cheap feasibility check
/// and rejection diagnostics wired to the admissibility rule.
Target make_target(std::shared_ptr<const Posterior> posterior, std::uint64_t seed_hint = 0);

}  // namespace shearbayes
