#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "shearbayes/posterior.hpp"
#include "shearbayes/shapes.hpp"
#include "shearbayes/topo_prior.hpp"

namespace shearbayes {

/// Forward-difference step sizes per coordinate family (smooth variant).
struct FDSteps {
  double center = 0.05;
  double a0 = 0.1;  // reasonable anywhere in [0.025, 0.225]
  double fourier = 0.05;
  double mu = 0.15;

  Eigen::VectorXd for_vector(const ParameterVector& nu) const;
};

struct OptimizerConfig {
  double omega0 = 5e-5;
  double lambda0 = 0.0;  // 0 = auto: 0.1 / sigma_noise^2
  double lambda_decay = 5.0;
  double omega_grow = 2.0;
  double omega_shrink = 2.0;
  double tol = 5e-7;  // relative cost decrease
  double mu_refine_threshold = 0.02;
  double mu_lower_factor = 0.5;
  double mu_background = 1.69;
  int max_outer = 50;
  int max_rejects = 30;  // consecutive damping increases before stalling out
  FDSteps eta;
  bool adaptive_eta = false;  // optional eta calibration pre-pass
  int threads = 1;

  double mu_lower() const { return mu_lower_factor * mu_background; }
};

struct MAPResult {
  ParameterVector nu_map;
  std::vector<double> cost_history;  // initial cost then each accepted step
  std::vector<double> omega_history;
  std::vector<double> lambda_history;
  Eigen::MatrixXd F;         // measurement Jacobian at nu_map (N x n)
  Eigen::MatrixXd gamma_pt;  // posterior covariance at lambda = 1
  bool converged = false;
  int outer_iterations = 0;
};

/// Flattened measurement map nu -> prediction vector; must be pure.
using ForwardMap = std::function<Eigen::VectorXd(const ParameterVector&)>;

/// J_lambda(nu) = |f(nu) - d|^2 / (2 sigma^2)
///              + (lambda/2) (nu - nu0)^T Gpr^-1 (nu - nu0).
double cost(const ForwardMap& f, const ParameterVector& nu, double lambda,
            const PriorSpec& prior, const Eigen::VectorXd& d, const NoiseCov& noise);

/// Forward-difference Jacobian (n + 1 forward solves, run concurrently).
/// Inadmissible perturbations shrink their step by half up to four times.
Eigen::MatrixXd fd_jacobian(const ForwardMap& f, const ParameterVector& nu,
                            const Eigen::VectorXd& base_prediction,
                            const Eigen::VectorXd& eta, const PriorSpec& prior,
                            int threads = 1);
Eigen::MatrixXd fd_jacobian(const ForwardMap& f, const ParameterVector& nu,
                            const FDSteps& eta, const PriorSpec& prior, int threads = 1);

/// g = F^T r / sigma^2 + lambda Gpr^-1 (nu - nu0),
/// H = F^T F / sigma^2 + lambda Gpr^-1.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> gn_gradient_hessian(
    const Eigen::MatrixXd& F, const Eigen::VectorXd& residual, double lambda,
    const PriorSpec& prior, const ParameterVector& nu, const NoiseCov& noise);

/// Optional calibration pre-pass: rescales each step from the ratio of first
/// to second divided differences at nu0 (one extra solve per coordinate),
/// clamped to [eta/4, 4 eta].
Eigen::VectorXd calibrate_eta(const ForwardMap& f, const ParameterVector& nu0,
                              const Eigen::VectorXd& eta, const PriorSpec& prior,
                              int threads = 1);

/// Damped Gauss-Newton double iteration: solve
/// (H + omega diag(H)) xi = -g; accept when the radius stays positive,
/// mu stays above the lower bound and the cost decreases, otherwise double
/// omega and re-solve with the same Jacobian. On acceptance halve omega and
/// set lambda <- max(lambda/decay, 1). Once the relative cost decrease
/// falls under tol, freeze everything but the mu coordinates and iterate on
/// them until the accepted change drops below mu_refine_threshold.
/// gamma_pt is always computed at lambda = 1. Smooth variant only.
MAPResult lm_solve(const ForwardMap& f, const OptimizerConfig& opt, const PriorSpec& prior,
                   const Eigen::VectorXd& d_odd, const NoiseCov& noise);

struct LaplaceCov {
  Eigen::MatrixXd cov;   // (F^T F / sigma^2 + Gpr^-1)^-1
  Eigen::MatrixXd sqrt;  // symmetric square root for sampling
};

LaplaceCov laplace_cov(const Eigen::MatrixXd& F, const NoiseCov& noise,
                       const PriorSpec& prior);

struct LaplaceSamples {
  Eigen::MatrixXd samples;  // count x n, raw parameter coordinates
  std::vector<std::uint8_t> admissible;
  long admissible_count() const;
};

/// nu = nu_map + Gpt^(1/2) n for one standard normal vector n.
Eigen::VectorXd laplace_draw(const ParameterVector& nu_map, const LaplaceCov& cov,
                             const Eigen::VectorXd& n);

/// count iid draws; inadmissible draws are retained but flagged.
LaplaceSamples sample_laplace(const ParameterVector& nu_map, const LaplaceCov& cov,
                              long count, std::uint64_t seed, const PriorSpec& prior);

}  // namespace shearbayes
