#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "shearbayes/dataset.hpp"
#include "shearbayes/fem.hpp"
#include "shearbayes/shapes.hpp"

namespace shearbayes {

struct TopoConfig {
  double C0 = 0.3;  // threshold fraction in (0,1)
  std::vector<std::vector<int>> fractions;  // receiver index subsets
  double peak_min_separation = 1.5;

  void validate(int receiver_count) const;
  /// Default activation pattern: three overlapping left/centered/right
  /// windows of the transducer array.
  static std::vector<std::vector<int>> default_fractions(int receiver_count);
};

struct EnergyField {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd values;  // nodal, >= 0
};

struct CircleGuess {
  double cx = 0.0;
  double cy = 0.0;
  double rho0 = 0.0;
  int fraction_id = 0;
  double peak = 0.0;  // field maximum over the originating component
};

struct MaternParams {
  double nu = 1.5;
  double rho = 0.5;
  double sigma = 0.2;
};

/// Spread hyperparameters for prior construction.
struct PriorHyper {
  double var_center = 0.1;
  double var_a0 = 0.1;
  double var_mu = 400.0;       // 20^2
  double fourier_decay_s = 3.0;
  MaternParams matern;
  double mu_background = 1.69;  // dimensionless background c^2
  AdmissibilityRule rule;
  Rect domain;
};

/// Gaussian prior over the sampling coordinates. For the smooth variant the
/// sampling coordinates are the raw parameters; for the piecewise variant
/// radii and mu are sampled in log space (r_j -> log r_j, mu -> gamma).
class PriorSpec {
 public:
  PriorSpec() = default;
  /// Covariance is over sampling coordinates. Adds a 1e-10 jitter once if
  /// the factorization fails, then throws NumericalError.
  PriorSpec(ParameterVector nu0, Eigen::MatrixXd cov, AdmissibilityRule rule, Rect domain);

  ShapeVariant variant() const { return nu0_.variant(); }
  int dim() const { return nu0_.dim(); }
  const ParameterVector& nu0() const { return nu0_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::MatrixXd& cov_inverse() const { return cov_inv_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_lower_; }
  double log_det() const { return log_det_; }
  const AdmissibilityRule& rule() const { return rule_; }
  const Rect& domain() const { return domain_; }

  Eigen::VectorXd mean_sampling() const { return to_sampling(nu0_); }
  Eigen::VectorXd to_sampling(const ParameterVector& nu) const;
  ParameterVector to_raw(const Eigen::VectorXd& y) const;

  /// Draw in sampling coordinates.
  Eigen::VectorXd sample(std::mt19937_64& rng) const;
  /// Gaussian log-density over the sampling coordinates.
  double log_density_sampling(const Eigen::VectorXd& y) const;

 private:
  ParameterVector nu0_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd cov_inv_;
  Eigen::MatrixXd chol_lower_;
  double log_det_ = 0.0;
  AdmissibilityRule rule_;
  Rect domain_;
};

/// Uniform-background system for the topological-energy solves.
FEMSystem homogeneous_system(const SimulationConfig& config);

/// Forward solve with the uniform background speed, storing nodal history
/// at every record time (superset of what the energy quadrature needs).
WaveSolution forward_homogeneous(const SimulationConfig& config);
WaveSolution forward_homogeneous(const FEMSystem& system, const SimulationConfig& config);

/// Builds the residual -(U - d_even) at the active receivers (zero rows
/// elsewhere) and solves the time-reversed adjoint problem.
WaveSolution adjoint_from_data(const WaveSolution& U, const DataSet& d_even,
                               const std::vector<int>& active,
                               const SimulationConfig& config);
WaveSolution adjoint_from_data(const FEMSystem& system, const WaveSolution& U,
                               const DataSet& d_even, const std::vector<int>& active,
                               const SimulationConfig& config);

/// E_i = sum_n w_n U_i(t_n)^2 P_i(t_n)^2 with trapezoidal weights over the
/// time levels both solutions retain inside [tau_in, tau_end].
EnergyField energy(const WaveSolution& U, const WaveSolution& P,
                   const SimulationConfig& config);

/// Nodes strictly above (1 - C0) * max E. Throws NumericalError when the
/// field is identically zero.
std::vector<std::uint8_t> threshold(const EnergyField& field, double C0);

/// Thresholds each field, extracts 4-connected components of the node mask,
/// fits a circle per component (centroid, half the smallest axis-aligned
/// extent) and merges detections across fractions closer than
/// peak_min_separation, keeping the one with the higher component peak.
std::vector<CircleGuess> detect(const std::vector<EnergyField>& fields,
                                const TopoConfig& topo);

/// Matern covariance between points (cos 2*pi*theta_i, sin 2*pi*theta_i) on
/// the unit circle; nu = 3/2 uses the closed form.
double matern_cov(double theta_i, double theta_j, const MaternParams& p);

PriorSpec build_prior(const std::vector<CircleGuess>& circles, ShapeVariant variant,
                      int order, const PriorHyper& hyper);

struct C0Selection {
  double C0 = 0.3;
  bool satisfied = false;  // J(Omega_0) < J(empty) reached
  double J_empty = 0.0;
  double J_omega0 = 0.0;
};

/// Starts at initial_C0 and halves up to max_halvings times until
/// J(Omega_0) < J(empty), evaluating J with the interior heuristic
/// c^2 = 2 * c_background^2. Keeps the smallest tested C0 when the
/// inequality is never satisfied (satisfied = false).
C0Selection select_C0(const EnergyField& field, const DataSet& d_even,
                      const SimulationConfig& config, double initial_C0 = 0.3,
                      int max_halvings = 5);

}  // namespace shearbayes
