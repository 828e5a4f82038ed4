#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <vector>

#include "shearbayes/dataset.hpp"
#include "shearbayes/mesh.hpp"
#include "shearbayes/shapes.hpp"

namespace shearbayes {

using SpMat = Eigen::SparseMatrix<double>;

/// Acquisition and discretization settings for the dimensionless scalar
/// wave problem on a truncated rectangle. The top boundary y = y_max is the
/// physical interface (zero Neumann); lateral and bottom boundaries carry
/// the first-order absorbing condition du/dn = -(1/c) u_t.
struct SimulationConfig {
  Rect domain{0.0, 10.0, -7.0, 0.0};
  double dx = 0.08;
  double dt = 0.00125;
  double fM = 0.5;     // dimensionless peak frequency f_M * T
  double kappa = 2.0;  // emitter Gaussian width
  std::vector<Vec2> emitters;
  std::vector<Vec2> receivers;
  std::vector<double> record_times;  // t_1 .. t_M, strictly increasing
  double tau_in = 2.0;
  double tau_end = 0.0;  // 0 = auto: 2 * depth_H / c_background
  double c_background = 1.3;
  double depth_H = 7.0;

  double effective_tau_end() const {
    return tau_end > 0.0 ? tau_end : 2.0 * depth_H / c_background;
  }

  /// Checks step signs, recording window, CFL safety against c_max and that
  /// all emitters/receivers lie in the closed domain. Throws ConfigError.
  void validate(double c_max) const;

  /// Paper-style defaults: co-located transducers on the top edge with the
  /// given spacing and a uniform recording grid on [tau_in, tau_end].
  static SimulationConfig defaults(double transducer_step = 0.5,
                                   double record_step = 0.025);

  /// Copy with both steps coarsened by `factor` (inverse-crime guard rule).
  SimulationConfig coarsened(double factor = 2.0) const;
};

double ricker(double t, double fM);

/// Speed-independent structures for one mesh + acquisition: mass and
/// boundary-mass matrices, emitter load vector, receiver load matrix and
/// the factorized mass matrix. Immutable and shareable across solves.
class MeshOperators {
 public:
  MeshOperators(std::shared_ptr<const Mesh> mesh, const SimulationConfig& config);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const SpMat& M() const { return mass_; }
  const SpMat& B() const { return boundary_mass_; }
  const Eigen::VectorXd& gvec() const { return gvec_; }
  /// Regularized Dirac loads at the receivers (one column per receiver).
  const Eigen::MatrixXd& receiver_loads() const { return receiver_loads_; }
  Eigen::VectorXd mass_solve(const Eigen::VectorXd& rhs) const {
    return mass_solver_.solve(rhs);
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  SpMat mass_;
  SpMat boundary_mass_;
  Eigen::VectorXd gvec_;
  Eigen::MatrixXd receiver_loads_;
  Eigen::SimplicialLDLT<SpMat> mass_solver_;
};

/// Assembled system for one speed field.
struct FEMSystem {
  std::shared_ptr<const MeshOperators> ops;
  SpMat A;  // stiffness with c^2 weight
  double max_c2 = 0.0;

  const Mesh& mesh() const { return ops->mesh(); }
  const SpMat& M() const { return ops->M(); }
  const SpMat& B() const { return ops->B(); }
  const Eigen::VectorXd& gvec() const { return ops->gvec(); }
};

/// Exact P1 mass/stiffness integrals and edge mass on artificial edges;
/// the emitter load uses the 3-point edge-midpoint rule per element.
/// Throws DomainError on nonpositive speed values.
FEMSystem assemble(const std::shared_ptr<const MeshOperators>& ops, const SpeedField& speed);
FEMSystem assemble(const std::shared_ptr<const Mesh>& mesh, const SpeedField& speed,
                   const SimulationConfig& config);

/// Nodal snapshots of a solve at the retained time levels. The optional
/// energy series holds the scheme's discrete energy
///   E_{n+1/2} = 1/2 |(a_{n+1}-a_n)/dt|_M^2 + 1/2 a_{n+1}^T A a_n
/// sampled at every step.
struct WaveSolution {
  std::shared_ptr<const Mesh> mesh;
  double dt = 0.0;
  long steps = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> frames;
  std::vector<double> energy_times;
  std::vector<double> energies;
};

struct SolveOptions {
  double source_scale = 1.0;
  std::vector<double> snapshot_times;  // defaults to config.record_times
  bool boundary_damping = true;
  bool record_energy = false;
  /// Optional extra load added to the right-hand side at time t (used by
  /// manufactured-solution tests and the adjoint driver).
  std::function<void(double, Eigen::VectorXd&)> extra_forcing;
  const Eigen::VectorXd* a0 = nullptr;  // optional nonzero initial levels
  const Eigen::VectorXd* a1 = nullptr;
};

/// Centered-difference time stepping of
///   M a(t_{n+1}) = M (2 a(t_n) - a(t_{n-1})) - dt^2 A a(t_n)
///                  - c dt B (a(t_n) - a(t_{n-1})) + dt^2 f(t_n) G,
/// a(t_0) = a(t_1) = 0, with the mass factorization reused across steps.
/// Refuses to run when the CFL bound c_max dt / min(hx,hy) <= 0.5 fails;
/// throws NumericalError with the step index when a NaN appears.
WaveSolution solve_forward(const FEMSystem& system, const SimulationConfig& config,
                           double source_scale);
WaveSolution solve_forward(const FEMSystem& system, const SimulationConfig& config,
                           const SolveOptions& options);

/// Solves the time-reversed adjoint problem by substituting s = tau_end - t
/// and running the same recurrence forward in s. The right-hand side is the
/// residual (zero-order held on its time grid) times regularized Dirac
/// masses at the receivers, with the emitter Gaussian width and
/// normalization. Returns P indexed by the original time t, with snapshots
/// at the residual times.
WaveSolution solve_adjoint(const FEMSystem& system, const DataSet& residual,
                           const SimulationConfig& config);

/// P1 interpolation in space, linear interpolation in time between stored
/// levels. Receivers outside the domain raise DomainError; times outside
/// the stored range raise ShapeError.
DataSet record(const WaveSolution& solution, const std::vector<Vec2>& receivers,
               const std::vector<double>& times);

Mesh const& require_mesh(const WaveSolution& solution);

inline std::shared_ptr<const Mesh> build_mesh(const SimulationConfig& config) {
  return Mesh::build(config.domain, config.dx);
}

}  // namespace shearbayes
