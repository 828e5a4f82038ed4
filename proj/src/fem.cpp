#include "shearbayes/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "shearbayes/errors.hpp"

namespace shearbayes {

namespace {

constexpr double kTimeTol = 1e-9;

/// Regularized point loads: for each point p, assembles the element
/// integrals of (1/(pi kappa)) exp(-|x-p|^2/kappa) phi_j with the 3-point
/// edge-midpoint rule (exact for quadratics).
Eigen::MatrixXd assemble_point_loads(const Mesh& mesh, const std::vector<Vec2>& points,
                                     double kappa) {
  const int n = mesh.node_count();
  const int np = static_cast<int>(points.size());
  Eigen::MatrixXd loads = Eigen::MatrixXd::Zero(n, np);
  const double norm = 1.0 / (std::numbers::pi * kappa);
  const double weight = mesh.element_area() / 3.0;

  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto nodes = mesh.element(e);
    const Vec2 p0 = mesh.node(nodes[0]);
    const Vec2 p1 = mesh.node(nodes[1]);
    const Vec2 p2 = mesh.node(nodes[2]);
    // Midpoint m01 lies opposite vertex 2, etc.; phi_i = 1/2 on the two
    // midpoints of its adjacent edges and 0 on the opposite one.
    const Vec2 mid[3] = {{0.5 * (p0.x + p1.x), 0.5 * (p0.y + p1.y)},
                         {0.5 * (p1.x + p2.x), 0.5 * (p1.y + p2.y)},
                         {0.5 * (p2.x + p0.x), 0.5 * (p2.y + p0.y)}};
    for (int c = 0; c < np; ++c) {
      double g[3];
      for (int m = 0; m < 3; ++m) {
        const double dx = mid[m].x - points[c].x;
        const double dy = mid[m].y - points[c].y;
        g[m] = norm * std::exp(-(dx * dx + dy * dy) / kappa);
      }
      loads(nodes[0], c) += weight * 0.5 * (g[0] + g[2]);
      loads(nodes[1], c) += weight * 0.5 * (g[0] + g[1]);
      loads(nodes[2], c) += weight * 0.5 * (g[1] + g[2]);
    }
  }
  return loads;
}

}  // namespace

double ricker(double t, double fM) {
  const double s = std::numbers::pi * std::numbers::pi * fM * fM * t * t;
  return (1.0 - 2.0 * s) * std::exp(-s);
}

void SimulationConfig::validate(double c_max) const {
  if (dt <= 0.0 || dx <= 0.0) throw ConfigError("dx and dt must be positive");
  if (tau_in < 0.0) throw ConfigError("tau_in must be nonnegative");
  if (effective_tau_end() <= tau_in) throw ConfigError("tau_end must exceed tau_in");
  if (c_max * dt / dx > 0.5 + 1e-12)
    throw ConfigError("CFL violation: c_max*dt/dx = " + std::to_string(c_max * dt / dx) +
                      " exceeds 0.5");
  for (const auto& p : emitters)
    if (!domain.contains(p)) throw ConfigError("emitter outside the domain");
  for (const auto& p : receivers)
    if (!domain.contains(p)) throw ConfigError("receiver outside the domain");
  for (std::size_t m = 1; m < record_times.size(); ++m)
    if (record_times[m] <= record_times[m - 1])
      throw ConfigError("record times must be strictly increasing");
  if (!record_times.empty() &&
      (record_times.front() < -kTimeTol ||
       record_times.back() > effective_tau_end() + kTimeTol))
    throw ConfigError("record times must lie in [0, tau_end]");
}

SimulationConfig SimulationConfig::defaults(double transducer_step, double record_step) {
  SimulationConfig cfg;
  const double y = cfg.domain.y_max;
  for (double x = cfg.domain.x_min; x <= cfg.domain.x_max + 1e-12; x += transducer_step)
    cfg.emitters.push_back({x, y});
  cfg.receivers = cfg.emitters;
  const double end = cfg.effective_tau_end();
  for (double t = cfg.tau_in; t <= end + kTimeTol; t += record_step)
    cfg.record_times.push_back(t);
  return cfg;
}

SimulationConfig SimulationConfig::coarsened(double factor) const {
  SimulationConfig cfg = *this;
  cfg.dx = dx * factor;
  cfg.dt = dt * factor;
  return cfg;
}

MeshOperators::MeshOperators(std::shared_ptr<const Mesh> mesh,
                             const SimulationConfig& config)
    : mesh_(std::move(mesh)) {
  const Mesh& m = *mesh_;
  const int n = m.node_count();
  const double area = m.element_area();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m.element_count()) * 9);
  for (int e = 0; e < m.element_count(); ++e) {
    const auto nodes = m.element(e);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(nodes[i], nodes[j], area / 12.0 * (i == j ? 2.0 : 1.0));
  }
  mass_.resize(n, n);
  mass_.setFromTriplets(trip.begin(), trip.end());

  trip.clear();
  for (const auto& edge : m.artificial_edges()) {
    const double w = edge.length / 6.0;
    trip.emplace_back(edge.a, edge.a, 2.0 * w);
    trip.emplace_back(edge.b, edge.b, 2.0 * w);
    trip.emplace_back(edge.a, edge.b, w);
    trip.emplace_back(edge.b, edge.a, w);
  }
  boundary_mass_.resize(n, n);
  boundary_mass_.setFromTriplets(trip.begin(), trip.end());

  const Eigen::MatrixXd emitter_loads = assemble_point_loads(m, config.emitters, config.kappa);
  gvec_ = emitter_loads.rowwise().sum();
  if (config.emitters.empty()) gvec_ = Eigen::VectorXd::Zero(n);
  receiver_loads_ = assemble_point_loads(m, config.receivers, config.kappa);

  mass_solver_.compute(mass_);
  if (mass_solver_.info() != Eigen::Success)
    throw NumericalError("mass matrix factorization failed");
}

FEMSystem assemble(const std::shared_ptr<const MeshOperators>& ops, const SpeedField& speed) {
  const Mesh& m = ops->mesh();
  if (speed.c2.size() != m.element_count())
    throw ShapeError("speed field has " + std::to_string(speed.c2.size()) +
                     " values for " + std::to_string(m.element_count()) + " elements");

  FEMSystem sys;
  sys.ops = ops;
  const int n = m.node_count();
  const double hx = m.hx(), hy = m.hy();
  const double area = m.element_area();

  // All lower (resp. upper) triangles are congruent; the local stiffness
  // matrices are constant up to the c^2 factor. Vertex order matches
  // Mesh::element: lower (0,0),(hx,0),(hx,hy); upper (0,0),(hx,hy),(0,hy).
  auto local_stiffness = [&](const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    Eigen::Matrix3d k;
    const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) k(i, j) = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
    return k;
  };
  const Eigen::Matrix3d k_lower = local_stiffness({0, 0}, {hx, 0}, {hx, hy});
  const Eigen::Matrix3d k_upper = local_stiffness({0, 0}, {hx, hy}, {0, hy});

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m.element_count()) * 9);
  double max_c2 = 0.0;
  for (int e = 0; e < m.element_count(); ++e) {
    const double c2 = speed.c2[e];
    if (!(c2 > 0.0))
      throw DomainError("nonpositive squared speed " + std::to_string(c2) +
                        " in element " + std::to_string(e));
    max_c2 = std::max(max_c2, c2);
    const auto nodes = m.element(e);
    const Eigen::Matrix3d& k = (e % 2 == 0) ? k_lower : k_upper;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(nodes[i], nodes[j], c2 * k(i, j));
  }
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.max_c2 = max_c2;
  return sys;
}

FEMSystem assemble(const std::shared_ptr<const Mesh>& mesh, const SpeedField& speed,
                   const SimulationConfig& config) {
  auto ops = std::make_shared<MeshOperators>(mesh, config);
  return assemble(ops, speed);
}

namespace {

struct SnapshotWriter {
  const std::vector<double>& times;
  WaveSolution& out;
  std::size_t next = 0;

  void emit(double t_lo, double t_hi, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
            double dt) {
    while (next < times.size() && times[next] <= t_hi + kTimeTol) {
      const double w = std::clamp((times[next] - t_lo) / dt, 0.0, 1.0);
      out.times.push_back(times[next]);
      out.frames.push_back((1.0 - w) * lo + w * hi);
      ++next;
    }
  }
};

WaveSolution run_stepper(const FEMSystem& system, const SimulationConfig& config,
                         const SolveOptions& opt, double total_time) {
  const Mesh& mesh = system.mesh();
  const double dt = config.dt;
  const double cfl = std::sqrt(system.max_c2) * dt / std::min(mesh.hx(), mesh.hy());
  if (cfl > 0.5 + 1e-12)
    throw NumericalError("refusing to run: CFL number " + std::to_string(cfl) +
                         " exceeds 0.5");

  std::vector<double> snaps = opt.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(total_time / dt - kTimeTol)));
  if (!snaps.empty() && (snaps.front() < -kTimeTol || snaps.back() > nsteps * dt + kTimeTol))
    throw ShapeError("snapshot time outside the simulated window");

  const int n = mesh.node_count();
  Eigen::VectorXd a_prev = opt.a0 ? *opt.a0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd a_cur = opt.a1 ? *opt.a1 : Eigen::VectorXd::Zero(n);
  if (a_prev.size() != n || a_cur.size() != n)
    throw ShapeError("initial data size does not match the node count");

  WaveSolution sol;
  sol.mesh = system.ops->mesh_ptr();
  sol.dt = dt;
  sol.steps = nsteps;
  sol.times.reserve(snaps.size());
  sol.frames.reserve(snaps.size());

  SnapshotWriter writer{snaps, sol};
  writer.emit(0.0, dt, a_prev, a_cur, dt);

  const double c = config.c_background;
  Eigen::VectorXd rhs(n), forcing(n), a_next(n);

  auto push_energy = [&](const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double t) {
    const Eigen::VectorXd v = (cur - prev) / dt;
    const double e = 0.5 * v.dot(system.M() * v) + 0.5 * cur.dot(system.A * prev);
    sol.energy_times.push_back(t);
    sol.energies.push_back(e);
  };
  if (opt.record_energy) push_energy(a_prev, a_cur, dt);

  for (long nstep = 1; nstep < nsteps; ++nstep) {
    const double t_n = nstep * dt;
    rhs.noalias() = system.M() * (2.0 * a_cur - a_prev);
    rhs.noalias() -= dt * dt * (system.A * a_cur);
    if (opt.boundary_damping) rhs.noalias() -= c * dt * (system.B() * (a_cur - a_prev));
    if (opt.source_scale != 0.0)
      rhs.noalias() += dt * dt * opt.source_scale * ricker(t_n, config.fM) * system.gvec();
    if (opt.extra_forcing) {
      forcing.setZero();
      opt.extra_forcing(t_n, forcing);
      rhs.noalias() += dt * dt * forcing;
    }
    a_next = system.ops->mass_solve(rhs);
    if (!a_next.allFinite())
      throw NumericalError("numerical instability: NaN at step " + std::to_string(nstep + 1));

    writer.emit(t_n, t_n + dt, a_cur, a_next, dt);
    if (opt.record_energy) push_energy(a_cur, a_next, t_n + dt);

    a_prev.swap(a_cur);
    a_cur.swap(a_next);
  }
  return sol;
}

}  // namespace

WaveSolution solve_forward(const FEMSystem& system, const SimulationConfig& config,
                           double source_scale) {
  SolveOptions opt;
  opt.source_scale = source_scale;
  opt.snapshot_times = config.record_times;
  return solve_forward(system, config, opt);
}

WaveSolution solve_forward(const FEMSystem& system, const SimulationConfig& config,
                           const SolveOptions& options) {
  SolveOptions opt = options;
  if (opt.snapshot_times.empty()) opt.snapshot_times = config.record_times;
  return run_stepper(system, config, opt, config.effective_tau_end());
}

WaveSolution solve_adjoint(const FEMSystem& system, const DataSet& residual,
                           const SimulationConfig& config) {
  residual.validate();
  const double tau_end = config.effective_tau_end();
  for (double t : residual.times) {
    const bool known = std::any_of(config.record_times.begin(), config.record_times.end(),
                                   [t](double rt) { return std::abs(rt - t) <= kTimeTol; });
    if (!known)
      throw ShapeError("residual time " + std::to_string(t) +
                       " is not one of the configured record times");
  }

  // Receiver loads: reuse the precomputed ones when the receiver layout
  // matches the acquisition, otherwise assemble for the residual's set.
  const Mesh& mesh = system.mesh();
  Eigen::MatrixXd fresh;
  const Eigen::MatrixXd* loads = &system.ops->receiver_loads();
  bool same = residual.receivers.size() == config.receivers.size();
  for (std::size_t k = 0; same && k < residual.receivers.size(); ++k)
    same = residual.receivers[k].x == config.receivers[k].x &&
           residual.receivers[k].y == config.receivers[k].y;
  if (!same) {
    fresh = assemble_point_loads(mesh, residual.receivers, config.kappa);
    loads = &fresh;
  }

  const int K = residual.receiver_count();
  Eigen::VectorXd res_at(K);
  // Zero-order hold on the residual grid, evaluated at t = tau_end - s.
  auto fill_residual = [&](double t) {
    const auto& times = residual.times;
    auto it = std::upper_bound(times.begin(), times.end(), t + kTimeTol);
    if (it == times.begin()) {
      res_at.setZero();
      return false;
    }
    const long idx = std::distance(times.begin(), it) - 1;
    res_at = residual.values.col(idx);
    return true;
  };

  SolveOptions opt;
  opt.source_scale = 0.0;
  opt.extra_forcing = [&](double s, Eigen::VectorXd& out) {
    if (fill_residual(tau_end - s)) out.noalias() += (*loads) * res_at;
  };
  opt.snapshot_times.reserve(residual.times.size());
  for (auto it = residual.times.rbegin(); it != residual.times.rend(); ++it)
    opt.snapshot_times.push_back(tau_end - *it);

  WaveSolution sol = run_stepper(system, config, opt, tau_end);

  // Re-index by the original time t = tau_end - s, ascending.
  std::reverse(sol.frames.begin(), sol.frames.end());
  sol.times.assign(residual.times.begin(), residual.times.end());
  return sol;
}

const Mesh& require_mesh(const WaveSolution& solution) {
  if (!solution.mesh) throw ShapeError("wave solution carries no mesh");
  return *solution.mesh;
}

DataSet record(const WaveSolution& solution, const std::vector<Vec2>& receivers,
               const std::vector<double>& times) {
  const Mesh& mesh = require_mesh(solution);
  if (solution.times.empty()) throw ShapeError("wave solution has no stored time levels");

  std::vector<Mesh::InterpStencil> stencils;
  stencils.reserve(receivers.size());
  for (const auto& r : receivers) stencils.push_back(mesh.locate(r));

  DataSet data;
  data.receivers = receivers;
  data.times = times;
  data.values.resize(static_cast<long>(receivers.size()), static_cast<long>(times.size()));

  for (std::size_t m = 0; m < times.size(); ++m) {
    const double t = times[m];
    auto it = std::lower_bound(solution.times.begin(), solution.times.end(), t - kTimeTol);
    if (it == solution.times.end())
      throw ShapeError("requested time " + std::to_string(t) + " beyond stored levels");
    const long hi = std::distance(solution.times.begin(), it);
    long lo = hi;
    double w = 0.0;
    if (std::abs(solution.times[hi] - t) > kTimeTol) {
      if (hi == 0) throw ShapeError("requested time " + std::to_string(t) +
                                    " before first stored level");
      lo = hi - 1;
      w = (t - solution.times[lo]) / (solution.times[hi] - solution.times[lo]);
    }
    for (std::size_t k = 0; k < receivers.size(); ++k) {
      const auto& st = stencils[k];
      double v_lo = 0.0, v_hi = 0.0;
      for (int i = 0; i < 3; ++i) {
        v_lo += st.weights[i] * solution.frames[lo][st.nodes[i]];
        v_hi += st.weights[i] * solution.frames[hi][st.nodes[i]];
      }
      data.values(static_cast<long>(k), static_cast<long>(m)) = (1.0 - w) * v_lo + w * v_hi;
    }
  }
  return data;
}

}  // namespace shearbayes
