#include "shearbayes/topo_prior.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <string>

#include "shearbayes/errors.hpp"

namespace shearbayes {

namespace {
constexpr double kTimeTol = 1e-9;
}

void TopoConfig::validate(int receiver_count) const {
  if (!(C0 > 0.0 && C0 < 1.0)) throw ConfigError("C0 must lie in (0,1)");
  if (fractions.empty()) throw ConfigError("at least one activation fraction required");
  for (const auto& f : fractions) {
    if (f.empty()) throw ConfigError("empty activation fraction");
    for (int k : f)
      if (k < 0 || k >= receiver_count)
        throw ConfigError("fraction references receiver " + std::to_string(k));
  }
  if (peak_min_separation < 0.0) throw ConfigError("peak_min_separation must be >= 0");
}

std::vector<std::vector<int>> TopoConfig::default_fractions(int receiver_count) {
  const int K = receiver_count;
  if (K < 3) return {std::vector<int>(1, 0)};
  const int w = std::max(2, (K + 1) / 2);
  auto window = [K, w](int start) {
    std::vector<int> idx;
    for (int k = start; k < std::min(start + w, K); ++k) idx.push_back(k);
    return idx;
  };
  return {window(0), window((K - w) / 2), window(K - w)};
}

PriorSpec::PriorSpec(ParameterVector nu0, Eigen::MatrixXd cov, AdmissibilityRule rule,
                     Rect domain)
    : nu0_(std::move(nu0)), cov_(std::move(cov)), rule_(rule), domain_(domain) {
  const long n = nu0_.dim();
  if (cov_.rows() != n || cov_.cols() != n)
    throw ShapeError("prior covariance dimension does not match the mean");

  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    cov_ += 1e-10 * Eigen::MatrixXd::Identity(n, n);
    llt.compute(cov_);
    if (llt.info() != Eigen::Success)
      throw NumericalError("prior covariance is not positive definite (after jitter)");
  }
  chol_lower_ = llt.matrixL();
  cov_inv_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
  log_det_ = 2.0 * chol_lower_.diagonal().array().log().sum();
}

Eigen::VectorXd PriorSpec::to_sampling(const ParameterVector& nu) const {
  if (nu.variant() == ShapeVariant::smooth) return nu.flat();
  Eigen::VectorXd y = nu.flat();
  const int bs = nu.block_size();
  for (int l = 0; l < nu.block_count(); ++l) {
    const long base = static_cast<long>(l) * bs;
    for (long i = base + 2; i < base + bs; ++i) {
      if (!(y[i] > 0.0))
        throw DomainError("log transform of a nonpositive radius or mu");
      y[i] = std::log(y[i]);
    }
  }
  return y;
}

ParameterVector PriorSpec::to_raw(const Eigen::VectorXd& y) const {
  if (y.size() != nu0_.dim()) throw ShapeError("sampling vector has the wrong dimension");
  if (variant() == ShapeVariant::smooth) return nu0_.with_flat(y);
  Eigen::VectorXd flat = y;
  const int bs = nu0_.block_size();
  for (int l = 0; l < nu0_.block_count(); ++l) {
    const long base = static_cast<long>(l) * bs;
    for (long i = base + 2; i < base + bs; ++i) flat[i] = std::exp(flat[i]);
  }
  return nu0_.with_flat(flat);
}

Eigen::VectorXd PriorSpec::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(dim());
  for (long i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return mean_sampling() + chol_lower_ * z;
}

double PriorSpec::log_density_sampling(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd d = y - mean_sampling();
  const double quad = d.dot(cov_inv_ * d);
  const double n = static_cast<double>(dim());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_ - 0.5 * quad;
}

FEMSystem homogeneous_system(const SimulationConfig& config) {
  auto mesh = build_mesh(config);
  SpeedField uniform;
  uniform.c2 = Eigen::VectorXd::Constant(mesh->element_count(),
                                         config.c_background * config.c_background);
  return assemble(mesh, uniform, config);
}

WaveSolution forward_homogeneous(const SimulationConfig& config) {
  return forward_homogeneous(homogeneous_system(config), config);
}

WaveSolution forward_homogeneous(const FEMSystem& system, const SimulationConfig& config) {
  config.validate(config.c_background);
  SolveOptions opt;
  opt.snapshot_times = config.record_times;
  return solve_forward(system, config, opt);
}

WaveSolution adjoint_from_data(const WaveSolution& U, const DataSet& d_even,
                               const std::vector<int>& active,
                               const SimulationConfig& config) {
  auto ops = std::make_shared<MeshOperators>(U.mesh, config);
  SpeedField uniform;
  uniform.c2 = Eigen::VectorXd::Constant(U.mesh->element_count(),
                                         config.c_background * config.c_background);
  return adjoint_from_data(assemble(ops, uniform), U, d_even, active, config);
}

WaveSolution adjoint_from_data(const FEMSystem& system, const WaveSolution& U,
                               const DataSet& d_even, const std::vector<int>& active,
                               const SimulationConfig& config) {
  d_even.validate();
  if (!d_even.times.empty() && (d_even.times.front() < config.tau_in - kTimeTol ||
                                d_even.times.back() > config.effective_tau_end() + kTimeTol))
    throw ShapeError("even-split times must lie in [tau_in, tau_end]");
  for (int k : active)
    if (k < 0 || k >= d_even.receiver_count())
      throw ShapeError("active receiver index out of range");

  const DataSet u_rec = record(U, d_even.receivers, d_even.times);
  DataSet residual = d_even;
  residual.values = Eigen::MatrixXd::Zero(d_even.values.rows(), d_even.values.cols());
  for (int k : active)
    residual.values.row(k) = -(u_rec.values.row(k) - d_even.values.row(k));
  return solve_adjoint(system, residual, config);
}

EnergyField energy(const WaveSolution& U, const WaveSolution& P,
                   const SimulationConfig& config) {
  const Mesh& mu = require_mesh(U);
  const Mesh& mp = require_mesh(P);
  if (mu.node_count() != mp.node_count() || mu.nx_cells() != mp.nx_cells())
    throw ShapeError("energy requires U and P on the same mesh");

  // Time levels retained by both solutions inside [tau_in, tau_end].
  std::vector<double> times;
  std::vector<std::size_t> iu, ip;
  const double lo = config.tau_in - kTimeTol;
  const double hi = config.effective_tau_end() + kTimeTol;
  std::size_t j = 0;
  for (std::size_t i = 0; i < U.times.size(); ++i) {
    const double t = U.times[i];
    if (t < lo || t > hi) continue;
    while (j < P.times.size() && P.times[j] < t - kTimeTol) ++j;
    if (j < P.times.size() && std::abs(P.times[j] - t) <= kTimeTol) {
      times.push_back(t);
      iu.push_back(i);
      ip.push_back(j);
      ++j;
    }
  }
  if (times.size() < 2)
    throw ShapeError("U and P share fewer than two time levels in [tau_in, tau_end]");

  EnergyField field;
  field.mesh = U.mesh;
  field.values = Eigen::VectorXd::Zero(mu.node_count());
  for (std::size_t n = 0; n < times.size(); ++n) {
    const double w_lo = (n == 0) ? 0.0 : 0.5 * (times[n] - times[n - 1]);
    const double w_hi = (n + 1 == times.size()) ? 0.0 : 0.5 * (times[n + 1] - times[n]);
    const double w = w_lo + w_hi;
    const auto& u = U.frames[iu[n]];
    const auto& p = P.frames[ip[n]];
    field.values.array() += w * u.array().square() * p.array().square();
  }
  return field;
}

std::vector<std::uint8_t> threshold(const EnergyField& field, double C0) {
  if (!(C0 > 0.0 && C0 < 1.0)) throw ConfigError("C0 must lie in (0,1)");
  const double max_e = field.values.maxCoeff();
  if (!(max_e > 0.0))
    throw NumericalError("energy field is identically zero: no peaks to exploit");
  const double cut = (1.0 - C0) * max_e;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(field.values.size()), 0);
  for (long i = 0; i < field.values.size(); ++i) mask[static_cast<std::size_t>(i)] = field.values[i] > cut;
  return mask;
}

namespace {

struct Component {
  double cx = 0.0, cy = 0.0;  // centroid
  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  double peak = 0.0;
};

std::vector<Component> components(const EnergyField& field,
                                  const std::vector<std::uint8_t>& mask) {
  const Mesh& mesh = *field.mesh;
  const int nx = mesh.nx_cells() + 1;
  const int ny = mesh.ny_cells() + 1;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<Component> out;

  for (int start = 0; start < nx * ny; ++start) {
    if (!mask[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) continue;
    Component comp;
    comp.min_x = comp.min_y = std::numeric_limits<double>::max();
    comp.max_x = comp.max_y = std::numeric_limits<double>::lowest();
    double sx = 0.0, sy = 0.0;
    long count = 0;

    std::deque<int> queue{start};
    seen[static_cast<std::size_t>(start)] = 1;
    while (!queue.empty()) {
      const int id = queue.front();
      queue.pop_front();
      const int i = id % nx;
      const int j = id / nx;
      const Vec2 p = mesh.node(i, j);
      sx += p.x;
      sy += p.y;
      ++count;
      comp.min_x = std::min(comp.min_x, p.x);
      comp.max_x = std::max(comp.max_x, p.x);
      comp.min_y = std::min(comp.min_y, p.y);
      comp.max_y = std::max(comp.max_y, p.y);
      comp.peak = std::max(comp.peak, field.values[id]);

      const int nbr[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& q : nbr) {
        if (q[0] < 0 || q[0] >= nx || q[1] < 0 || q[1] >= ny) continue;
        const int nid = q[1] * nx + q[0];
        if (mask[static_cast<std::size_t>(nid)] && !seen[static_cast<std::size_t>(nid)]) {
          seen[static_cast<std::size_t>(nid)] = 1;
          queue.push_back(nid);
        }
      }
    }
    comp.cx = sx / count;
    comp.cy = sy / count;
    out.push_back(comp);
  }
  return out;
}

}  // namespace

std::vector<CircleGuess> detect(const std::vector<EnergyField>& fields,
                                const TopoConfig& topo) {
  if (fields.empty()) throw ConfigError("detect requires at least one energy field");

  std::vector<CircleGuess> candidates;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const auto mask = threshold(fields[f], topo.C0);
    const Mesh& mesh = *fields[f].mesh;
    const double floor_radius = 0.5 * std::min(mesh.hx(), mesh.hy());
    for (const auto& comp : components(fields[f], mask)) {
      CircleGuess g;
      g.cx = comp.cx;
      g.cy = comp.cy;
      const double extent = std::min(comp.max_x - comp.min_x, comp.max_y - comp.min_y);
      g.rho0 = std::max(0.5 * extent, floor_radius);
      g.fraction_id = static_cast<int>(f);
      g.peak = comp.peak;
      candidates.push_back(g);
    }
  }
  if (candidates.empty())
    throw NumericalError("no thresholded component found in any energy field");

  std::sort(candidates.begin(), candidates.end(), [](const CircleGuess& a, const CircleGuess& b) {
    if (a.peak != b.peak) return a.peak > b.peak;
    if (a.fraction_id != b.fraction_id) return a.fraction_id < b.fraction_id;
    return std::make_pair(a.cx, a.cy) < std::make_pair(b.cx, b.cy);
  });

  std::vector<CircleGuess> kept;
  for (const auto& cand : candidates) {
    const bool duplicate =
        std::any_of(kept.begin(), kept.end(), [&](const CircleGuess& k) {
          return std::hypot(k.cx - cand.cx, k.cy - cand.cy) < topo.peak_min_separation;
        });
    if (!duplicate) kept.push_back(cand);
  }
  return kept;
}

double matern_cov(double theta_i, double theta_j, const MaternParams& p) {
  if (!(p.nu > 0.0 && p.rho > 0.0 && p.sigma > 0.0))
    throw ConfigError("Matern parameters must be positive");
  const double ai = 2.0 * std::numbers::pi * theta_i;
  const double aj = 2.0 * std::numbers::pi * theta_j;
  const double dx = std::cos(ai) - std::cos(aj);
  const double dy = std::sin(ai) - std::sin(aj);
  const double d = std::hypot(dx, dy);
  if (d <= 0.0) return p.sigma * p.sigma;

  if (std::abs(p.nu - 1.5) < 1e-12) {
    const double s = std::sqrt(3.0) * d / p.rho;
    return p.sigma * p.sigma * (1.0 + s) * std::exp(-s);
  }
  const double s = std::sqrt(2.0 * p.nu) * d / p.rho;
  return p.sigma * p.sigma * std::pow(2.0, 1.0 - p.nu) / std::tgamma(p.nu) *
         std::pow(s, p.nu) * std::cyl_bessel_k(p.nu, s);
}

PriorSpec build_prior(const std::vector<CircleGuess>& circles, ShapeVariant variant,
                      int order, const PriorHyper& hyper) {
  if (circles.empty()) throw ConfigError("build_prior requires at least one circle");
  const int L = static_cast<int>(circles.size());

  if (variant == ShapeVariant::smooth) {
    const int Q = order;
    std::vector<SmoothBlock> blocks;
    Eigen::VectorXd diag(static_cast<long>(L) * (2 * Q + 4));
    long at = 0;
    for (const auto& c : circles) {
      SmoothBlock blk;
      blk.cx = c.cx;
      blk.cy = c.cy;
      blk.a0 = c.rho0;
      blk.a = Eigen::VectorXd::Zero(Q);
      blk.b = Eigen::VectorXd::Zero(Q);
      blk.mu = hyper.mu_background;
      blocks.push_back(blk);

      diag[at++] = hyper.var_center;
      diag[at++] = hyper.var_center;
      diag[at++] = hyper.var_a0;
      for (int q = 1; q <= Q; ++q) {
        const double v = hyper.var_a0 / std::pow(1.0 + q * q, hyper.fourier_decay_s);
        diag[at++] = v;  // b_q
        diag[at++] = v;  // a_q
      }
      diag[at++] = hyper.var_mu;
    }
    return PriorSpec(ParameterVector::from_smooth(blocks), diag.asDiagonal(), hyper.rule,
                     hyper.domain);
  }

  const int Z = order;
  std::vector<PiecewiseBlock> blocks;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<long>(L) * (Z + 3),
                                              static_cast<long>(L) * (Z + 3));
  Eigen::MatrixXd matern(Z, Z);
  for (int i = 0; i < Z; ++i)
    for (int j = 0; j < Z; ++j)
      matern(i, j) = matern_cov(static_cast<double>(i) / Z, static_cast<double>(j) / Z,
                                hyper.matern);

  long base = 0;
  for (const auto& c : circles) {
    PiecewiseBlock blk;
    blk.cx = c.cx;
    blk.cy = c.cy;
    blk.r = Eigen::VectorXd::Constant(Z, c.rho0);
    blk.mu = hyper.mu_background;
    blocks.push_back(blk);

    cov(base, base) = hyper.var_center;
    cov(base + 1, base + 1) = hyper.var_center;
    cov.block(base + 2, base + 2, Z, Z) = matern;
    cov(base + 2 + Z, base + 2 + Z) = hyper.var_mu;  // variance of gamma = log mu
    base += Z + 3;
  }
  return PriorSpec(ParameterVector::from_piecewise(blocks), std::move(cov), hyper.rule,
                   hyper.domain);
}

C0Selection select_C0(const EnergyField& field, const DataSet& d_even,
                      const SimulationConfig& config, double initial_C0,
                      int max_halvings) {
  const FEMSystem homog = homogeneous_system(config);
  const Mesh& mesh = homog.mesh();
  if (mesh.node_count() != field.mesh->node_count())
    throw ShapeError("energy field mesh does not match the configuration mesh");

  SolveOptions opt;
  opt.snapshot_times = d_even.times;
  auto misfit = [&](const FEMSystem& sys) {
    const WaveSolution u = solve_forward(sys, config, opt);
    const DataSet pred = record(u, d_even.receivers, d_even.times);
    return 0.5 * (pred.values - d_even.values).squaredNorm();
  };

  C0Selection sel;
  sel.J_empty = misfit(homog);

  const double bg2 = config.c_background * config.c_background;
  const double interior = 2.0 * bg2;  // interior heuristic, true contrast unknown
  double c0 = initial_C0;
  for (int attempt = 0; attempt <= max_halvings; ++attempt) {
    const auto mask = threshold(field, c0);
    SpeedField speed;
    speed.c2.resize(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
      const auto nodes = mesh.element(e);
      int in = 0;
      for (int v : nodes) in += mask[static_cast<std::size_t>(v)] ? 1 : 0;
      speed.c2[e] = (in >= 2) ? interior : bg2;
    }
    sel.C0 = c0;
    sel.J_omega0 = misfit(assemble(homog.ops, speed));
    if (sel.J_omega0 < sel.J_empty) {
      sel.satisfied = true;
      return sel;
    }
    c0 *= 0.5;
  }
  sel.satisfied = false;  // keep the smallest tested C0; caller may warn
  return sel;
}

}  // namespace shearbayes
