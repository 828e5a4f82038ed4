#include "shearbayes/map_laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shearbayes/errors.hpp"
#include "shearbayes/parallel.hpp"
#include "shearbayes/rng.hpp"

namespace shearbayes {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Check (i) of the damped iteration: positive radius on the admissibility
/// test grid and mu above the optimizer's lower bound.
bool shape_checks(const ParameterVector& nu, const PriorSpec& prior,
                  const OptimizerConfig& opt) {
  const int samples = prior.rule().resolve_samples(nu);
  for (int l = 0; l < nu.block_count(); ++l) {
    if (!(nu.mu(l) > opt.mu_lower())) return false;
    for (int s = 0; s < samples; ++s)
      if (nu.radius(l, static_cast<double>(s) / samples) <= 0.0) return false;
  }
  return true;
}

std::vector<int> mu_indices(const ParameterVector& nu) {
  std::vector<int> idx;
  for (int l = 0; l < nu.block_count(); ++l) idx.push_back(nu.mu_index(l));
  return idx;
}

}  // namespace

Eigen::VectorXd FDSteps::for_vector(const ParameterVector& nu) const {
  if (nu.variant() != ShapeVariant::smooth)
    throw ShapeError("finite-difference steps are defined for the smooth variant");
  Eigen::VectorXd eta(nu.dim());
  const int bs = nu.block_size();
  for (int l = 0; l < nu.block_count(); ++l) {
    const long base = static_cast<long>(l) * bs;
    eta[base] = center;
    eta[base + 1] = center;
    eta[base + 2] = a0;
    for (long i = base + 3; i < base + bs - 1; ++i) eta[i] = fourier;
    eta[base + bs - 1] = mu;
  }
  return eta;
}

double cost(const ForwardMap& f, const ParameterVector& nu, double lambda,
            const PriorSpec& prior, const Eigen::VectorXd& d, const NoiseCov& noise) {
  if (!admissible(nu, prior.rule(), prior.domain()))
    throw ContractViolation("cost requires an admissible parameter vector");
  const Eigen::VectorXd r = f(nu) - d;
  const Eigen::VectorXd dn = nu.flat() - prior.nu0().flat();
  return r.squaredNorm() / (2.0 * noise.sigma * noise.sigma) +
         0.5 * lambda * dn.dot(prior.cov_inverse() * dn);
}

Eigen::MatrixXd fd_jacobian(const ForwardMap& f, const ParameterVector& nu,
                            const Eigen::VectorXd& base_prediction,
                            const Eigen::VectorXd& eta, const PriorSpec& prior,
                            int threads) {
  const int n = nu.dim();
  if (eta.size() != n) throw ShapeError("eta length does not match the parameter dimension");
  Eigen::MatrixXd F(base_prediction.size(), n);

  parallel_for(n, threads, [&](int i) {
    double step = eta[i];
    ParameterVector cand = nu;
    bool ok = false;
    for (int shrink = 0; shrink <= 4; ++shrink) {
      cand.flat()[i] = nu.flat()[i] + step;
      if (admissible(cand, prior.rule(), prior.domain())) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok)
      throw NumericalError("finite-difference perturbation of coordinate " +
                           std::to_string(i) + " stays inadmissible after shrinking");
    F.col(i) = (f(cand) - base_prediction) / step;
  });
  return F;
}

Eigen::MatrixXd fd_jacobian(const ForwardMap& f, const ParameterVector& nu,
                            const FDSteps& eta, const PriorSpec& prior, int threads) {
  return fd_jacobian(f, nu, f(nu), eta.for_vector(nu), prior, threads);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> gn_gradient_hessian(
    const Eigen::MatrixXd& F, const Eigen::VectorXd& residual, double lambda,
    const PriorSpec& prior, const ParameterVector& nu, const NoiseCov& noise) {
  if (F.rows() != residual.size() || F.cols() != nu.dim())
    throw ShapeError("Jacobian shape does not match residual/parameters");
  const double inv_s2 = 1.0 / (noise.sigma * noise.sigma);
  const Eigen::VectorXd dn = nu.flat() - prior.nu0().flat();
  Eigen::VectorXd g = inv_s2 * (F.transpose() * residual) +
                      lambda * (prior.cov_inverse() * dn);
  Eigen::MatrixXd H = inv_s2 * (F.transpose() * F) + lambda * prior.cov_inverse();
  return {std::move(g), std::move(H)};
}

Eigen::VectorXd calibrate_eta(const ForwardMap& f, const ParameterVector& nu0,
                              const Eigen::VectorXd& eta, const PriorSpec& prior,
                              int threads) {
  const Eigen::VectorXd base = f(nu0);
  Eigen::VectorXd out = eta;
  parallel_for(nu0.dim(), threads, [&](int i) {
    const double h = eta[i];
    ParameterVector p1 = nu0, p2 = nu0;
    p1.flat()[i] += h;
    p2.flat()[i] += 2.0 * h;
    if (!admissible(p1, prior.rule(), prior.domain()) ||
        !admissible(p2, prior.rule(), prior.domain()))
      return;  // keep the default step
    const Eigen::VectorXd f1 = f(p1);
    const Eigen::VectorXd f2 = f(p2);
    const Eigen::VectorXd d1 = (f1 - base) / h;
    const Eigen::VectorXd d2 = (f2 - 2.0 * f1 + base) / (h * h);
    double acc = 0.0;
    long count = 0;
    for (long k = 0; k < d1.size(); ++k) {
      if (std::abs(d2[k]) > 1e-14) {
        acc += std::abs(d1[k] / d2[k]);
        ++count;
      }
    }
    if (count == 0) return;
    // Step proportional to the locally linear range, clamped near default.
    const double suggestion = 0.1 * acc / static_cast<double>(count);
    out[i] = std::clamp(suggestion, 0.25 * h, 4.0 * h);
  });
  return out;
}

namespace {

struct CostEvaluator {
  const ForwardMap& f;
  const PriorSpec& prior;
  const Eigen::VectorXd& d;
  const NoiseCov& noise;

  double misfit_from(const Eigen::VectorXd& pred) const {
    return (pred - d).squaredNorm() / (2.0 * noise.sigma * noise.sigma);
  }
  double prior_term(const ParameterVector& nu, double lambda) const {
    const Eigen::VectorXd dn = nu.flat() - prior.nu0().flat();
    return 0.5 * lambda * dn.dot(prior.cov_inverse() * dn);
  }
  double total(const Eigen::VectorXd& pred, const ParameterVector& nu, double lambda) const {
    return misfit_from(pred) + prior_term(nu, lambda);
  }
};

}  // namespace

MAPResult lm_solve(const ForwardMap& f, const OptimizerConfig& opt, const PriorSpec& prior,
                   const Eigen::VectorXd& d_odd, const NoiseCov& noise) {
  if (prior.variant() != ShapeVariant::smooth)
    throw ShapeError("the optimizer supports the smooth parametrization only");
  if (!(noise.sigma > 0.0)) throw ConfigError("noise sigma must be positive");

  MAPResult res;
  res.nu_map = prior.nu0();
  if (!admissible(res.nu_map, prior.rule(), prior.domain()))
    throw ContractViolation("lm_solve requires an admissible starting point");

  const CostEvaluator eval{f, prior, d_odd, noise};
  double lambda = opt.lambda0 > 0.0 ? opt.lambda0 : 0.1 / (noise.sigma * noise.sigma);
  double omega = opt.omega0;

  Eigen::VectorXd eta = opt.eta.for_vector(res.nu_map);
  if (opt.adaptive_eta) eta = calibrate_eta(f, res.nu_map, eta, prior, opt.threads);

  Eigen::VectorXd pred = f(res.nu_map);
  double cur_cost = eval.total(pred, res.nu_map, lambda);
  res.cost_history.push_back(cur_cost);
  res.omega_history.push_back(omega);
  res.lambda_history.push_back(lambda);

  auto damped_step = [&](const Eigen::VectorXd& g, const Eigen::MatrixXd& H,
                         double w) -> Eigen::VectorXd {
    Eigen::MatrixXd damped = H;
    damped.diagonal() += w * H.diagonal();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    if (ldlt.info() != Eigen::Success)
      throw NumericalError("damped normal equations are not solvable");
    return ldlt.solve(-g);
  };

  // Main double iteration over all coordinates.
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    res.outer_iterations = outer + 1;
    const Eigen::MatrixXd F = fd_jacobian(f, res.nu_map, pred, eta, prior, opt.threads);
    const auto [g, H] = gn_gradient_hessian(F, pred - d_odd, lambda, prior, res.nu_map, noise);

    double accepted_cost = kInf;
    Eigen::VectorXd cand_pred;
    ParameterVector cand;
    int rejects = 0;
    while (true) {
      cand = res.nu_map.with_flat(res.nu_map.flat() + damped_step(g, H, omega));
      double cand_cost = kInf;
      if (shape_checks(cand, prior, opt) && admissible(cand, prior.rule(), prior.domain())) {
        cand_pred = f(cand);
        cand_cost = eval.total(cand_pred, cand, lambda);
      }
      if (cand_cost < cur_cost) {
        accepted_cost = cand_cost;
        break;
      }
      omega *= opt.omega_grow;
      if (++rejects >= opt.max_rejects)
        throw NumericalError("optimizer stalled: " + std::to_string(opt.max_rejects) +
                             " consecutive damping increases");
    }

    res.nu_map = cand;
    pred = cand_pred;
    const double rel = (cur_cost - accepted_cost) / std::abs(cur_cost);
    cur_cost = accepted_cost;
    res.cost_history.push_back(accepted_cost);
    omega /= opt.omega_shrink;
    const double lambda_next = std::max(lambda / opt.lambda_decay, 1.0);
    res.omega_history.push_back(omega);
    res.lambda_history.push_back(lambda_next);

    if (rel < opt.tol) {
      res.converged = true;
      break;
    }
    if (lambda_next != lambda) {
      lambda = lambda_next;
      cur_cost = eval.total(pred, res.nu_map, lambda);
    }
  }

  // mu-only refinement on the converged iterate, at lambda = 1.
  if (res.converged) {
    lambda = 1.0;
    cur_cost = eval.total(pred, res.nu_map, lambda);
    const std::vector<int> idx = mu_indices(res.nu_map);
    const int nm = static_cast<int>(idx.size());

    for (int iter = 0; iter < opt.max_outer; ++iter) {
      Eigen::VectorXd eta_mu = Eigen::VectorXd::Constant(nm, opt.eta.mu);
      Eigen::MatrixXd Fm(pred.size(), nm);
      parallel_for(nm, opt.threads, [&](int k) {
        ParameterVector p = res.nu_map;
        p.flat()[idx[static_cast<std::size_t>(k)]] += eta_mu[k];
        if (!admissible(p, prior.rule(), prior.domain()))
          throw NumericalError("mu refinement perturbation is inadmissible");
        Fm.col(k) = (f(p) - pred) / eta_mu[k];
      });

      const double inv_s2 = 1.0 / (noise.sigma * noise.sigma);
      const Eigen::VectorXd dn = res.nu_map.flat() - prior.nu0().flat();
      const Eigen::VectorXd prior_grad = prior.cov_inverse() * dn;
      Eigen::VectorXd gm(nm);
      Eigen::MatrixXd Hm = inv_s2 * (Fm.transpose() * Fm);
      for (int k = 0; k < nm; ++k) {
        gm[k] = inv_s2 * Fm.col(k).dot(pred - d_odd) + lambda * prior_grad[idx[static_cast<std::size_t>(k)]];
        for (int k2 = 0; k2 < nm; ++k2)
          Hm(k, k2) += lambda * prior.cov_inverse()(idx[static_cast<std::size_t>(k)],
                                                    idx[static_cast<std::size_t>(k2)]);
      }

      double change = 0.0;
      int rejects = 0;
      while (true) {
        Eigen::MatrixXd damped = Hm;
        damped.diagonal() += omega * Hm.diagonal();
        const Eigen::VectorXd xi = Eigen::LDLT<Eigen::MatrixXd>(damped).solve(-gm);
        ParameterVector candm = res.nu_map;
        for (int k = 0; k < nm; ++k) candm.flat()[idx[static_cast<std::size_t>(k)]] += xi[k];

        double cand_cost = kInf;
        Eigen::VectorXd cand_pred;
        if (shape_checks(candm, prior, opt) &&
            admissible(candm, prior.rule(), prior.domain())) {
          cand_pred = f(candm);
          cand_cost = eval.total(cand_pred, candm, lambda);
        }
        if (cand_cost < cur_cost) {
          res.nu_map = candm;
          pred = cand_pred;
          cur_cost = cand_cost;
          res.cost_history.push_back(cand_cost);
          omega /= opt.omega_shrink;
          change = xi.cwiseAbs().maxCoeff();
          break;
        }
        omega *= opt.omega_grow;
        if (++rejects >= opt.max_rejects) {
          change = 0.0;  // no improving mu step exists at this resolution
          break;
        }
      }
      if (change < opt.mu_refine_threshold) break;
    }
  }

  // Posterior covariance at the exact posterior (lambda = 1, no damping).
  res.F = fd_jacobian(f, res.nu_map, pred, eta, prior, opt.threads);
  const LaplaceCov lap = laplace_cov(res.F, noise, prior);
  res.gamma_pt = lap.cov;
  return res;
}

LaplaceCov laplace_cov(const Eigen::MatrixXd& F, const NoiseCov& noise,
                       const PriorSpec& prior) {
  if (!(noise.sigma > 0.0)) throw ConfigError("noise sigma must be positive");
  const int n = static_cast<int>(F.cols());
  if (prior.dim() != n) throw ShapeError("Jacobian columns do not match the prior dimension");

  const Eigen::MatrixXd H =
      F.transpose() * F / (noise.sigma * noise.sigma) + prior.cov_inverse();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("Gauss-Newton Hessian factorization failed");

  LaplaceCov lap;
  lap.cov = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
  lap.cov = 0.5 * (lap.cov + lap.cov.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap.cov);
  if (eig.info() != Eigen::Success)
    throw NumericalError("posterior covariance eigendecomposition failed");
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig <= -1e-12 * std::abs(eig.eigenvalues().maxCoeff()))
    throw NumericalError("posterior covariance is not positive definite");
  lap.sqrt = eig.eigenvectors() *
             eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
             eig.eigenvectors().transpose();
  return lap;
}

long LaplaceSamples::admissible_count() const {
  long n = 0;
  for (auto flag : admissible) n += flag ? 1 : 0;
  return n;
}

Eigen::VectorXd laplace_draw(const ParameterVector& nu_map, const LaplaceCov& cov,
                             const Eigen::VectorXd& n) {
  if (n.size() != nu_map.dim()) throw ShapeError("normal vector has the wrong dimension");
  return nu_map.flat() + cov.sqrt * n;
}

LaplaceSamples sample_laplace(const ParameterVector& nu_map, const LaplaceCov& cov,
                              long count, std::uint64_t seed, const PriorSpec& prior) {
  if (count < 1) throw ConfigError("sample count must be at least 1");
  LaplaceSamples out;
  out.samples.resize(count, nu_map.dim());
  out.admissible.resize(static_cast<std::size_t>(count));

  auto rng = substream(seed, stream_tag::laplace);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd n(nu_map.dim());
  for (long i = 0; i < count; ++i) {
    for (long k = 0; k < n.size(); ++k) n[k] = normal(rng);
    const Eigen::VectorXd draw = laplace_draw(nu_map, cov, n);
    out.samples.row(i) = draw.transpose();
    out.admissible[static_cast<std::size_t>(i)] =
        admissible(nu_map.with_flat(draw), prior.rule(), prior.domain()) ? 1 : 0;
  }
  return out;
}

}  // namespace shearbayes
