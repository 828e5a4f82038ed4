#include "shearbayes/posterior.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "shearbayes/errors.hpp"

namespace shearbayes {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

ForwardOperator::ForwardOperator(SimulationConfig config, std::vector<double> observe_times)
    : config_(std::move(config)), times_(std::move(observe_times)) {
  if (times_.empty()) throw ConfigError("forward operator needs observation times");
  config_.validate(config_.c_background);
  ops_ = std::make_shared<MeshOperators>(build_mesh(config_), config_);
}

Eigen::VectorXd ForwardOperator::predict(const ParameterVector& nu) const {
  const SpeedField speed = rasterize(nu, ops_->mesh(), config_.c_background);
  const FEMSystem system = assemble(ops_, speed);
  SolveOptions opt;
  opt.snapshot_times = times_;
  const WaveSolution u = solve_forward(system, config_, opt);
  const DataSet pred = record(u, config_.receivers, times_);
  ++solves_;
  return pred.flatten();
}

double log_likelihood(const Eigen::VectorXd& pred, const Eigen::VectorXd& d,
                      const NoiseCov& noise) {
  if (pred.size() != d.size())
    throw ShapeError("prediction and data lengths differ: " + std::to_string(pred.size()) +
                     " vs " + std::to_string(d.size()));
  if (!(noise.sigma > 0.0)) throw DomainError("noise sigma must be positive");
  const double n = static_cast<double>(d.size());
  const double misfit = (pred - d).squaredNorm();
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - n * std::log(noise.sigma) -
         misfit / (2.0 * noise.sigma * noise.sigma);
}

double log_prior(const ParameterVector& nu, const PriorSpec& prior) {
  if (!admissible(nu, prior.rule(), prior.domain())) return kNegInf;
  if (nu.variant() == ShapeVariant::smooth) return prior.log_density_sampling(nu.flat());

  // Log-Gaussian radii: density over r_j includes the change of variables;
  // mu is reported over gamma = log mu (the sampled variable).
  const Eigen::VectorXd y = prior.to_sampling(nu);
  double jacobian = 0.0;
  const int bs = nu.block_size();
  for (int l = 0; l < nu.block_count(); ++l) {
    const long base = static_cast<long>(l) * bs;
    for (int j = 0; j < nu.order(); ++j) jacobian += y[base + 2 + j];  // log r_j
  }
  return prior.log_density_sampling(y) - jacobian;
}

Posterior::Posterior(std::shared_ptr<const ForwardOperator> op, PriorSpec prior,
                     DataSet d_odd, NoiseCov noise)
    : op_(std::move(op)), prior_(std::move(prior)), d_odd_(std::move(d_odd)), noise_(noise) {
  d_odd_.validate();
  if (!(noise_.sigma > 0.0)) throw ConfigError("noise sigma must be positive");
  d_flat_ = d_odd_.flatten();
  if (d_flat_.size() != op_->observation_dim())
    throw ShapeError("odd-split data does not match the forward operator layout");
}

PosteriorEval Posterior::evaluate(const ParameterVector& nu) const {
  PosteriorEval eval;
  if (!admissible(nu, prior_.rule(), prior_.domain())) {
    eval.log_prior = kNegInf;
    eval.log_likelihood = 0.0;
    eval.log_posterior = kNegInf;
    return eval;
  }
  eval.admissible = true;
  const Eigen::VectorXd pred = op_->predict(nu);
  eval.forward_solves = 1;
  eval.log_likelihood = log_likelihood(pred, d_flat_, noise_);
  eval.log_prior = log_prior(nu, prior_);
  eval.log_posterior = eval.log_likelihood + eval.log_prior;
  return eval;
}

double Posterior::log_density_sampling(const Eigen::VectorXd& y) const {
  const ParameterVector nu = prior_.to_raw(y);
  if (!admissible(nu, prior_.rule(), prior_.domain())) return kNegInf;
  const Eigen::VectorXd pred = op_->predict(nu);
  return log_likelihood(pred, d_flat_, noise_) + prior_.log_density_sampling(y);
}

Target make_target(std::shared_ptr<const Posterior> posterior, std::uint64_t) {
  Target target;
  target.dim = posterior->prior().dim();
  target.log_density = [posterior](const Eigen::VectorXd& y) {
    return posterior->log_density_sampling(y);
  };
  target.sample_prior = [posterior](std::mt19937_64& rng) {
    return posterior->prior().sample(rng);
  };
  target.feasible = [posterior](const Eigen::VectorXd& y) {
    const auto& prior = posterior->prior();
    return admissible(prior.to_raw(y), prior.rule(), prior.domain());
  };
  target.reject_reason = [posterior](const Eigen::VectorXd& y) {
    const auto& prior = posterior->prior();
    return check_admissible(prior.to_raw(y), prior.rule(), prior.domain()).first_failure();
  };
  return target;
}

}  // namespace shearbayes
