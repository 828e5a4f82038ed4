#include "shearbayes/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "shearbayes/errors.hpp"
#include "shearbayes/parallel.hpp"
#include "shearbayes/rng.hpp"

namespace shearbayes {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int draw_partner(int self, int lo, int hi, std::mt19937_64& rng) {
  // Uniform on [lo, hi) excluding self when self lies in the range.
  const bool excludes = self >= lo && self < hi;
  std::uniform_int_distribution<int> uni(lo, hi - (excludes ? 2 : 1));
  int q = uni(rng);
  if (excludes && q >= self) ++q;
  return q;
}

}  // namespace

Eigen::MatrixXd Chain::pooled_post_burn() const {
  Eigen::MatrixXd pooled(post_burn_count(), dim);
  long at = 0;
  for (int w = 0; w < walkers; ++w)
    for (long s = burn_index; s < kept; ++s) pooled.row(at++) = samples.row(row(w, s));
  return pooled;
}

double draw_stretch(double a, std::mt19937_64& rng) {
  if (!(a > 1.0)) throw ConfigError("stretch parameter a must exceed 1");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double sqrt_a = std::sqrt(a);
  const double root = uni(rng) * (sqrt_a - 1.0 / sqrt_a) + 1.0 / sqrt_a;
  return root * root;
}

Ensemble init_ensemble(const Target& target, int walkers, std::uint64_t seed,
                       int max_tries) {
  if (walkers < 2) throw ConfigError("at least two walkers required");
  if (!target.sample_prior || !target.log_density)
    throw ConfigError("target must provide sample_prior and log_density");

  Ensemble ens;
  ens.states.resize(walkers, target.dim);
  ens.logp.resize(walkers);

  std::map<std::string, long> reasons;
  for (int w = 0; w < walkers; ++w) {
    auto rng = substream(seed, stream_tag::ensemble_init, static_cast<std::uint64_t>(w));
    bool placed = false;
    for (int attempt = 0; attempt < max_tries && !placed; ++attempt) {
      Eigen::VectorXd y = target.sample_prior(rng);
      if (target.feasible && !target.feasible(y)) {
        ++reasons[target.reject_reason ? target.reject_reason(y) : "infeasible state"];
        continue;
      }
      const double lp = target.log_density(y);
      if (!std::isfinite(lp)) {
        ++reasons[target.reject_reason ? target.reject_reason(y) : "zero posterior density"];
        continue;
      }
      ens.states.row(w) = y.transpose();
      ens.logp[w] = lp;
      placed = true;
    }
    if (!placed) {
      std::string dominant = "unknown";
      long best = -1;
      for (const auto& [name, count] : reasons)
        if (count > best) {
          best = count;
          dominant = name;
        }
      throw NumericalError("ensemble initialization failed after " +
                           std::to_string(max_tries) + " tries per walker; most frequent: " +
                           dominant);
    }
  }
  return ens;
}

namespace {

struct Proposal {
  Eigen::VectorXd state;
  double logp = kNegInf;
  double log_accept_bias = 0.0;  // (d-1) log z for stretch moves
  double accept_uniform = 1.0;
};

Proposal propose_stretch(const Ensemble& ens, int w, int partner_lo, int partner_hi,
                         const Target& target, const SamplerConfig& cfg,
                         std::mt19937_64& rng) {
  Proposal prop;
  const int q = draw_partner(w, partner_lo, partner_hi, rng);
  const double z = draw_stretch(cfg.a, rng);
  const Eigen::VectorXd cur = ens.states.row(w).transpose();
  const Eigen::VectorXd other = ens.states.row(q).transpose();
  if (cfg.stretch == StretchForm::classic)
    prop.state = other + z * (cur - other);
  else
    prop.state = cur + z * (cur - other);
  prop.log_accept_bias = (target.dim - 1) * std::log(z);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  prop.accept_uniform = uni(rng);
  prop.logp = target.log_density(prop.state);
  return prop;
}

Proposal propose_walk(const Ensemble& ens, int w, int comp_lo, int comp_hi,
                      const Target& target, const SamplerConfig& cfg,
                      std::mt19937_64& rng) {
  // Complement set: [comp_lo, comp_hi) minus w when contained.
  Proposal prop;
  const int d = target.dim;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  int count = 0;
  for (int j = comp_lo; j < comp_hi; ++j) {
    if (j == w) continue;
    mean += ens.states.row(j).transpose();
    ++count;
  }
  mean /= count;

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(d);
  for (int j = comp_lo; j < comp_hi; ++j) {
    if (j == w) continue;
    const double zj = normal(rng);
    shift += zj * (ens.states.row(j).transpose() - mean);
  }
  prop.state = ens.states.row(w).transpose() + (cfg.lambda / std::sqrt(count)) * shift;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  prop.accept_uniform = uni(rng);
  prop.logp = target.log_density(prop.state);
  return prop;
}

void apply(Ensemble& ens, int w, const Proposal& prop, Eigen::VectorXi& accepted) {
  const double log_ratio = prop.log_accept_bias + prop.logp - ens.logp[w];
  if (std::isfinite(prop.logp) && std::log(prop.accept_uniform) < log_ratio) {
    ens.states.row(w) = prop.state.transpose();
    ens.logp[w] = prop.logp;
    ++accepted[w];
  }
}

template <typename Propose>
void sweep(Ensemble& ens, const SamplerConfig& cfg, std::vector<std::mt19937_64>& rngs,
           Eigen::VectorXi& accepted, const Propose& propose) {
  const int W = static_cast<int>(ens.states.rows());
  if (cfg.schedule == WalkerSchedule::sequential) {
    for (int w = 0; w < W; ++w) {
      const Proposal prop = propose(w, 0, W, rngs[static_cast<std::size_t>(w)]);
      apply(ens, w, prop, accepted);
    }
    return;
  }

  // Complementary halves: propose for one half against the frozen other
  // half; proposals are independent and may be evaluated concurrently.
  const int half = W / 2;
  std::vector<Proposal> props(static_cast<std::size_t>(W));
  auto run_half = [&](int lo, int hi, int other_lo, int other_hi) {
    parallel_for(hi - lo, cfg.threads, [&](int k) {
      const int w = lo + k;
      props[static_cast<std::size_t>(w)] =
          propose(w, other_lo, other_hi, rngs[static_cast<std::size_t>(w)]);
    });
    for (int w = lo; w < hi; ++w) apply(ens, w, props[static_cast<std::size_t>(w)], accepted);
  };
  run_half(0, half, half, W);
  run_half(half, W, 0, half);
}

}  // namespace

void saies_step(Ensemble& ens, const Target& target, const SamplerConfig& cfg,
                std::vector<std::mt19937_64>& rngs, Eigen::VectorXi& accepted) {
  sweep(ens, cfg, rngs, accepted, [&](int w, int lo, int hi, std::mt19937_64& rng) {
    return propose_stretch(ens, w, lo, hi, target, cfg, rng);
  });
}

void aies_step(Ensemble& ens, const Target& target, const SamplerConfig& cfg,
               std::vector<std::mt19937_64>& rngs, Eigen::VectorXi& accepted) {
  sweep(ens, cfg, rngs, accepted, [&](int w, int lo, int hi, std::mt19937_64& rng) {
    return propose_walk(ens, w, lo, hi, target, cfg, rng);
  });
}

Chain run(const SamplerConfig& cfg, const Target& target) {
  if (cfg.walkers < 2) throw ConfigError("at least two walkers required");
  if (cfg.thin < 1) throw ConfigError("thinning factor must be at least 1");
  if (cfg.steps < cfg.thin) throw ConfigError("too few raw steps for the thinning factor");

  Chain chain;
  chain.walkers = cfg.walkers;
  chain.dim = target.dim;
  chain.raw_steps = cfg.steps;
  chain.kept = cfg.steps / cfg.thin;
  chain.burn_index = static_cast<long>(chain.kept * cfg.burn_fraction + 1e-9);

  if (cfg.kind == SamplerKind::saies) {
    if (!(cfg.a > 1.0)) throw ConfigError("SAIES requires a > 1");
    if (cfg.walkers <= target.dim + 1)
      throw ConfigError("SAIES requires more walkers than dimension + 1");
    if (cfg.walkers <= 2 * target.dim)
      chain.warnings.push_back("SAIES usually requires W > 2d walkers; got W = " +
                               std::to_string(cfg.walkers) + " for d = " +
                               std::to_string(target.dim));
  } else {
    if (!(cfg.lambda > 0.0)) throw ConfigError("AIES requires lambda > 0");
    if (cfg.walkers < 3) throw ConfigError("AIES requires at least three walkers");
  }

  Ensemble ens = init_ensemble(target, cfg.walkers, cfg.seed);
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(static_cast<std::size_t>(cfg.walkers));
  for (int w = 0; w < cfg.walkers; ++w)
    rngs.push_back(substream(cfg.seed, stream_tag::walker, static_cast<std::uint64_t>(w)));

  chain.samples.resize(static_cast<long>(cfg.walkers) * chain.kept, target.dim);
  chain.log_post.resize(cfg.walkers, chain.kept);
  chain.moved.resize(cfg.walkers, chain.kept);
  chain.accepted = Eigen::VectorXi::Zero(cfg.walkers);

  Eigen::VectorXi accepted_at_last_keep = Eigen::VectorXi::Zero(cfg.walkers);
  long kept_at = 0;
  for (long s = 1; s <= cfg.steps; ++s) {
    if (cfg.kind == SamplerKind::saies)
      saies_step(ens, target, cfg, rngs, chain.accepted);
    else
      aies_step(ens, target, cfg, rngs, chain.accepted);

    if (s % cfg.thin == 0 && kept_at < chain.kept) {
      for (int w = 0; w < cfg.walkers; ++w) {
        chain.samples.row(chain.row(w, kept_at)) = ens.states.row(w);
        chain.log_post(w, kept_at) = ens.logp[w];
        chain.moved(w, kept_at) = chain.accepted[w] > accepted_at_last_keep[w] ? 1 : 0;
      }
      accepted_at_last_keep = chain.accepted;
      ++kept_at;
    }
  }
  return chain;
}

}  // namespace shearbayes
