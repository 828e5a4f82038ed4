#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace shearbayes {

enum class SamplerKind { saies, aies };

/// Walker update schedule. `sequential` updates walkers in order within a
/// step, each seeing the already-updated earlier walkers. `halves` updates
/// the first half against the frozen second half and then swaps, which
/// allows proposals of a half-step to be evaluated concurrently.
enum class WalkerSchedule { sequential, halves };

/// Stretch proposal form. `classic` is nu_q + z (nu_w - nu_q); `reflect`
/// is nu_w + z (nu_w - nu_q). Only the classic form admits the reverse
/// move inside the stretch support, so it is the default; see the sampler
/// tests for the empirical comparison on a known target.
enum class StretchForm { classic, reflect };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::saies;
  int walkers = 32;
  long steps = 1500;  // raw steps S; kept samples = S / thin
  int thin = 3;
  double burn_fraction = 0.2;
  double a = 2.0;       // SAIES stretch parameter
  double lambda = 0.2;  // AIES scale
  std::uint64_t seed = 1;
  WalkerSchedule schedule = WalkerSchedule::sequential;
  StretchForm stretch = StretchForm::classic;
  int threads = 1;  // proposal evaluation concurrency in `halves` schedule
};

/// Sampling target. `log_density` must be pure and reentrant. `sample_prior`
/// draws initial states. `feasible` is an optional cheap admissibility check
/// used during initialization and `reject_reason` an optional diagnostic
/// naming the violated constraint of an infeasible state.
struct Target {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> log_density;
  std::function<Eigen::VectorXd(std::mt19937_64&)> sample_prior;
  std::function<bool(const Eigen::VectorXd&)> feasible;
  std::function<std::string(const Eigen::VectorXd&)> reject_reason;
};

struct Chain {
  int walkers = 0;
  int dim = 0;
  long kept = 0;        // retained steps per walker (S / thin)
  long burn_index = 0;  // first post-burn-in kept step
  long raw_steps = 0;
  Eigen::MatrixXd samples;   // (walkers * kept) x dim, row = w * kept + s
  Eigen::MatrixXd log_post;  // walkers x kept
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> moved;  // walkers x kept
  Eigen::VectorXi accepted;  // raw acceptances per walker
  std::vector<std::string> warnings;

  long row(int walker, long kept_step) const { return walker * kept + kept_step; }
  long post_burn_count() const { return (kept - burn_index) * walkers; }
  /// Pooled post-burn-in samples, one row per (walker, kept step).
  Eigen::MatrixXd pooled_post_burn() const;
  double acceptance_rate(int walker) const {
    return raw_steps > 0 ? static_cast<double>(accepted[walker]) / raw_steps : 0.0;
  }
};

/// Inverse-CDF draw from g(z) proportional to 1/sqrt(z) on [1/a, a].
double draw_stretch(double a, std::mt19937_64& rng);

struct Ensemble {
  Eigen::MatrixXd states;  // walkers x dim
  Eigen::VectorXd logp;    // walkers
};

/// W independent prior draws, rejection-resampled until feasible with
/// finite log-density (at most max_tries per walker). Throws NumericalError
/// naming the most frequently violated constraint on failure.
Ensemble init_ensemble(const Target& target, int walkers, std::uint64_t seed,
                       int max_tries = 1000);

/// One ensemble sweep; updates states, log-densities and acceptance counts.
void saies_step(Ensemble& ens, const Target& target, const SamplerConfig& config,
                std::vector<std::mt19937_64>& rngs, Eigen::VectorXi& accepted);
void aies_step(Ensemble& ens, const Target& target, const SamplerConfig& config,
               std::vector<std::mt19937_64>& rngs, Eigen::VectorXi& accepted);

Chain run(const SamplerConfig& config, const Target& target);

}  // namespace shearbayes
