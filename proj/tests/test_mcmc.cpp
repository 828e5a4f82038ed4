#include <doctest.h>

#include <cmath>

#include "shearbayes/errors.hpp"
#include "shearbayes/mcmc.hpp"
#include "shearbayes/rng.hpp"

using namespace shearbayes;

namespace {

Target standard_gaussian(int dim) {
  Target t;
  t.dim = dim;
  t.log_density = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  t.sample_prior = [dim](std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = normal(rng);
    return x;
  };
  return t;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments pooled_moments(const Chain& chain) {
  const Eigen::MatrixXd pooled = chain.pooled_post_burn();
  Moments m;
  m.mean = pooled.colwise().mean().transpose();
  const Eigen::MatrixXd centered = pooled.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / static_cast<double>(pooled.rows() - 1);
  return m;
}

}  // namespace

TEST_SUITE("mcmc") {

TEST_CASE("draw_stretch: support, endpoints and mean") {
  auto rng = substream(5, 1);
  double sum = 0.0;
  const long n = 100000;
  for (long i = 0; i < n; ++i) {
    const double z = draw_stretch(2.0, rng);
    REQUIRE(z >= 0.5);
    REQUIRE(z <= 2.0);
    sum += z;
  }
  CHECK(sum / n == doctest::Approx(7.0 / 6.0).epsilon(0.01));

  // CDF endpoints: u = 0 and u = 1 map to 1/a and a.
  const double sqrt_a = std::sqrt(2.0);
  const double z0 = std::pow(0.0 * (sqrt_a - 1 / sqrt_a) + 1 / sqrt_a, 2);
  const double z1 = std::pow(1.0 * (sqrt_a - 1 / sqrt_a) + 1 / sqrt_a, 2);
  CHECK(z0 == doctest::Approx(0.5));
  CHECK(z1 == doctest::Approx(2.0));

  CHECK_THROWS_AS(draw_stretch(0.9, rng), ConfigError);
}

TEST_CASE("init_ensemble: reproducible, rejects infeasible draws") {
  Target t = standard_gaussian(3);
  const Ensemble e1 = init_ensemble(t, 8, 42);
  const Ensemble e2 = init_ensemble(t, 8, 42);
  CHECK((e1.states - e2.states).lpNorm<Eigen::Infinity>() == 0.0);

  SUBCASE("feasibility rejection is respected") {
    t.feasible = [](const Eigen::VectorXd& x) { return x[0] > 0.0; };
    const Ensemble e = init_ensemble(t, 16, 1);
    for (int w = 0; w < 16; ++w) CHECK(e.states(w, 0) > 0.0);
  }
  SUBCASE("impossible constraint names the reason") {
    t.feasible = [](const Eigen::VectorXd&) { return false; };
    t.reject_reason = [](const Eigen::VectorXd&) { return std::string("always bad"); };
    try {
      init_ensemble(t, 4, 1, 50);
      FAIL("expected failure");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("always bad") != std::string::npos);
    }
  }
}

TEST_CASE("saies: trivial invariants") {
  SamplerConfig cfg;
  cfg.kind = SamplerKind::saies;
  cfg.walkers = 8;
  cfg.steps = 30;
  cfg.seed = 3;

  SUBCASE("d = 1: z^(d-1) = 1, chain still correct on a 1D Gaussian") {
    cfg.walkers = 8;
    cfg.steps = 60000;
    const Chain chain = run(cfg, standard_gaussian(1));
    const Moments m = pooled_moments(chain);
    CHECK(std::abs(m.mean[0]) < 0.05);
    CHECK(m.cov(0, 0) == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("inadmissible proposals are always rejected") {
    Target t = standard_gaussian(2);
    t.log_density = [](const Eigen::VectorXd& x) {
      if (x[0] < -1e9) return -std::numeric_limits<double>::infinity();
      return -0.5 * x.squaredNorm();
    };
    const Chain chain = run(cfg, t);
    for (int w = 0; w < chain.walkers; ++w)
      for (long s = 0; s < chain.kept; ++s) CHECK(std::isfinite(chain.log_post(w, s)));
  }
}

TEST_CASE("aies: degenerate moves keep the chain stationary") {
  Target t = standard_gaussian(2);
  SamplerConfig cfg;
  cfg.kind = SamplerKind::aies;
  cfg.walkers = 6;
  cfg.steps = 30;
  cfg.seed = 9;

  SUBCASE("lambda = 0 freezes the ensemble") {
    cfg.lambda = 1e-300;  // effectively zero scale, validation requires > 0
    const Ensemble init = init_ensemble(t, cfg.walkers, cfg.seed);
    const Chain chain = run(cfg, t);
    for (int w = 0; w < cfg.walkers; ++w)
      CHECK((chain.samples.row(chain.row(w, chain.kept - 1)).transpose() -
             init.states.row(w).transpose())
                .lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("identical walkers cannot move") {
    Ensemble ens;
    ens.states = Eigen::MatrixXd::Ones(6, 2);
    ens.logp = Eigen::VectorXd::Constant(6, -1.0);
    std::vector<std::mt19937_64> rngs;
    for (int w = 0; w < 6; ++w) rngs.push_back(substream(1, stream_tag::walker, w));
    Eigen::VectorXi accepted = Eigen::VectorXi::Zero(6);
    cfg.lambda = 0.2;
    aies_step(ens, t, cfg, rngs, accepted);
    CHECK((ens.states.array() - 1.0).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("Gaussian oracle: both samplers, both schedules recover N(0, I)") {
  // Reduced version of the acceptance run (W = 32, 20000 kept steps there);
  // unit scale keeps this under a couple of seconds.
  for (const SamplerKind kind : {SamplerKind::saies, SamplerKind::aies}) {
    for (const WalkerSchedule schedule :
         {WalkerSchedule::sequential, WalkerSchedule::halves}) {
      SamplerConfig cfg;
      cfg.kind = kind;
      cfg.schedule = schedule;
      cfg.walkers = 32;
      cfg.steps = 3 * 4000;
      cfg.thin = 3;
      cfg.seed = 2026;
      const Chain chain = run(cfg, standard_gaussian(2));
      const Moments m = pooled_moments(chain);
      INFO("kind=", static_cast<int>(kind), " schedule=", static_cast<int>(schedule));
      CHECK(m.mean.lpNorm<Eigen::Infinity>() < 0.08);
      CHECK(m.cov(0, 0) == doctest::Approx(1.0).epsilon(0.15));
      CHECK(m.cov(1, 1) == doctest::Approx(1.0).epsilon(0.15));
      CHECK(std::abs(m.cov(0, 1)) < 0.1);

      double rate = 0.0;
      for (int w = 0; w < cfg.walkers; ++w) rate += chain.acceptance_rate(w);
      rate /= cfg.walkers;
      CHECK(rate > 0.1);
      CHECK(rate < 0.9);
    }
  }
}

TEST_CASE("SAIES: affine equivariance is exact for power-of-two scalings") {
  // T x = diag(2, 1/4) x commutes with every floating-point operation in
  // the stretch move, so the transformed run reproduces T(samples) bitwise.
  const Eigen::Vector2d scale(2.0, 0.25);

  Target base = standard_gaussian(2);
  Target mapped;
  mapped.dim = 2;
  mapped.log_density = [scale](const Eigen::VectorXd& x) {
    const Eigen::VectorXd back = x.cwiseQuotient(scale);
    return -0.5 * back.squaredNorm();
  };
  mapped.sample_prior = [base, scale](std::mt19937_64& rng) {
    return base.sample_prior(rng).cwiseProduct(scale).eval();
  };

  SamplerConfig cfg;
  cfg.kind = SamplerKind::saies;
  cfg.walkers = 16;
  cfg.steps = 300;
  cfg.seed = 77;

  const Chain original = run(cfg, base);
  const Chain transformed = run(cfg, mapped);
  for (long r = 0; r < original.samples.rows(); ++r) {
    CHECK(transformed.samples(r, 0) == 2.0 * original.samples(r, 0));
    CHECK(transformed.samples(r, 1) == 0.25 * original.samples(r, 1));
  }
}

TEST_CASE("run: bookkeeping contracts") {
  SamplerConfig cfg;
  cfg.walkers = 8;
  cfg.steps = 300;
  cfg.thin = 3;
  cfg.seed = 4;
  const Chain chain = run(cfg, standard_gaussian(2));
  CHECK(chain.kept == 100);
  CHECK(chain.burn_index == 20);
  CHECK(chain.raw_steps == 300);
  CHECK(chain.post_burn_count() == 8 * 80);

  SUBCASE("warning when W <= 2d") {
    SamplerConfig small = cfg;
    small.walkers = 6;
    const Chain warned = run(small, standard_gaussian(4));
    CHECK(!warned.warnings.empty());
  }
  SUBCASE("SAIES needs W > d + 1") {
    SamplerConfig bad = cfg;
    bad.walkers = 4;
    CHECK_THROWS_AS(run(bad, standard_gaussian(5)), ConfigError);
  }
  SUBCASE("fixed seed reproduces the chain") {
    const Chain again = run(cfg, standard_gaussian(2));
    CHECK((again.samples - chain.samples).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

}  // TEST_SUITE
