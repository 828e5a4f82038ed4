#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "shearbayes/errors.hpp"
#include "shearbayes/posterior.hpp"
#include "shearbayes/synthetic.hpp"

using namespace shearbayes;

namespace {

struct Fixture {
  SimulationConfig data_cfg = test::tiny_config();
  ParameterVector truth = test::tiny_truth();
  DataSet d_odd;
  PriorSpec prior;
  std::shared_ptr<ForwardOperator> op;
  std::shared_ptr<Posterior> posterior;

  Fixture() {
    const DataSet clean = generate_truth(truth, data_cfg);
    const DataSet noisy = add_noise(clean, 10.0, 7);
    d_odd = split(noisy).odd;

    PriorHyper hyper;
    hyper.domain = data_cfg.domain;
    prior = build_prior({{2.0, -1.5, 0.6, 0, 1.0}}, ShapeVariant::smooth, 5, hyper);

    SimulationConfig inv = data_cfg.coarsened(2.0);
    op = std::make_shared<ForwardOperator>(inv, d_odd.times);
    posterior = std::make_shared<Posterior>(op, prior, d_odd, NoiseCov{d_odd.noise_sigma});
  }
};

}  // namespace

TEST_SUITE("posterior") {

TEST_CASE("log_likelihood: closed-form identities") {
  const NoiseCov noise{0.5};
  const Eigen::VectorXd d = Eigen::VectorXd::Random(40);

  const double n = 40.0;
  const double at_data = log_likelihood(d, d, noise);
  CHECK(at_data == doctest::Approx(-0.5 * n * std::log(2 * std::numbers::pi) -
                                   n * std::log(0.5)));

  SUBCASE("one extra unit residual with sigma = 1 costs 1/2") {
    const NoiseCov unit{1.0};
    Eigen::VectorXd pred = d;
    pred[7] += 1.0;
    CHECK(log_likelihood(d, d, unit) - log_likelihood(pred, d, unit) ==
          doctest::Approx(0.5));
  }
  SUBCASE("doubling sigma rescales the misfit and shifts the normalizer") {
    Eigen::VectorXd pred = d;
    pred.array() += 0.3;
    const double misfit = (pred - d).squaredNorm();
    const NoiseCov twice{1.0};
    const NoiseCov half{2.0};
    const double l1 = log_likelihood(pred, d, twice);
    const double l2 = log_likelihood(pred, d, half);
    CHECK(l2 - l1 == doctest::Approx(-n * std::log(2.0) + misfit / 2.0 - misfit / 8.0));
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(log_likelihood(Eigen::VectorXd::Zero(3), d, noise), ShapeError);
  }
  SUBCASE("strict concavity in the prediction") {
    Eigen::VectorXd p1 = d, p2 = d;
    p1.array() += 0.4;
    p2.array() -= 0.4;
    const Eigen::VectorXd mid = 0.5 * (p1 + p2);
    CHECK(log_likelihood(mid, d, noise) >
          0.5 * (log_likelihood(p1, d, noise) + log_likelihood(p2, d, noise)));
  }
}

TEST_CASE("log_prior: Gaussian identities and admissibility gate") {
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const PriorSpec prior = build_prior({{5.0, -3.0, 1.0, 0, 1.0}}, ShapeVariant::smooth, 5, hyper);

  const double at_mean = log_prior(prior.nu0(), prior);
  CHECK(at_mean == doctest::Approx(-0.5 * 14 * std::log(2 * std::numbers::pi) -
                                   0.5 * prior.log_det()));

  SUBCASE("one-sigma offset costs 1/2") {
    ParameterVector nu = prior.nu0();
    nu.flat()[0] += std::sqrt(prior.cov()(0, 0));
    CHECK(at_mean - log_prior(nu, prior) == doctest::Approx(0.5));
  }
  SUBCASE("nested circles hit the sentinel") {
    ParameterVector nu = prior.nu0();
    std::vector<SmoothBlock> blocks = {nu.smooth_block(0), nu.smooth_block(0)};
    blocks[1].a0 = 0.3;  // same center, strictly inside
    const ParameterVector nested = ParameterVector::from_smooth(blocks);
    CHECK(log_prior(nested, build_prior({{5.0, -3.0, 1.0, 0, 1.0}, {5.0, -3.0, 0.3, 0, 1.0}},
                                        ShapeVariant::smooth, 5, hyper)) ==
          -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("log_prior: piecewise log-Gaussian includes the Jacobian") {
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const int Z = 64;
  const PriorSpec prior = build_prior({{5.0, -3.0, 1.0, 0, 1.0}}, ShapeVariant::piecewise, Z, hyper);

  // At nu0 all radii are rho0 = 1, so the Jacobian term vanishes and the
  // density equals the Gaussian at its mean.
  const double at_mean = log_prior(prior.nu0(), prior);
  CHECK(at_mean == doctest::Approx(prior.log_density_sampling(prior.mean_sampling())));

  // Scaling all radii by e shifts log r by 1: the Jacobian subtracts Z.
  ParameterVector scaled = prior.nu0();
  for (int j = 0; j < Z; ++j) scaled.flat()[2 + j] *= std::numbers::e;
  const Eigen::VectorXd y = prior.to_sampling(scaled);
  CHECK(log_prior(scaled, prior) ==
        doctest::Approx(prior.log_density_sampling(y) - static_cast<double>(Z)));
}

TEST_CASE("posterior evaluation gates admissibility before solving") {
  const Fixture fx;

  SUBCASE("inadmissible: no solve, -inf") {
    const long before = fx.op->solve_count();
    ParameterVector bad = fx.prior.nu0();
    bad.flat()[fx.prior.nu0().mu_index(0)] = -5.0;
    const PosteriorEval eval = fx.posterior->evaluate(bad);
    CHECK(!eval.admissible);
    CHECK(std::isinf(eval.log_posterior));
    CHECK(eval.forward_solves == 0);
    CHECK(fx.op->solve_count() == before);
  }
  SUBCASE("admissible: finite value, exactly one solve") {
    const long before = fx.op->solve_count();
    const PosteriorEval eval = fx.posterior->evaluate(fx.prior.nu0());
    CHECK(eval.admissible);
    CHECK(std::isfinite(eval.log_posterior));
    CHECK(eval.log_posterior == doctest::Approx(eval.log_likelihood + eval.log_prior));
    CHECK(fx.op->solve_count() == before + 1);
  }
  SUBCASE("shrinking the misfit raises the posterior") {
    const PosteriorEval at_prior = fx.posterior->evaluate(fx.prior.nu0());
    const PosteriorEval at_truth = fx.posterior->evaluate(fx.truth);
    CHECK(at_truth.log_likelihood > at_prior.log_likelihood);
  }
  SUBCASE("measure is deterministic") {
    const Eigen::VectorXd p1 = fx.op->predict(fx.prior.nu0());
    const Eigen::VectorXd p2 = fx.op->predict(fx.prior.nu0());
    CHECK((p1 - p2).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("measure: truth on the truth mesh reproduces clean data") {
  const SimulationConfig cfg = test::tiny_config();
  const ParameterVector truth = test::tiny_truth();
  const DataSet clean = generate_truth(truth, cfg);
  const SplitData parts = split(clean);

  // Same mesh and steps as data generation: a closure check, not an
  // inversion (the inverse-crime guard lives in the pipeline layer).
  ForwardOperator op(cfg, parts.odd.times);
  const Eigen::VectorXd pred = op.predict(truth);
  CHECK((pred - parts.odd.flatten()).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("posterior differences are what acceptance decisions see") {
  const Fixture fx;
  const PosteriorEval a = fx.posterior->evaluate(fx.prior.nu0());
  ParameterVector nudged = fx.prior.nu0();
  nudged.flat()[2] += 0.05;
  const PosteriorEval b = fx.posterior->evaluate(nudged);
  // Adding any constant to both cancels in the difference.
  const double diff = b.log_posterior - a.log_posterior;
  CHECK((b.log_posterior + 123.0) - (a.log_posterior + 123.0) == doctest::Approx(diff));
}

}  // TEST_SUITE
