#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "shearbayes/errors.hpp"
#include "shearbayes/map_laplace.hpp"
#include "shearbayes/rng.hpp"

using namespace shearbayes;

namespace {

/// Linear surrogate around an admissible circle: f(nu) = M nu.
struct LinearSurrogate {
  Eigen::MatrixXd M;
  PriorSpec prior;
  Eigen::VectorXd d;
  NoiseCov noise{1.0};

  LinearSurrogate() {
    PriorHyper hyper;
    hyper.domain = {0, 10, -7, 0};
    prior = build_prior({{5.0, -3.0, 1.0, 0, 1.0}}, ShapeVariant::smooth, 5, hyper);
    const int n = prior.dim();
    M.resize(20, n);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (long r = 0; r < M.rows(); ++r)
      for (long c = 0; c < M.cols(); ++c) M(r, c) = 0.3 * normal(rng);
    // Target a nearby admissible vector so iterates stay admissible.
    ParameterVector target = prior.nu0();
    target.flat()[2] = 1.2;   // a0
    target.flat()[13] = 2.5;  // mu
    d = M * target.flat();
  }

  ForwardMap map() const {
    return [this](const ParameterVector& nu) -> Eigen::VectorXd { return M * nu.flat(); };
  }

  Eigen::VectorXd ridge_solution() const {
    const Eigen::MatrixXd H = M.transpose() * M / (noise.sigma * noise.sigma) +
                              prior.cov_inverse();
    const Eigen::VectorXd rhs = M.transpose() * d / (noise.sigma * noise.sigma) +
                                prior.cov_inverse() * prior.nu0().flat();
    return H.ldlt().solve(rhs);
  }
};

}  // namespace

TEST_SUITE("map_laplace") {

TEST_CASE("cost: misfit plus scaled prior term") {
  const LinearSurrogate lin;
  const ForwardMap f = lin.map();

  const double at_mean = cost(f, lin.prior.nu0(), 17.0, lin.prior, lin.d, lin.noise);
  const double misfit_only =
      (lin.M * lin.prior.nu0().flat() - lin.d).squaredNorm() / 2.0;
  CHECK(at_mean == doctest::Approx(misfit_only));  // prior term vanishes at nu0

  SUBCASE("perfect fit at nu0 costs zero") {
    LinearSurrogate perfect = lin;
    perfect.d = perfect.M * perfect.prior.nu0().flat();
    CHECK(cost(perfect.map(), perfect.prior.nu0(), 3.0, perfect.prior, perfect.d,
               perfect.noise) == doctest::Approx(0.0));
  }
  SUBCASE("lambda scales the prior term") {
    ParameterVector off = lin.prior.nu0();
    off.flat()[0] += 0.1;
    const double c1 = cost(f, off, 1.0, lin.prior, lin.d, lin.noise);
    const double c2 = cost(f, off, 2.0, lin.prior, lin.d, lin.noise);
    const Eigen::VectorXd dn = off.flat() - lin.prior.nu0().flat();
    CHECK(c2 - c1 == doctest::Approx(0.5 * dn.dot(lin.prior.cov_inverse() * dn)));
  }
}

TEST_CASE("fd_jacobian: exact on a linear map, first-order consistent") {
  const LinearSurrogate lin;
  const ForwardMap f = lin.map();

  const Eigen::MatrixXd F = fd_jacobian(f, lin.prior.nu0(), FDSteps{}, lin.prior);
  CHECK(F.cols() == 14);
  CHECK((F - lin.M).cwiseAbs().maxCoeff() < 1e-9);

  SUBCASE("Richardson: halving eta halves the error of a quadratic map") {
    const ForwardMap quad = [&lin](const ParameterVector& nu) -> Eigen::VectorXd {
      Eigen::VectorXd out = lin.M * nu.flat();
      out.array() += 0.05 * nu.flat().squaredNorm();
      return out;
    };
    Eigen::VectorXd eta_full = FDSteps{}.for_vector(lin.prior.nu0());
    const Eigen::MatrixXd F1 =
        fd_jacobian(quad, lin.prior.nu0(), quad(lin.prior.nu0()), eta_full, lin.prior);
    const Eigen::MatrixXd F2 = fd_jacobian(quad, lin.prior.nu0(), quad(lin.prior.nu0()),
                                           (0.5 * eta_full).eval(), lin.prior);
    // Exact Jacobian of the quadratic part: M + 0.1 * ones * nu^T.
    Eigen::MatrixXd exact = lin.M;
    exact += 0.1 * Eigen::VectorXd::Ones(20) * lin.prior.nu0().flat().transpose();
    const double e1 = (F1 - exact).cwiseAbs().maxCoeff();
    const double e2 = (F2 - exact).cwiseAbs().maxCoeff();
    CHECK(e2 == doctest::Approx(0.5 * e1).epsilon(0.05));
  }

  SUBCASE("per-family step sizes land in the right slots") {
    const Eigen::VectorXd eta = FDSteps{}.for_vector(lin.prior.nu0());
    CHECK(eta[0] == 0.05);
    CHECK(eta[2] == 0.1);
    CHECK(eta[3] == 0.05);
    CHECK(eta[13] == 0.15);
  }
}

TEST_CASE("gn_gradient_hessian: identities and FD cross-check") {
  const LinearSurrogate lin;
  const ForwardMap f = lin.map();

  SUBCASE("zero residual at nu0 gives zero gradient") {
    LinearSurrogate perfect = lin;
    perfect.d = perfect.M * perfect.prior.nu0().flat();
    const Eigen::VectorXd residual = Eigen::VectorXd::Zero(20);
    const auto [g, H] = gn_gradient_hessian(perfect.M, residual, 2.0, perfect.prior,
                                            perfect.prior.nu0(), perfect.noise);
    CHECK(g.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
  SUBCASE("gradient matches finite differences of the cost") {
    ParameterVector nu = lin.prior.nu0();
    nu.flat()[2] = 1.1;
    nu.flat()[13] = 2.0;
    const Eigen::VectorXd pred = lin.M * nu.flat();
    const auto [g, H] =
        gn_gradient_hessian(lin.M, pred - lin.d, 1.7, lin.prior, nu, lin.noise);
    for (int i : {0, 2, 7, 13}) {
      const double h = 1e-6;
      ParameterVector plus = nu, minus = nu;
      plus.flat()[i] += h;
      minus.flat()[i] -= h;
      const double fd = (cost(f, plus, 1.7, lin.prior, lin.d, lin.noise) -
                         cost(f, minus, 1.7, lin.prior, lin.d, lin.noise)) /
                        (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("lm_solve: reaches the ridge solution of the linear surrogate") {
  const LinearSurrogate lin;
  OptimizerConfig opt;
  opt.mu_background = 1.69;
  const MAPResult res = lm_solve(lin.map(), opt, lin.prior, lin.d, lin.noise);

  CHECK(res.converged);
  CHECK((res.nu_map.flat() - lin.ridge_solution()).lpNorm<Eigen::Infinity>() < 1e-8);

  SUBCASE("accepted costs decrease strictly") {
    for (std::size_t i = 1; i < res.cost_history.size(); ++i)
      CHECK(res.cost_history[i] < res.cost_history[i - 1]);
  }
  SUBCASE("lambda schedule reaches 1 and stays") {
    REQUIRE(!res.lambda_history.empty());
    CHECK(res.lambda_history.back() == 1.0);
  }
  SUBCASE("gamma_pt matches the analytic posterior covariance") {
    const Eigen::MatrixXd analytic =
        (lin.M.transpose() * lin.M + lin.prior.cov_inverse()).inverse();
    CHECK((res.gamma_pt - analytic).cwiseAbs().maxCoeff() <
          1e-10 * analytic.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("lm_solve: omega doubling on rejection, halving on acceptance") {
  // A surrogate whose first proposed step must be rejected: strong
  // curvature away from the quadratic model.
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const PriorSpec prior = build_prior({{5.0, -3.0, 1.0, 0, 1.0}}, ShapeVariant::smooth, 5, hyper);
  const ForwardMap bumpy = [](const ParameterVector& nu) -> Eigen::VectorXd {
    Eigen::VectorXd out(2);
    const double x = nu.flat()[2] - 1.0;
    out[0] = 5.0 * std::atan(40.0 * x);
    out[1] = nu.flat()[13];
    return out;
  };
  Eigen::VectorXd d(2);
  d << 5.0 * std::atan(40.0 * 0.2), 2.0;

  OptimizerConfig opt;
  opt.omega0 = 5e-5;
  const MAPResult res = lm_solve(bumpy, opt, prior, d, NoiseCov{0.05});
  // History of omega after each acceptance: strictly a factor two below the
  // value used for the accepted solve; rejected proposals doubled it first.
  CHECK(res.omega_history.size() >= 2);
  for (std::size_t i = 0; i < res.cost_history.size() - 1; ++i)
    CHECK(res.cost_history[i + 1] < res.cost_history[i]);
}

TEST_CASE("laplace_cov: limits and Loewner ordering") {
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const PriorSpec prior = build_prior({{5.0, -3.0, 1.0, 0, 1.0}}, ShapeVariant::smooth, 5, hyper);
  const int n = prior.dim();

  SUBCASE("F = 0 returns the prior covariance") {
    const LaplaceCov lap = laplace_cov(Eigen::MatrixXd::Zero(6, n), NoiseCov{1.0}, prior);
    CHECK((lap.cov - prior.cov()).cwiseAbs().maxCoeff() < 1e-10 * prior.cov().maxCoeff());
  }
  SUBCASE("information shrinks covariance (Loewner order)") {
    Eigen::MatrixXd F = Eigen::MatrixXd::Random(2 * n, n);
    const LaplaceCov lap = laplace_cov(F, NoiseCov{0.7}, prior);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.cov() - lap.cov);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
  }
  SUBCASE("sqrt factor squares back to the covariance") {
    Eigen::MatrixXd F = Eigen::MatrixXd::Random(n, n);
    const LaplaceCov lap = laplace_cov(F, NoiseCov{1.0}, prior);
    CHECK((lap.sqrt * lap.sqrt - lap.cov).cwiseAbs().maxCoeff() <
          1e-10 * lap.cov.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("2x2 analytic case: F = I, sigma = 1, prior = I gives cov = I/2") {
  // Assembled through a 2-parameter piecewise vector is overkill; check the
  // formula through laplace_cov with a hand-built prior.
  PriorHyper hyper;
  hyper.domain = {-10, 10, -10, 10};
  hyper.var_center = 1.0;
  hyper.var_a0 = 1.0;
  hyper.var_mu = 1.0;
  hyper.fourier_decay_s = 0.0;  // all variances 1 -> prior covariance I
  const PriorSpec prior = build_prior({{0.0, 0.0, 1.0, 0, 1.0}}, ShapeVariant::smooth, 0, hyper);
  REQUIRE(prior.dim() == 4);
  const LaplaceCov lap =
      laplace_cov(Eigen::MatrixXd::Identity(4, 4), NoiseCov{1.0}, prior);
  CHECK((lap.cov - 0.5 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample_laplace: determinism, zero-vector draw, flagging") {
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const PriorSpec prior = build_prior({{5.0, -3.0, 1.0, 0, 1.0}}, ShapeVariant::smooth, 5, hyper);
  const LaplaceCov lap = laplace_cov(Eigen::MatrixXd::Zero(4, prior.dim()),
                                     NoiseCov{1.0}, prior);

  SUBCASE("n = 0 returns the MAP point") {
    const Eigen::VectorXd draw =
        laplace_draw(prior.nu0(), lap, Eigen::VectorXd::Zero(prior.dim()));
    CHECK((draw - prior.nu0().flat()).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("fixed seed reproduces draws; flags mark inadmissible ones") {
    const LaplaceSamples s1 = sample_laplace(prior.nu0(), lap, 200, 11, prior);
    const LaplaceSamples s2 = sample_laplace(prior.nu0(), lap, 200, 11, prior);
    CHECK((s1.samples - s2.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.samples.rows() == 200);
    // With the wide mu prior many draws go inadmissible; all must be kept.
    CHECK(s1.admissible.size() == 200);
    CHECK(s1.admissible_count() < 200);
    CHECK(s1.admissible_count() > 0);
  }
}

TEST_CASE("lm_solve rejects the piecewise variant") {
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const PriorSpec prior =
      build_prior({{5.0, -3.0, 1.0, 0, 1.0}}, ShapeVariant::piecewise, 32, hyper);
  const ForwardMap f = [](const ParameterVector& nu) -> Eigen::VectorXd {
    return nu.flat().head(3);
  };
  OptimizerConfig opt;
  CHECK_THROWS_AS(lm_solve(f, opt, prior, Eigen::VectorXd::Zero(3), NoiseCov{1.0}),
                  ShapeError);
}

}  // TEST_SUITE
