#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "shearbayes/errors.hpp"
#include "shearbayes/rng.hpp"
#include "shearbayes/synthetic.hpp"
#include "shearbayes/topo_prior.hpp"

using namespace shearbayes;

namespace {

/// Synthetic energy field with Gaussian bumps, for detect() oracles.
EnergyField bump_field(const std::shared_ptr<const Mesh>& mesh,
                       const std::vector<Vec2>& centers, const std::vector<double>& amps,
                       double width = 0.5) {
  EnergyField field;
  field.mesh = mesh;
  field.values = Eigen::VectorXd::Zero(mesh->node_count());
  for (int n = 0; n < mesh->node_count(); ++n) {
    const Vec2 p = mesh->node(n);
    for (std::size_t b = 0; b < centers.size(); ++b) {
      const double d2 = (p.x - centers[b].x) * (p.x - centers[b].x) +
                        (p.y - centers[b].y) * (p.y - centers[b].y);
      field.values[n] += amps[b] * std::exp(-d2 / (width * width));
    }
  }
  return field;
}

}  // namespace

TEST_SUITE("topo_prior") {

TEST_CASE("adjoint_from_data: perfect data and deactivated receivers give P = 0") {
  const SimulationConfig cfg = test::tiny_config();
  const FEMSystem sys = homogeneous_system(cfg);
  const WaveSolution U = forward_homogeneous(sys, cfg);
  DataSet d = record(U, cfg.receivers, cfg.record_times);

  std::vector<int> all;
  for (int k = 0; k < d.receiver_count(); ++k) all.push_back(k);

  SUBCASE("d_even equal to U at the receivers") {
    const WaveSolution P = adjoint_from_data(sys, U, d, all, cfg);
    for (const auto& f : P.frames) CHECK(f.lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SUBCASE("no active receivers") {
    d.values.array() += 1.0;
    const WaveSolution P = adjoint_from_data(sys, U, d, {}, cfg);
    for (const auto& f : P.frames) CHECK(f.lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("additivity over disjoint receiver subsets") {
    d.values.setRandom();
    const WaveSolution p_all = adjoint_from_data(sys, U, d, all, cfg);
    const WaveSolution p_head = adjoint_from_data(sys, U, d, {0, 1}, cfg);
    const WaveSolution p_tail = adjoint_from_data(sys, U, d, {2, 3, 4}, cfg);
    double max_rel = 0.0;
    for (std::size_t f = 0; f < p_all.frames.size(); ++f) {
      const double scale = p_all.frames[f].lpNorm<Eigen::Infinity>();
      if (scale == 0.0) continue;
      max_rel = std::max(max_rel,
                         (p_all.frames[f] - p_head.frames[f] - p_tail.frames[f])
                                 .lpNorm<Eigen::Infinity>() /
                             scale);
    }
    CHECK(max_rel < 1e-10);
  }
}

TEST_CASE("forward_homogeneous: symmetric layout gives a symmetric field") {
  SimulationConfig cfg = test::tiny_config();  // transducers symmetric about x = 2
  const WaveSolution U = forward_homogeneous(cfg);
  const Mesh& mesh = *U.mesh;
  double max_asym = 0.0;
  double max_val = 0.0;
  for (const auto& frame : U.frames) {
    for (int j = 0; j <= mesh.ny_cells(); ++j)
      for (int i = 0; i <= mesh.nx_cells(); ++i) {
        const double v = frame[mesh.node_id(i, j)];
        const double w = frame[mesh.node_id(mesh.nx_cells() - i, j)];
        max_asym = std::max(max_asym, std::abs(v - w));
        max_val = std::max(max_val, std::abs(v));
      }
  }
  REQUIRE(max_val > 0.0);
  CHECK(max_asym < 1e-8 * max_val);
}

TEST_CASE("energy: structure and receiver-permutation invariance") {
  const SimulationConfig cfg = test::tiny_config();
  const FEMSystem sys = homogeneous_system(cfg);
  const WaveSolution U = forward_homogeneous(sys, cfg);
  DataSet d = record(U, cfg.receivers, cfg.record_times);
  d.values.array() += 0.05;  // nonzero residual

  std::vector<int> all;
  for (int k = 0; k < d.receiver_count(); ++k) all.push_back(k);
  const WaveSolution P = adjoint_from_data(sys, U, d, all, cfg);

  SUBCASE("zero adjoint gives zero energy, scaling is quartic") {
    WaveSolution zero = P;
    for (auto& f : zero.frames) f.setZero();
    CHECK(energy(U, zero, cfg).values.maxCoeff() == 0.0);

    WaveSolution doubled = P;
    for (auto& f : doubled.frames) f *= 2.0;
    const EnergyField e1 = energy(U, P, cfg);
    const EnergyField e4 = energy(U, doubled, cfg);
    CHECK((e4.values - 4.0 * e1.values).cwiseAbs().maxCoeff() <
          1e-10 * e4.values.maxCoeff());
    CHECK(e1.values.minCoeff() >= 0.0);
  }

  SUBCASE("permuting receiver labels leaves E unchanged") {
    DataSet permuted = d;
    std::vector<int> perm = {4, 2, 0, 1, 3};
    for (int k = 0; k < 5; ++k) {
      permuted.values.row(k) = d.values.row(perm[static_cast<std::size_t>(k)]);
      permuted.receivers[static_cast<std::size_t>(k)] =
          d.receivers[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    }
    const WaveSolution P2 = adjoint_from_data(sys, U, permuted, all, cfg);
    const EnergyField e1 = energy(U, P, cfg);
    const EnergyField e2 = energy(U, P2, cfg);
    CHECK((e1.values - e2.values).cwiseAbs().maxCoeff() <= 1e-12 * e1.values.maxCoeff());
  }
}

TEST_CASE("threshold: mask semantics") {
  const auto mesh = Mesh::build({0, 4, -3, 0}, 0.25);
  EnergyField constant;
  constant.mesh = mesh;
  constant.values = Eigen::VectorXd::Ones(mesh->node_count());

  SUBCASE("constant field selects every node") {
    const auto mask = threshold(constant, 0.3);
    for (auto m : mask) CHECK(m == 1);
  }
  SUBCASE("C0 -> 0 selects only the argmax") {
    EnergyField field = constant;
    field.values[17] = 2.0;
    const auto mask = threshold(field, 1e-12);
    long selected = 0;
    for (auto m : mask) selected += m;
    CHECK(selected == 1);
    CHECK(mask[17] == 1);
  }
  SUBCASE("zero field raises") {
    EnergyField zero = constant;
    zero.values.setZero();
    CHECK_THROWS_AS(threshold(zero, 0.3), NumericalError);
  }
  SUBCASE("single bump yields one connected component") {
    const EnergyField bump = bump_field(mesh, {{2.0, -1.5}}, {1.0});
    TopoConfig topo;
    topo.C0 = 0.3;
    topo.fractions = {{0}};
    const auto circles = detect({bump}, topo);
    CHECK(circles.size() == 1);
  }
}

TEST_CASE("detect: centroids, merging and separation") {
  const auto mesh = Mesh::build({0, 10, -7, 0}, 0.1);
  TopoConfig topo;
  topo.C0 = 0.5;
  topo.peak_min_separation = 1.5;
  topo.fractions = {{0}, {1}};

  SUBCASE("one bump in one fraction") {
    const auto circles = detect({bump_field(mesh, {{3.0, -2.0}}, {1.0})}, topo);
    REQUIRE(circles.size() == 1);
    CHECK(circles[0].cx == doctest::Approx(3.0).epsilon(0.05));
    CHECK(circles[0].cy == doctest::Approx(-2.0).epsilon(0.05));
    CHECK(circles[0].rho0 > 0.0);
  }
  SUBCASE("two distant bumps seen by different fractions") {
    const auto circles = detect({bump_field(mesh, {{2.0, -2.0}}, {1.0}),
                                 bump_field(mesh, {{8.0, -4.0}}, {0.8})},
                                topo);
    CHECK(circles.size() == 2);
  }
  SUBCASE("the same bump in two fractions merges to one circle") {
    const auto f1 = bump_field(mesh, {{5.0, -3.0}}, {1.0});
    const auto f2 = bump_field(mesh, {{5.2, -3.0}}, {0.9});
    const auto circles = detect({f1, f2}, topo);
    REQUIRE(circles.size() == 1);
    CHECK(circles[0].fraction_id == 0);  // the higher peak wins
  }
  SUBCASE("centers stay inside the domain") {
    const auto circles = detect({bump_field(mesh, {{0.2, -0.2}}, {1.0})}, topo);
    for (const auto& c : circles) {
      CHECK(mesh->domain().contains({c.cx, c.cy}));
    }
  }
}

TEST_CASE("matern_cov: closed form and limits") {
  const MaternParams p;  // nu = 3/2, rho = 0.5, sigma = 0.2
  CHECK(matern_cov(0.3, 0.3, p) == doctest::Approx(0.04));

  // Chord distance d = rho = 0.5 -> sigma^2 (1 + sqrt(3)) exp(-sqrt(3)).
  // d = 2 sin(pi dtheta) = 0.5 at dtheta = asin(0.25)/pi.
  const double dtheta = std::asin(0.25) / std::numbers::pi;
  const double expected = 0.04 * (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
  CHECK(matern_cov(0.0, dtheta, p) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.01933).epsilon(1e-3));

  SUBCASE("general-nu Bessel form agrees with the closed form at nu = 3/2") {
    MaternParams q = p;
    q.nu = 1.5 + 1e-13;  // forces the Bessel branch
    for (double t : {0.01, 0.1, 0.3, 0.49})
      CHECK(matern_cov(0.0, t, q) == doctest::Approx(matern_cov(0.0, t, p)).epsilon(1e-6));
  }
  SUBCASE("vanishes at large distance") {
    MaternParams q = p;
    q.rho = 0.01;
    CHECK(matern_cov(0.0, 0.5, q) < 1e-12);
  }
}

TEST_CASE("build_prior: smooth block structure") {
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const std::vector<CircleGuess> circles = {{5.0, -3.0, 1.0, 0, 1.0}};
  const PriorSpec prior = build_prior(circles, ShapeVariant::smooth, 5, hyper);

  CHECK(prior.dim() == 14);
  const Eigen::VectorXd nu0 = prior.nu0().flat();
  CHECK(nu0[0] == 5.0);
  CHECK(nu0[1] == -3.0);
  CHECK(nu0[2] == 1.0);
  for (int i = 3; i < 13; ++i) CHECK(nu0[i] == 0.0);
  CHECK(nu0[13] == doctest::Approx(1.69));

  CHECK(prior.cov()(0, 0) == doctest::Approx(0.1));
  CHECK(prior.cov()(2, 2) == doctest::Approx(0.1));
  CHECK(prior.cov()(3, 3) == doctest::Approx(0.1 / 8.0));  // q = 1: 0.1/(1+1)^3
  CHECK(prior.cov()(4, 4) == doctest::Approx(0.1 / 8.0));
  CHECK(prior.cov()(5, 5) == doctest::Approx(0.1 / 125.0));  // q = 2: 0.1/5^3
  CHECK(prior.cov()(13, 13) == doctest::Approx(400.0));

  SUBCASE("dimension formulas for multiple blocks") {
    for (int L : {1, 2, 3}) {
      std::vector<CircleGuess> many;
      for (int l = 0; l < L; ++l) many.push_back({2.0 + 3.0 * l, -3.0, 0.8, 0, 1.0});
      CHECK(build_prior(many, ShapeVariant::smooth, 5, hyper).dim() == L * 14);
    }
  }
}

TEST_CASE("build_prior: piecewise Matern block") {
  PriorHyper hyper;
  hyper.domain = {0, 10, -7, 0};
  const std::vector<CircleGuess> circles = {{5.0, -3.0, 1.0, 0, 1.0}};
  const int Z = 128;
  const PriorSpec prior = build_prior(circles, ShapeVariant::piecewise, Z, hyper);
  CHECK(prior.dim() == Z + 3);

  const Eigen::MatrixXd cov = prior.cov();
  SUBCASE("Matern block is symmetric and circulant") {
    for (int i = 0; i < Z; ++i)
      for (int j = 0; j < i; ++j) {
        CHECK(cov(2 + i, 2 + j) == doctest::Approx(cov(2 + j, 2 + i)).epsilon(1e-12));
        const int shift = (i + 1) % Z;
        const int shift_j = (j + 1) % Z;
        CHECK(cov(2 + i, 2 + j) ==
              doctest::Approx(cov(2 + shift, 2 + shift_j)).epsilon(1e-10));
      }
  }
  SUBCASE("sampling transform round-trips") {
    auto rng = substream(99, 1);
    const Eigen::VectorXd y = prior.sample(rng);
    const ParameterVector nu = prior.to_raw(y);
    for (int j = 0; j < Z; ++j) CHECK(nu.flat()[2 + j] > 0.0);
    const Eigen::VectorXd back = prior.to_sampling(nu);
    CHECK((back - y).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("mean of log radii is log rho0") {
    const Eigen::VectorXd m = prior.mean_sampling();
    for (int j = 0; j < Z; ++j) CHECK(m[2 + j] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m[Z + 2] == doctest::Approx(std::log(1.69)));
  }
}

TEST_CASE("select_C0: clean single-anomaly data accepts a threshold") {
  // Data from a true anomaly; the thresholded guess must beat the empty set.
  SimulationConfig data_cfg = test::tiny_config();
  const DataSet clean = generate_truth(test::tiny_truth(), data_cfg);
  const SplitData parts = split(clean);

  SimulationConfig inv = data_cfg.coarsened(2.0);
  const FEMSystem sys = homogeneous_system(inv);
  const WaveSolution U = forward_homogeneous(sys, inv);
  std::vector<int> all;
  for (int k = 0; k < parts.even.receiver_count(); ++k) all.push_back(k);
  const WaveSolution P = adjoint_from_data(sys, U, parts.even, all, inv);
  const EnergyField E = energy(U, P, inv);

  const C0Selection sel = select_C0(E, parts.even, inv);
  CHECK(sel.satisfied);
  CHECK(sel.J_omega0 < sel.J_empty);
  CHECK(sel.C0 > 0.0);
  CHECK(sel.C0 <= 0.3);
}

}  // TEST_SUITE
