#include "shearbayes/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "shearbayes/errors.hpp"
#include "shearbayes/io.hpp"
#include "shearbayes/report.hpp"
#include "shearbayes/synthetic.hpp"

namespace shearbayes {

namespace {
using json = nlohmann::json;

void ensure_dir(const std::string& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
}

GridSpec report_grid(const RunConfig& cfg) {
  const auto mesh = Mesh::build(cfg.data.domain, cfg.inversion_dx);
  return GridSpec{cfg.data.domain, mesh->nx_cells() + 1, mesh->ny_cells() + 1};
}

}  // namespace

SimulationConfig inversion_config(const RunConfig& cfg, bool allow_inverse_crime) {
  if (!allow_inverse_crime &&
      (cfg.inversion_dx == cfg.data.dx || cfg.inversion_dt == cfg.data.dt))
    throw ConfigError(
        "inverse-crime guard: inversion steps match the data-generation steps "
        "(pass --allow-inverse-crime to override)");
  SimulationConfig inv = cfg.data;
  inv.dx = cfg.inversion_dx;
  inv.dt = cfg.inversion_dt;
  return inv;
}

std::vector<std::vector<int>> make_fractions(int receiver_count, int fraction_count) {
  if (fraction_count <= 1 || receiver_count < 3) {
    std::vector<int> all(static_cast<std::size_t>(receiver_count));
    for (int k = 0; k < receiver_count; ++k) all[static_cast<std::size_t>(k)] = k;
    return {all};
  }
  // Overlapping windows of half the array, evenly spaced starts.
  const int w = std::max(2, (receiver_count + 1) / 2);
  std::vector<std::vector<int>> fractions;
  for (int f = 0; f < fraction_count; ++f) {
    const int start = (receiver_count - w) * f / (fraction_count - 1);
    std::vector<int> idx;
    for (int k = start; k < std::min(start + w, receiver_count); ++k) idx.push_back(k);
    fractions.push_back(std::move(idx));
  }
  return fractions;
}

void run_synth(const RunConfig& cfg, const Paths& paths, std::uint64_t seed) {
  ensure_dir(paths.out);
  const DataSet clean = generate_truth(cfg.truth, cfg.data);
  const DataSet noisy = add_noise(clean, cfg.noise_alpha, seed);
  const SplitData parts = split(noisy);
  write_dataset(paths.clean_data(), clean);
  write_dataset(paths.noisy_data(), noisy);
  write_dataset(paths.even_data(), parts.even);
  write_dataset(paths.odd_data(), parts.odd);
  write_shape(paths.truth_shape(), cfg.truth);
}

TopoOutputs run_topo(const RunConfig& cfg, const Paths& paths, bool allow_inverse_crime) {
  ensure_dir(paths.out);
  const SimulationConfig inv = inversion_config(cfg, allow_inverse_crime);
  const DataSet d_even = read_dataset(paths.even_data(), cfg.data.receivers);

  const FEMSystem system = homogeneous_system(inv);
  const WaveSolution U = forward_homogeneous(system, inv);

  const int K = static_cast<int>(inv.receivers.size());
  std::vector<int> all(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) all[static_cast<std::size_t>(k)] = k;

  TopoOutputs out;
  out.full_field = energy(U, adjoint_from_data(system, U, d_even, all, inv), inv);
  write_field(paths.energy_full(), out.full_field);

  if (cfg.auto_C0) {
    const C0Selection sel = select_C0(out.full_field, d_even, inv, cfg.C0);
    out.C0 = sel.C0;
    out.C0_satisfied = sel.satisfied;
  } else {
    out.C0 = cfg.C0;
    out.C0_satisfied = true;
  }

  TopoConfig topo;
  topo.C0 = out.C0;
  topo.peak_min_separation = cfg.peak_min_separation;
  topo.fractions = make_fractions(K, cfg.fraction_count);
  topo.validate(K);

  std::vector<EnergyField> fields;
  for (std::size_t f = 0; f < topo.fractions.size(); ++f) {
    const WaveSolution P = adjoint_from_data(system, U, d_even, topo.fractions[f], inv);
    fields.push_back(energy(U, P, inv));
    write_field(paths.energy_field(static_cast<int>(f)), fields.back());
  }

  out.circles = detect(fields, topo);
  write_circles(paths.circles(), out.circles);

  const int order = cfg.prior_variant == ShapeVariant::smooth ? cfg.Q : cfg.Z;
  PriorHyper hyper = cfg.hyper;
  hyper.domain = cfg.data.domain;
  out.prior = build_prior(out.circles, cfg.prior_variant, order, hyper);
  write_prior(paths.prior(), out.prior, out.circles, hyper, out.C0, out.C0_satisfied);
  return out;
}

std::shared_ptr<Posterior> load_posterior(const RunConfig& cfg, const Paths& paths,
                                          bool allow_inverse_crime) {
  const SimulationConfig inv = inversion_config(cfg, allow_inverse_crime);
  const DataSet d_odd = read_dataset(paths.odd_data(), cfg.data.receivers);
  if (!(d_odd.noise_sigma > 0.0))
    throw ConfigError("odd-split data carries no noise level; rerun synth with alpha > 0");
  const PriorFile prior_file = read_prior(paths.prior());
  auto op = std::make_shared<ForwardOperator>(inv, d_odd.times);
  return std::make_shared<Posterior>(op, prior_file.prior, d_odd,
                                     NoiseCov{d_odd.noise_sigma});
}

Chain run_mcmc(const RunConfig& cfg, const Paths& paths, std::uint64_t seed,
               bool allow_inverse_crime) {
  ensure_dir(paths.out);
  std::shared_ptr<Posterior> posterior = load_posterior(cfg, paths, allow_inverse_crime);
  SamplerConfig sampler = cfg.sampler;
  sampler.seed = seed;
  const Chain chain = run(sampler, make_target(posterior));
  write_chain(paths.chain(), chain);
  write_chain_diagnostics(paths.diagnostics(), chain);
  return chain;
}

MAPResult run_map(const RunConfig& cfg, const Paths& paths, bool allow_inverse_crime) {
  ensure_dir(paths.out);
  std::shared_ptr<Posterior> posterior = load_posterior(cfg, paths, allow_inverse_crime);
  OptimizerConfig opt = cfg.optimizer;
  opt.mu_background = cfg.data.c_background * cfg.data.c_background;
  const ForwardMap f = [posterior](const ParameterVector& nu) {
    return posterior->forward().predict(nu);
  };
  const MAPResult res =
      lm_solve(f, opt, posterior->prior(), posterior->data(), posterior->noise());

  write_shape(paths.map_shape(), res.nu_map);
  write_matrix(paths.gamma_pt(), res.gamma_pt);
  write_cost_history(paths.cost_history(), res.cost_history);
  json meta;
  meta["converged"] = res.converged;
  meta["outer_iterations"] = res.outer_iterations;
  meta["final_cost"] = res.cost_history.back();
  std::ofstream(paths.map_meta()) << meta.dump(2) << '\n';
  return res;
}

LaplaceSamples run_laplace(const RunConfig& cfg, const Paths& paths, std::uint64_t seed) {
  ensure_dir(paths.out);
  const ParameterVector nu_map = read_shape(paths.map_shape());
  const Eigen::MatrixXd gamma = read_matrix(paths.gamma_pt());
  const PriorFile prior_file = read_prior(paths.prior());

  LaplaceCov cov;
  cov.cov = 0.5 * (gamma + gamma.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.cov);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-12)
    throw NumericalError("stored posterior covariance is not positive semidefinite");
  cov.sqrt = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
             eig.eigenvectors().transpose();

  const LaplaceSamples samples =
      sample_laplace(nu_map, cov, cfg.laplace_count, seed, prior_file.prior);
  write_laplace_samples(paths.laplace_samples(), samples);
  return samples;
}

void run_report(const RunConfig& cfg, const Paths& paths, const std::string& source) {
  ensure_dir(paths.out);
  const PriorFile prior_file = read_prior(paths.prior());
  const GridSpec grid = report_grid(cfg);

  if (source == "chain") {
    const Chain chain = read_chain(paths.chain());
    if (chain.dim != prior_file.prior.dim())
      throw ShapeError("chain dimension does not match the prior");
    const auto samples = chain_samples(chain, prior_file.prior);
    write_shape_stats(paths.stats(source), shape_stats(samples));
    write_field(paths.membership(source), membership_field(samples, grid));
    const auto [nu_map, lp] = map_from_chain(chain, prior_file.prior);
    write_shape(paths.chain_map_shape(), nu_map);
    write_shape(paths.mean_shape_file(), mean_shape(chain, prior_file.prior));
    return;
  }
  if (source == "laplace") {
    const LaplaceSamples laplace = read_laplace_samples(paths.laplace_samples());
    std::vector<ParameterVector> samples;
    const ParameterVector nu_map = read_shape(paths.map_shape());
    for (long i = 0; i < laplace.samples.rows(); ++i)
      if (laplace.admissible[static_cast<std::size_t>(i)])
        samples.push_back(nu_map.with_flat(laplace.samples.row(i).transpose()));
    if (samples.empty()) throw NumericalError("no admissible Laplace samples to report");
    write_shape_stats(paths.stats(source), shape_stats(samples));
    write_field(paths.membership(source), membership_field(samples, grid));
    return;
  }
  throw ConfigError("report source must be 'chain' or 'laplace'");
}

}  // namespace shearbayes
