#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "shearbayes/errors.hpp"
#include "shearbayes/pipeline.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct GlobalOptions {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;  // 0 = take the configured seed
  bool allow_inverse_crime = false;
};

std::uint64_t effective_seed(const GlobalOptions& g, const shearbayes::RunConfig& cfg) {
  return g.seed != 0 ? g.seed : cfg.seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian shear-wave inversion for star-shaped anomalies"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config, "configuration file")->required();
  app.add_option("--seed", global.seed, "random seed (overrides the configured one)");
  app.add_option("--out", global.out, "output directory");
  app.add_flag("--allow-inverse-crime", global.allow_inverse_crime,
               "allow inversion on the data-generation mesh");

  app.add_subcommand("synth", "generate clean and noisy synthetic data");
  app.add_subcommand("topo", "topological energy fields, circle guesses and prior");
  app.add_subcommand("mcmc", "sample the posterior with the configured ensemble sampler");
  app.add_subcommand("map", "Gauss-Newton MAP estimate with posterior covariance");
  app.add_subcommand("laplace", "draw samples from the Laplace approximation");
  auto* report_cmd = app.add_subcommand("report", "summary statistics and fields");
  std::string report_source = "chain";
  report_cmd->add_option("--source", report_source, "chain | laplace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const shearbayes::RunConfig cfg = shearbayes::load_run_config(global.config);
    const shearbayes::Paths paths{global.out};
    const std::uint64_t seed = effective_seed(global, cfg);

    if (app.got_subcommand("synth")) {
      shearbayes::run_synth(cfg, paths, seed);
    } else if (app.got_subcommand("topo")) {
      const auto topo = shearbayes::run_topo(cfg, paths, global.allow_inverse_crime);
      std::cout << "detected " << topo.circles.size() << " circle(s), C0 = " << topo.C0
                << (topo.C0_satisfied ? "" : " (threshold condition not met, kept smallest)")
                << '\n';
    } else if (app.got_subcommand("mcmc")) {
      const auto chain = shearbayes::run_mcmc(cfg, paths, seed, global.allow_inverse_crime);
      double rate = 0.0;
      for (int w = 0; w < chain.walkers; ++w) rate += chain.acceptance_rate(w);
      std::cout << "kept " << chain.kept << " steps per walker, mean acceptance "
                << rate / chain.walkers << '\n';
      for (const auto& warning : chain.warnings) std::cerr << "warning: " << warning << '\n';
    } else if (app.got_subcommand("map")) {
      const auto res = shearbayes::run_map(cfg, paths, global.allow_inverse_crime);
      std::cout << (res.converged ? "converged" : "NOT converged") << " after "
                << res.outer_iterations << " outer iterations, cost "
                << res.cost_history.back() << '\n';
    } else if (app.got_subcommand("laplace")) {
      const auto samples = shearbayes::run_laplace(cfg, paths, seed);
      std::cout << samples.samples.rows() << " draws, " << samples.admissible_count()
                << " admissible\n";
    } else if (app.got_subcommand("report")) {
      shearbayes::run_report(cfg, paths, report_source);
    }
    return 0;
  } catch (const shearbayes::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const shearbayes::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const shearbayes::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
