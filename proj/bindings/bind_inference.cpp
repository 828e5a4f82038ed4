#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shearbayes/map_laplace.hpp"
#include "shearbayes/mcmc.hpp"
#include "shearbayes/posterior.hpp"
#include "shearbayes/rng.hpp"
#include "shearbayes/topo_prior.hpp"

namespace py = pybind11;
using namespace shearbayes;

void bind_inference(py::module_& m) {
  py::enum_<SamplerKind>(m, "SamplerKind")
      .value("saies", SamplerKind::saies)
      .value("aies", SamplerKind::aies);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("kind", &SamplerConfig::kind)
      .def_readwrite("walkers", &SamplerConfig::walkers)
      .def_readwrite("steps", &SamplerConfig::steps)
      .def_readwrite("thin", &SamplerConfig::thin)
      .def_readwrite("a", &SamplerConfig::a)
      .def_readwrite("lambda_", &SamplerConfig::lambda)
      .def_readwrite("seed", &SamplerConfig::seed);

  py::class_<Chain>(m, "Chain")
      .def_readonly("walkers", &Chain::walkers)
      .def_readonly("dim", &Chain::dim)
      .def_readonly("kept", &Chain::kept)
      .def_readonly("burn_index", &Chain::burn_index)
      .def_readonly("samples", &Chain::samples)
      .def_readonly("log_post", &Chain::log_post)
      .def("pooled_post_burn", &Chain::pooled_post_burn)
      .def("acceptance_rate", &Chain::acceptance_rate, py::arg("walker"));

  m.def("draw_stretch", [](double a, std::uint64_t seed, long count) {
    auto rng = substream(seed, 7);
    Eigen::VectorXd out(count);
    for (long i = 0; i < count; ++i) out[i] = draw_stretch(a, rng);
    return out;
  });

  // Generic sampler entry point: the target density and prior sampler may be
  // Python callables (evaluated on the calling thread only).
  m.def(
      "run_sampler",
      [](const SamplerConfig& config,
         const std::function<double(const Eigen::VectorXd&)>& log_density, int dim,
         const std::function<Eigen::VectorXd(std::uint64_t)>& sample_prior) {
        Target target;
        target.dim = dim;
        target.log_density = log_density;
        long counter = 0;
        target.sample_prior = [&sample_prior, &counter](std::mt19937_64& rng) {
          (void)rng;
          return sample_prior(static_cast<std::uint64_t>(counter++));
        };
        SamplerConfig cfg = config;
        cfg.threads = 1;
        cfg.schedule = WalkerSchedule::sequential;
        return run(cfg, target);
      },
      py::arg("config"), py::arg("log_density"), py::arg("dim"), py::arg("sample_prior"));

  py::class_<MaternParams>(m, "MaternParams")
      .def(py::init<>())
      .def_readwrite("nu", &MaternParams::nu)
      .def_readwrite("rho", &MaternParams::rho)
      .def_readwrite("sigma", &MaternParams::sigma);
  m.def("matern_cov", &matern_cov, py::arg("theta_i"), py::arg("theta_j"), py::arg("params"));

  py::class_<CircleGuess>(m, "CircleGuess")
      .def(py::init<>())
      .def_readwrite("cx", &CircleGuess::cx)
      .def_readwrite("cy", &CircleGuess::cy)
      .def_readwrite("rho0", &CircleGuess::rho0);

  py::class_<PriorHyper>(m, "PriorHyper")
      .def(py::init<>())
      .def_readwrite("var_center", &PriorHyper::var_center)
      .def_readwrite("var_a0", &PriorHyper::var_a0)
      .def_readwrite("var_mu", &PriorHyper::var_mu)
      .def_readwrite("fourier_decay_s", &PriorHyper::fourier_decay_s)
      .def_readwrite("matern", &PriorHyper::matern)
      .def_readwrite("mu_background", &PriorHyper::mu_background)
      .def_readwrite("domain", &PriorHyper::domain);

  py::class_<PriorSpec>(m, "PriorSpec")
      .def_property_readonly("dim", &PriorSpec::dim)
      .def_property_readonly("nu0", &PriorSpec::nu0)
      .def_property_readonly("cov", &PriorSpec::cov)
      .def("to_sampling", &PriorSpec::to_sampling)
      .def("to_raw", &PriorSpec::to_raw);

  m.def("build_prior", &build_prior, py::arg("circles"), py::arg("variant"),
        py::arg("order"), py::arg("hyper"));

  py::class_<NoiseCov>(m, "NoiseCov")
      .def(py::init([](double sigma) { return NoiseCov{sigma}; }), py::arg("sigma"))
      .def_readwrite("sigma", &NoiseCov::sigma);
  m.def("log_likelihood", &log_likelihood, py::arg("pred"), py::arg("data"),
        py::arg("noise"));
  m.def("log_prior", &log_prior, py::arg("nu"), py::arg("prior"));
}
