#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shearbayes/fem.hpp"
#include "shearbayes/synthetic.hpp"

namespace py = pybind11;
using namespace shearbayes;

void bind_fem(py::module_& m) {
  py::class_<SimulationConfig>(m, "SimulationConfig")
      .def(py::init<>())
      .def_static("defaults", &SimulationConfig::defaults,
                  py::arg("transducer_step") = 0.5, py::arg("record_step") = 0.025)
      .def_readwrite("domain", &SimulationConfig::domain)
      .def_readwrite("dx", &SimulationConfig::dx)
      .def_readwrite("dt", &SimulationConfig::dt)
      .def_readwrite("fM", &SimulationConfig::fM)
      .def_readwrite("kappa", &SimulationConfig::kappa)
      .def_readwrite("emitters", &SimulationConfig::emitters)
      .def_readwrite("receivers", &SimulationConfig::receivers)
      .def_readwrite("record_times", &SimulationConfig::record_times)
      .def_readwrite("tau_in", &SimulationConfig::tau_in)
      .def_readwrite("tau_end", &SimulationConfig::tau_end)
      .def_readwrite("c_background", &SimulationConfig::c_background)
      .def_readwrite("depth_H", &SimulationConfig::depth_H)
      .def("effective_tau_end", &SimulationConfig::effective_tau_end)
      .def("coarsened", &SimulationConfig::coarsened, py::arg("factor") = 2.0);

  py::class_<Mesh, std::shared_ptr<Mesh>>(m, "Mesh")
      .def_property_readonly("nx_cells", &Mesh::nx_cells)
      .def_property_readonly("ny_cells", &Mesh::ny_cells)
      .def_property_readonly("node_count", &Mesh::node_count)
      .def_property_readonly("element_count", &Mesh::element_count)
      .def_property_readonly("hx", &Mesh::hx)
      .def_property_readonly("hy", &Mesh::hy);

  m.def(
      "build_mesh",
      [](const Rect& domain, double dx) {
        return std::const_pointer_cast<Mesh>(Mesh::build(domain, dx));
      },
      py::arg("domain"), py::arg("dx"));

  m.def("ricker", &ricker, py::arg("t"), py::arg("fM"));

  py::class_<DataSet>(m, "DataSet")
      .def_readonly("values", &DataSet::values)
      .def_readonly("times", &DataSet::times)
      .def_readonly("noise_sigma", &DataSet::noise_sigma)
      .def("flatten", &DataSet::flatten);

  m.def("generate_truth", &generate_truth, py::arg("truth"), py::arg("config"),
        "Clean synthetic data for a truth configuration");
  m.def("add_noise", &add_noise, py::arg("data"), py::arg("alpha"), py::arg("seed"));
  m.def(
      "split",
      [](const DataSet& data) {
        auto parts = split(data);
        return py::make_tuple(parts.even, parts.odd);
      },
      py::arg("data"), "Split into (even, odd) time subsets");

  m.def("rasterize",
        [](const ParameterVector& nu, const Mesh& mesh, double c_background) {
          return rasterize(nu, mesh, c_background).c2;
        });
}
