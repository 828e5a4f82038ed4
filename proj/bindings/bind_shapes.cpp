#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shearbayes/shapes.hpp"

namespace py = pybind11;
using namespace shearbayes;

void bind_shapes(py::module_& m) {
  py::class_<Vec2>(m, "Vec2")
      .def(py::init([](double x, double y) { return Vec2{x, y}; }), py::arg("x"),
           py::arg("y"))
      .def_readwrite("x", &Vec2::x)
      .def_readwrite("y", &Vec2::y)
      .def("__repr__", [](const Vec2& v) {
        return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ")";
      });

  py::class_<Rect>(m, "Rect")
      .def(py::init([](double x0, double x1, double y0, double y1) {
             return Rect{x0, x1, y0, y1};
           }),
           py::arg("x_min"), py::arg("x_max"), py::arg("y_min"), py::arg("y_max"))
      .def_readwrite("x_min", &Rect::x_min)
      .def_readwrite("x_max", &Rect::x_max)
      .def_readwrite("y_min", &Rect::y_min)
      .def_readwrite("y_max", &Rect::y_max)
      .def("contains", [](const Rect& r, double x, double y) {
        return r.contains({x, y});
      });

  py::enum_<ShapeVariant>(m, "ShapeVariant")
      .value("smooth", ShapeVariant::smooth)
      .value("piecewise", ShapeVariant::piecewise);

  py::class_<ParameterVector>(m, "ParameterVector")
      .def(py::init<ShapeVariant, int, int, Eigen::VectorXd>(), py::arg("variant"),
           py::arg("blocks"), py::arg("order"), py::arg("flat"))
      .def_static("circle", &ParameterVector::circle, py::arg("cx"), py::arg("cy"),
                  py::arg("radius"), py::arg("mu"), py::arg("Q"))
      .def_property_readonly("variant", &ParameterVector::variant)
      .def_property_readonly("blocks", &ParameterVector::block_count)
      .def_property_readonly("order", &ParameterVector::order)
      .def_property_readonly("dim", &ParameterVector::dim)
      .def_property_readonly("flat",
                             [](const ParameterVector& nu) { return nu.flat(); })
      .def("with_flat", &ParameterVector::with_flat)
      .def("mu", &ParameterVector::mu, py::arg("block"))
      .def("radius", &ParameterVector::radius, py::arg("block"), py::arg("theta"))
      .def("contains", [](const ParameterVector& nu, int block, double x, double y) {
        return contains(nu, block, {x, y});
      });

  py::class_<AdmissibilityRule>(m, "AdmissibilityRule")
      .def(py::init<>())
      .def_readwrite("theta_samples", &AdmissibilityRule::theta_samples)
      .def_readwrite("mu_min", &AdmissibilityRule::mu_min);

  m.def(
      "boundary",
      [](const ParameterVector& nu, int block, int samples) {
        const auto pts = boundary(nu, block, samples);
        Eigen::MatrixXd out(static_cast<long>(pts.size()), 2);
        for (std::size_t i = 0; i < pts.size(); ++i) {
          out(static_cast<long>(i), 0) = pts[i].x;
          out(static_cast<long>(i), 1) = pts[i].y;
        }
        return out;
      },
      py::arg("nu"), py::arg("block"), py::arg("samples") = 256);
  m.def("admissible", &admissible, py::arg("nu"), py::arg("rule"), py::arg("domain"));
}
