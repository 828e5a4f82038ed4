#include <pybind11/pybind11.h>

namespace py = pybind11;

void bind_shapes(py::module_&);
void bind_fem(py::module_&);
void bind_inference(py::module_&);

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian full-waveform shear elastography: core operations";
  bind_shapes(m);
  bind_fem(m);
  bind_inference(m);
}
