#include <pybind11/pybind11.h>
PYBIND11_MODULE(_vexel, m) { m.doc() = "placeholder"; }
