#include <pybind11/pybind11.h>
PYBIND11_MODULE(_ppflow, m) { m.doc() = "stub"; }
