#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "config_file.hpp"
#include "physgrid/checkpoint.hpp"
#include "physgrid/errors.hpp"
#include "physgrid/finite_difference.hpp"
#include "physgrid/grid_io.hpp"
#include "physgrid/metrics.hpp"
#include "physgrid/synthetic.hpp"
#include "physgrid/training.hpp"

namespace py = pybind11;
using namespace physgrid;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const GridField& f) {
    Array out({f.nt(), f.ny(), f.nx(), f.nvars()});
    std::memcpy(out.mutable_data(), f.data().data(), f.data().size() * sizeof(double));
    return out;
}

GridField from_numpy(Array values, std::vector<std::string> names, const GridAxes& axes) {
    if (values.ndim() != 4) throw ShapeError("expected an array of shape (nt, ny, nx, nvars)");
    if (static_cast<std::size_t>(values.shape(3)) != names.size()) throw ShapeError("names do not match the last axis");
    GridField f(values.shape(0), values.shape(1), values.shape(2), std::move(names), axes);
    std::memcpy(f.data().data(), values.data(), f.data().size() * sizeof(double));
    f.validate();
    return f;
}

py::object json_to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "physgrid native core";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_IOError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<GridAxes>(m, "GridAxes")
        .def(py::init<>())
        .def_readwrite("x0", &GridAxes::x0)
        .def_readwrite("dx", &GridAxes::dx)
        .def_readwrite("y0", &GridAxes::y0)
        .def_readwrite("dy", &GridAxes::dy)
        .def_readwrite("t0", &GridAxes::t0)
        .def_readwrite("dt", &GridAxes::dt)
        .def_readwrite("space_units", &GridAxes::space_units)
        .def_readwrite("time_units", &GridAxes::time_units);

    py::class_<GridField>(m, "GridField")
        .def(py::init(&from_numpy), py::arg("values"), py::arg("names"), py::arg("axes") = GridAxes{})
        .def_property_readonly("shape", [](const GridField& f) { return py::make_tuple(f.nt(), f.ny(), f.nx(), f.nvars()); })
        .def_property_readonly("names", &GridField::names)
        .def_property_readonly("axes", &GridField::axes)
        .def("numpy", &to_numpy, "Copy of the values as an (nt, ny, nx, nvars) array")
        .def("frames", &GridField::frames, py::arg("begin"), py::arg("end"));

    m.def("load_grid", [](const std::string& p) { return load_grid(p); }, py::arg("path"));
    m.def("save_grid", [](const GridField& f, const std::string& p) { save_grid(f, p); }, py::arg("field"), py::arg("path"));

    m.def(
        "generate",
        [](const std::string& name, std::size_t nx, std::size_t ny, std::size_t nt, std::uint64_t seed, double noise) {
            SyntheticCase c = SyntheticCase::defaults(parse_case(name));
            c.nx = nx;
            c.ny = ny;
            c.nt = nt;
            c.seed = seed;
            c.noise = noise;
            GeneratedCase g = generate(c);
            py::dict d;
            d["coarse"] = g.coarse;
            d["fine2x"] = g.fine2x;
            d["fine4x"] = g.fine4x;
            d["truth"] = json_to_python(g.truth.to_json());
            d["self_check_passed"] = g.check.passed;
            return d;
        },
        py::arg("case"), py::arg("nx") = 32, py::arg("ny") = 32, py::arg("nt") = 100, py::arg("seed") = 0,
        py::arg("noise") = 0.0);

    m.def(
        "chronological_split",
        [](const GridField& f) {
            ChronologicalSplit s = chronological_split(f);
            return py::make_tuple(s.train, s.validation, s.test);
        },
        py::arg("field"));
    m.def("bicubic_upsample", &bicubic_upsample, py::arg("field"), py::arg("factor"));
    m.def("climatology", &climatology, py::arg("train"));
    m.def("rmse", [](const GridField& p, const GridField& t) { return rmse(p, t); }, py::arg("pred"), py::arg("truth"));
    m.def(
        "acc", [](const GridField& p, const GridField& t, const GridField& c) { return acc(p, t, c).value; },
        py::arg("pred"), py::arg("truth"), py::arg("climatology"));

    m.def(
        "fd_derivative",
        [](const GridField& f, const std::string& stencil, const std::string& axis, int order, std::size_t var) {
            const Axis a = axis == "x" ? Axis::X : axis == "y" ? Axis::Y : axis == "t" ? Axis::T
                                                                                  : throw UsageError("axis must be x, y or t");
            return to_numpy(fd_derivative(f, Stencil{parse_stencil(stencil), a, order}, var).field);
        },
        py::arg("field"), py::arg("stencil") = "central", py::arg("axis") = "x", py::arg("order") = 1, py::arg("var") = 0);

    m.def(
        "train",
        [](const GridField& data, const std::string& config_text) {
            TrainConfig config;
            const cli::ConfigFile file = cli::ConfigFile::parse(config_text, "<config>");
            cli::apply(file, config);
            file.reject_unused();
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(data, config);
            }
            py::dict d;
            d["system"] = json_to_python(r.system.to_json());
            d["history_csv"] = r.history_csv();
            d["best_epoch"] = r.best_epoch;
            d["best_validation_loss"] = r.best_validation_loss;
            d["aborted"] = r.aborted;
            const std::vector<std::uint8_t> net = encode_checkpoint(to_checkpoint(r.surrogate, data.names()));
            d["surrogate"] = py::bytes(reinterpret_cast<const char*>(net.data()), net.size());
            return d;
        },
        py::arg("data"), py::arg("config") = "");

    m.def(
        "downscale",
        [](py::bytes checkpoint, const GridField& base, std::size_t factor) {
            const std::string s = checkpoint;
            const std::vector<std::uint8_t> bytes(s.begin(), s.end());
            return downscale(to_field_net(decode_checkpoint(bytes)), base, factor);
        },
        py::arg("surrogate"), py::arg("base"), py::arg("factor"));
}
