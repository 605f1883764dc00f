// Python bindings for the kgs library.
#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kgs/cli_runner.hpp"
#include "kgs/function_norms.hpp"
#include "kgs/kgs_solver.hpp"
#include "kgs/resonance_analysis.hpp"

namespace py = pybind11;
using namespace kgs;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

CVec to_cvec(const CArray& a, std::size_t n) {
    if (a.ndim() != 1 || static_cast<std::size_t>(a.shape(0)) != n)
        throw py::value_error("expected a 1-d array of length " + std::to_string(n));
    return CVec(a.data(), a.data() + n);
}

py::array_t<cplx> to_array(const CVec& v) { return py::array_t<cplx>(static_cast<py::ssize_t>(v.size()), v.data()); }

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict lemma_row(const LemmaRow& r) {
    py::dict d;
    d["tag"] = r.tag;
    d["sign"] = r.sign;
    d["k"] = r.k ? py::cast(*r.k) : py::none();
    d["k1"] = r.k1 ? py::cast(*r.k1) : py::none();
    d["k2"] = r.k2 ? py::cast(*r.k2) : py::none();
    d["feasible"] = r.feasible;
    d["min_abs"] = r.min_abs;
    d["bound"] = r.bound;
    d["margin"] = r.margin;
    d["c0"] = r.c0;
    d["status"] = r.status;
    return d;
}

}  // namespace

PYBIND11_MODULE(_kgslab, m) {
    m.doc() = "Radial Klein-Gordon-Schrodinger numerics";
    m.attr("__version__") = KGS_VERSION;

    py::class_<RadialGrid, std::shared_ptr<RadialGrid>>(m, "Grid")
        .def(py::init([](double r_max, std::size_t n) { return std::make_shared<RadialGrid>(*make_grid(r_max, n)); }),
             py::arg("r_max"), py::arg("n_points"))
        .def_readonly("r_max", &RadialGrid::r_max)
        .def_readonly("n", &RadialGrid::n)
        .def_readonly("dr", &RadialGrid::dr)
        .def_property_readonly("r", [](const RadialGrid& g) { return to_array(g.nodes()); })
        .def_property_readonly("xi", [](const RadialGrid& g) { return to_array(g.dual_nodes()); })
        .def_property_readonly("nyquist_octave", [](const RadialGrid& g) { return nyquist_octave(g); })
        .def("__repr__", [](const RadialGrid& g) {
            return "Grid(r_max=" + std::to_string(g.r_max) + ", n_points=" + std::to_string(g.n) + ")";
        });

    m.def("forward_transform", [](std::shared_ptr<RadialGrid> g, const CArray& f) {
        CVec out;
        forward_raw(*g, to_cvec(f, g->n), out);
        return to_array(out);
    }, py::arg("grid"), py::arg("values"), "radial Fourier transform on the dual nodes");
    m.def("inverse_transform", [](std::shared_ptr<RadialGrid> g, const CArray& F) {
        CVec out;
        inverse_raw(*g, to_cvec(F, g->n), out);
        return to_array(out);
    }, py::arg("grid"), py::arg("coeffs"));
    m.def("lq_norm", [](std::shared_ptr<RadialGrid> g, const CArray& f, double q) { return lq_norm_raw(*g, to_cvec(f, g->n), q); },
          py::arg("grid"), py::arg("values"), py::arg("q") = 2.0);

    m.def("phi", [](double a, double b, double c, int sign) { return phi(ResonancePoint{a, b, c}, sign); }, py::arg("a"), py::arg("b"),
          py::arg("cos"), py::arg("sign") = 1, "Schrodinger resonance function at |xi| = a, |eta| = b, angle cosine cos");
    m.def("psi", [](double a, double b, double c) { return psi(ResonancePoint{a, b, c}); }, py::arg("a"), py::arg("b"), py::arg("cos"));
    m.def("verify_lemma", [](const std::string& which, std::vector<int> first, std::vector<int> second, int resolution) {
        LemmaSweep s;
        s.which = parse_lemma_case(which);
        s.first = std::move(first);
        s.second = std::move(second);
        s.resolution = resolution;
        py::list out;
        for (const auto& r : verify_lemma(s)) out.append(lemma_row(r));
        return out;
    }, py::arg("case"), py::arg("first"), py::arg("second") = std::vector<int>{}, py::arg("resolution") = 200);

    m.def("p_variation", [](const std::vector<std::vector<double>>& dist, double p) { return p_variation_from_distances(dist, p); },
          py::arg("distances"), py::arg("p") = 2.0, "p-variation of a sequence given its pairwise distance matrix");

    m.def("solve", [](std::shared_ptr<RadialGrid> g, double delta, double T, double dt, const std::string& method, double width,
                      int save_every, double coupling) {
        const GridPtr grid = g;
        const auto d = gaussian_data(grid, delta, width);
        SolverOptions o;
        o.save_every = save_every;
        o.coupling = coupling;
        Trajectory tr;
        {
            py::gil_scoped_release release;
            tr = solve(d.u, d.N, T, dt, parse_method(method), o);
        }
        const auto rows = static_cast<py::ssize_t>(tr.states.size()), cols = static_cast<py::ssize_t>(g->n);
        py::array_t<cplx> u({rows, cols}), N({rows, cols});
        std::vector<double> times;
        for (py::ssize_t l = 0; l < rows; ++l) {
            std::copy(tr.states[l].u.values.begin(), tr.states[l].u.values.end(), u.mutable_data(l, 0));
            std::copy(tr.states[l].N.values.begin(), tr.states[l].N.values.end(), N.mutable_data(l, 0));
            times.push_back(tr.states[l].t);
        }
        py::dict out;
        out["t"] = to_array(times);
        out["u"] = u;
        out["N"] = N;
        out["mass"] = to_array(tr.mass);
        out["mass_drift"] = tr.mass_drift;
        out["status"] = tr.status;
        // the residual needs consecutive steps; strided snapshots would measure differencing error
        out["residual"] = save_every == 1 && tr.states.size() >= 3 ? residual(tr, o) : std::nan("");
        return out;
    }, py::arg("grid"), py::arg("delta") = 0.01, py::arg("T") = 1.0, py::arg("dt") = 1.0 / 128, py::arg("method") = "strang_split",
       py::arg("width") = 2.0, py::arg("save_every") = 1, py::arg("coupling") = 1.0);

    m.def("experiments", [] {
        py::list out;
        for (auto e : all_experiments()) out.append(py::make_tuple(experiment_name(e), experiment_summary(e)));
        return out;
    });
    m.def("run_config", [](const std::string& text, const std::string& out_dir, int threads) {
        auto cfg = parse_config(text);
        RunOutcome o;
        {
            py::gil_scoped_release release;
            o = run(cfg, out_dir, threads);
        }
        py::dict d;
        d["exit_status"] = o.exit_status;
        d["rows"] = o.rows;
        d["failed"] = o.failed;
        d["artifacts"] = o.artifacts;
        d["message"] = o.message;
        return d;
    }, py::arg("text"), py::arg("out_dir"), py::arg("threads") = 1, "run one experiment from config text");

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
}
