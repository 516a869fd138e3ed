#include "fusedfir/bounds.hpp"
#include "fusedfir/criterion.hpp"
#include "fusedfir/dataset.hpp"
#include "fusedfir/error.hpp"
#include "fusedfir/kmeans.hpp"
#include "fusedfir/least_squares.hpp"
#include "fusedfir/metrics.hpp"
#include "fusedfir/pipeline.hpp"
#include "fusedfir/regressor.hpp"
#include "fusedfir/solver.hpp"
#include "fusedfir/synthetic.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace fusedfir;

namespace {

// Thetas cross the boundary as plain numpy vectors; the structure comes from the problems.
std::vector<ParameterVector> to_params(const std::vector<Vector>& thetas, const std::vector<RegressionProblem>& problems)
{
    const ModelStructure s = problems.empty() ? ModelStructure{} : common_structure(problems);
    std::vector<ParameterVector> out;
    for (const auto& t : thetas)
        out.emplace_back(s, t);
    return out;
}

std::vector<Vector> to_vectors(std::span<const ParameterVector> thetas)
{
    std::vector<Vector> out;
    for (const auto& t : thetas)
        out.push_back(t.values());
    return out;
}

py::dict solve_dict(const SolveResult& r)
{
    py::dict d;
    d["thetas"] = to_vectors(r.thetas);
    d["objective"] = r.objective.total;
    d["fit_term"] = r.objective.fit_term;
    d["fusion_term"] = r.objective.fusion_term;
    d["sparsity_term"] = r.objective.sparsity_term;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["primal_residual"] = r.primal_residual;
    d["dual_residual"] = r.dual_residual;
    return d;
}

Hyperparameters make_hp(double lambda1, double lambda2, const std::string& fusion)
{
    return Hyperparameters{lambda1, lambda2, parse_fusion_variant(fusion)};
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Joint FIR estimation with fusion and sparsity penalties";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

    py::class_<ModelStructure>(m, "ModelStructure")
        .def(py::init([](int taps, int channels) { return ModelStructure{taps, channels}; }), py::arg("taps"),
             py::arg("channels"))
        .def_readwrite("taps", &ModelStructure::taps)
        .def_readwrite("channels", &ModelStructure::channels)
        .def_property_readonly("n_theta", &ModelStructure::n_theta)
        .def("__repr__", [](const ModelStructure& s) { return to_string(s); });

    py::class_<RegressionProblem>(m, "RegressionProblem")
        .def(py::init([](Vector y, Matrix phi, int taps, int channels, std::string name) {
                 RegressionProblem p{std::move(y), std::move(phi), ModelStructure{taps, channels}, std::move(name)};
                 p.validate();
                 return p;
             }),
             py::arg("y"), py::arg("phi"), py::arg("taps"), py::arg("channels") = 1, py::arg("name") = "C")
        .def_readonly("y", &RegressionProblem::y)
        .def_readonly("phi", &RegressionProblem::phi)
        .def_readonly("structure", &RegressionProblem::structure)
        .def_readonly("name", &RegressionProblem::condition_name);

    m.def(
        "build_regressor",
        [](Matrix inputs, Vector output, int taps, const std::string& name) {
            const auto ds = make_dataset(name, std::move(inputs), std::move(output));
            return build_regressor(ds, ModelStructure{taps, ds.channels()});
        },
        py::arg("inputs"), py::arg("output"), py::arg("taps"), py::arg("name") = "C1-1");

    m.def(
        "ls_fit",
        [](const RegressionProblem& p) {
            const auto f = ls_fit(p);
            return py::make_tuple(f.theta.values(), f.residual_norm_sq);
        },
        py::arg("problem"), "Returns (theta, residual_norm_sq).");
    m.def(
        "pooled_ls_fit",
        [](const std::vector<RegressionProblem>& ps) { return pooled_ls_fit(ps).theta.values(); },
        py::arg("problems"));

    m.def("prox_block_l2", &prox_block_l2, py::arg("v"), py::arg("tau"));
    m.def("prox_l1", &prox_l1, py::arg("v"), py::arg("tau"));
    m.def("fit_metric", &fit_metric, py::arg("y"), py::arg("y_hat"));
    m.def(
        "adjusted_rand_index",
        [](const std::vector<int>& a, const std::vector<int>& b) { return adjusted_rand_index(a, b); },
        py::arg("a"), py::arg("b"));

    m.def(
        "objective",
        [](const std::vector<RegressionProblem>& ps, const std::vector<Vector>& thetas, double l1, double l2,
           const std::string& fusion) {
            return objective(ps, to_params(thetas, ps), make_hp(l1, l2, fusion)).total;
        },
        py::arg("problems"), py::arg("thetas"), py::arg("lambda1"), py::arg("lambda2"), py::arg("fusion") = "l2");

    m.def(
        "solve",
        [](const std::vector<RegressionProblem>& ps, double l1, double l2, const std::string& fusion, double rho,
           int max_iter) {
            SolverConfig cfg;
            cfg.rho = rho;
            cfg.max_iter = max_iter;
            SolveResult r;
            {
                py::gil_scoped_release release;
                r = solve(ps, make_hp(l1, l2, fusion), cfg);
            }
            return solve_dict(r);
        },
        py::arg("problems"), py::arg("lambda1"), py::arg("lambda2"), py::arg("fusion") = "l2", py::arg("rho") = 1.0,
        py::arg("max_iter") = 50'000);

    m.def(
        "solve_oracle",
        [](const std::vector<RegressionProblem>& ps, double l1, double l2, int iterations, std::uint64_t seed) {
            OracleConfig cfg;
            cfg.iterations = iterations;
            cfg.seed = seed;
            const auto r = solve_oracle(ps, make_hp(l1, l2, "l2"), cfg);
            auto d = solve_dict(r.solve);
            d["duality_gap"] = r.duality_gap;
            return d;
        },
        py::arg("problems"), py::arg("lambda1"), py::arg("lambda2"), py::arg("iterations") = 200'000,
        py::arg("seed") = 0);

    m.def(
        "compute_bounds",
        [](const std::vector<RegressionProblem>& ps) {
            const auto b = compute_bounds(ps);
            py::dict d;
            d["lambda1_max"] = b.lambda1_max;
            d["lambda1_sufficient"] = b.lambda1_sufficient;
            d["lambda2_max"] = b.lambda2_max;
            d["theta_star"] = b.theta_star.values();
            d["gradients"] = b.per_condition_gradients;
            return d;
        },
        py::arg("problems"));
    m.def(
        "lambda2_max", [](const std::vector<RegressionProblem>& ps) { return lambda2_max(ps); },
        py::arg("problems"));
    m.def(
        "coalescence_certificate",
        [](const std::vector<RegressionProblem>& ps, double lambda1) {
            const auto c = coalescence_certificate(ps, lambda1);
            return py::make_tuple(c.z_norm_max, c.identity_residual, c.certified);
        },
        py::arg("problems"), py::arg("lambda1"), "Returns (z_norm_max, identity_residual, certified).");

    m.def(
        "kmeans",
        [](const std::vector<Vector>& points, int k, std::uint64_t seed, int restarts) {
            std::vector<ParameterVector> ps;
            for (const auto& p : points)
                ps.emplace_back(ModelStructure{static_cast<int>(p.size()), 1}, p);
            const auto a = kmeans(ps, k, seed, restarts);
            return py::make_tuple(a.labels, a.inertia);
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 10,
        "Returns (labels, inertia).");

    m.def(
        "synthesize",
        [](const std::string& config_json) {
            const auto scn = scenario_from_json(nlohmann::json::parse(config_json));
            py::list out;
            for (const auto& ds : generate_synthetic(scn))
                out.append(py::make_tuple(ds.name, ds.inputs, ds.output));
            return out;
        },
        py::arg("config_json"), "Returns [(name, inputs, output)] for a scenario JSON string.");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& manifest, int taps, int k, std::uint64_t seed, const std::string& fusion,
           unsigned threads) {
            std::string text;
            {
                py::gil_scoped_release release;
                const auto inputs = load_pipeline_inputs(manifest);
                if (inputs.estimation.empty())
                    throw DataError("manifest has no estimation datasets");
                PipelineOptions opts;
                opts.k_clusters = k;
                opts.seed = seed;
                opts.fusion = parse_fusion_variant(fusion);
                opts.threads = threads;
                const auto report = run_pipeline(inputs, {taps, inputs.estimation.front().channels()}, opts);
                text = to_json(report).dump(2);
            }
            return text;
        },
        py::arg("manifest"), py::arg("taps"), py::arg("k") = 2, py::arg("seed") = 0, py::arg("fusion") = "l2",
        py::arg("threads") = 1, "Runs the full pipeline and returns report.json as a string.");
}
