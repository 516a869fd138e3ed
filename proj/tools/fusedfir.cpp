// fusedfir: batch front end for joint FIR soft-sensor estimation.
//
// Exit codes: 0 ok, 2 data/config error, 3 precondition (e.g. bounds for K = 1),
// 4 solver non-convergence, 1 anything else.

#include "fusedfir/bounds.hpp"
#include "fusedfir/dataset.hpp"
#include "fusedfir/error.hpp"
#include "fusedfir/format.hpp"
#include "fusedfir/least_squares.hpp"
#include "fusedfir/pipeline.hpp"
#include "fusedfir/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace fusedfir;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kData = 2, kPrecondition = 3, kNoConvergence = 4 };

struct CommonArgs {
    std::string manifest;
    int taps = 50;
    std::string out;
    unsigned threads = 0;
};

std::vector<RegressionProblem> problems_for(const std::vector<ConditionDataset>& sets, const ModelStructure& s)
{
    std::vector<RegressionProblem> out;
    for (const auto& ds : sets)
        out.push_back(build_regressor(ds, s));
    return out;
}

ModelStructure structure_for(const std::vector<ConditionDataset>& sets, int taps)
{
    if (sets.empty())
        throw DataError("manifest has no estimation datasets");
    return ModelStructure{taps, sets.front().channels()};
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

int cmd_synth(const std::string& config_path, const std::string& out_dir)
{
    const auto config = [&] {
        try {
            return nlohmann::json::parse(read_text_file(config_path));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("scenario config '" + config_path + "': " + e.what());
        }
    }();
    const auto scn = scenario_from_json(config);
    const auto datasets = generate_synthetic(scn);
    const fs::path out(out_dir);
    ensure_dir(out);

    Manifest manifest;
    for (const auto& ds : datasets) {
        const auto file = ds.name + ".csv";
        write_dataset_csv(out / file, ds);
        const auto idx = parse_dataset_name(ds.name);
        const auto role = (idx && idx->index == 1) || ds.name.ends_with("-1") ? DatasetRole::estimation
                                                                              : DatasetRole::validation;
        manifest.push_back({ds.name, file, role, ds.channel_names, ds.output_name});
    }
    write_manifest(out / "manifest.json", manifest);

    // Kept out of the manifest so the pipeline never reads the truth.
    auto truth = scenario_to_json(scn);
    truth["noiseless"] = scn.noise_sigma == 0.0;
    write_text_file(out / "ground_truth.json", truth.dump(2) + "\n");
    std::cout << "wrote " << datasets.size() << " datasets, manifest.json and ground_truth.json to " << out.string()
              << "\n";
    return kOk;
}

int cmd_bounds(const CommonArgs& args)
{
    const fs::path manifest_path(args.manifest);
    const auto manifest = load_manifest(manifest_path);
    const auto sets = load_role(manifest_path, manifest, DatasetRole::estimation);
    const auto s = structure_for(sets, args.taps);
    const auto problems = problems_for(sets, s);
    const auto text = to_json(compute_bounds(problems)).dump(2) + "\n";
    if (args.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(args.out, text);
    }
    return kOk;
}

int cmd_fit(const CommonArgs& args)
{
    const fs::path manifest_path(args.manifest);
    const auto manifest = load_manifest(manifest_path);
    const auto sets = load_role(manifest_path, manifest, DatasetRole::estimation);
    const auto s = structure_for(sets, args.taps);
    std::vector<NamedModel> models;
    for (const auto& ds : sets) {
        const auto fit = ls_fit(build_regressor(ds, s));
        std::cout << ds.name << ": residual_norm_sq=" << format_double(fit.residual_norm_sq)
                  << (fit.gram_positive_definite ? "" : " (Gram matrix not positive definite)") << "\n";
        models.push_back({"ls", ds.name, fit.theta});
    }
    const fs::path out = args.out.empty() ? fs::path(".") : fs::path(args.out);
    ensure_dir(out);
    write_text_file(out / "thetas.csv", thetas_csv(models));
    return kOk;
}

int cmd_eval(const CommonArgs& args, const std::string& thetas_path)
{
    const fs::path manifest_path(args.manifest);
    const auto manifest = load_manifest(manifest_path);
    auto sets = load_role(manifest_path, manifest, DatasetRole::evaluation);
    if (sets.empty())
        sets = load_role(manifest_path, manifest, DatasetRole::validation);
    if (sets.empty())
        throw DataError("manifest has no evaluation or validation datasets");
    const ModelStructure s{args.taps, sets.front().channels()};
    const auto models = parse_thetas_csv(thetas_path, s);
    std::vector<NamedProblem> eval;
    for (const auto& ds : sets)
        eval.push_back({ds.name, build_regressor(ds, s)});
    const auto csv = fit_matrix_csv(cross_evaluate(models, eval));
    if (args.out.empty()) {
        std::cout << csv;
    } else {
        ensure_dir(args.out);
        write_text_file(fs::path(args.out) / "fit_matrix.csv", csv);
    }
    return kOk;
}

int cmd_run(const CommonArgs& args, PipelineOptions options)
{
    const auto inputs = load_pipeline_inputs(args.manifest);
    const auto s = structure_for(inputs.estimation, args.taps);
    options.threads = args.threads;
    options.on_stage = [](std::string_view stage, std::string_view summary) {
        std::cout << "[" << stage << "] " << summary << "\n";
    };
    const auto report = run_pipeline(inputs, s, options);
    const fs::path out = args.out.empty() ? fs::path("fusedfir_out") : fs::path(args.out);
    write_pipeline_outputs(report, out);
    std::cout << "[outputs] " << out.string() << "/report.json, thetas.csv, fit_matrix.csv\n";
    if (!report.solve.converged) {
        std::cerr << "error: stage 'joint_solve': solver did not converge within " << options.solver.max_iter
                  << " iterations\n";
        return kNoConvergence;
    }
    return kOk;
}

template <class Fn>
int guarded(Fn&& fn)
{
    try {
        return fn();
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPrecondition;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNoConvergence;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_manifest = true)
{
    auto* m = cmd->add_option("--manifest", args.manifest, "Manifest JSON listing the datasets");
    if (needs_manifest)
        m->required();
    cmd->add_option("--taps", args.taps, "FIR taps per channel (lags 0..taps-1)")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", args.threads, "Worker threads for parallel regions (0 = all cores)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Joint FIR soft-sensor estimation with fusion and sparsity penalties"};
    app.require_subcommand(1);

    std::string config_path, synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-condition scenario");
    synth->add_option("--config", config_path, "Scenario JSON")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    CommonArgs bounds_args;
    auto* bounds = app.add_subcommand("bounds", "Print lambda1_max, lambda1_sufficient and lambda2_max");
    add_common(bounds, bounds_args);
    bounds->add_option("--out", bounds_args.out, "Write the JSON report here instead of stdout");

    CommonArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Per-condition least-squares fits");
    add_common(fit, fit_args);
    fit->add_option("--out", fit_args.out, "Output directory for thetas.csv");

    CommonArgs eval_args;
    std::string thetas_path;
    auto* eval = app.add_subcommand("eval", "FIT matrix of stored models on evaluation data");
    add_common(eval, eval_args);
    eval->add_option("--thetas", thetas_path, "thetas.csv written by fit or run")->required();
    eval->add_option("--out", eval_args.out, "Output directory for fit_matrix.csv (default: stdout)");

    CommonArgs run_args;
    PipelineOptions options;
    std::string fusion_variant = "l2";
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Bounds, grid search, joint solve, k-means, refit and evaluation");
    add_common(run, run_args);
    run->add_option("--out", run_args.out, "Output directory")->capture_default_str();
    run->add_option("--k", options.k_clusters, "Number of model categories")->check(CLI::PositiveNumber);
    run->add_flag("--auto-k", options.auto_k, "Choose k by the largest mean silhouette");
    run->add_option("--seed", seed, "Seed for every randomized stage");
    run->add_flag("--literal-criterion", options.literal_criterion,
                  "Score grid points by the full penalized criterion on validation data");
    run->add_option("--fusion-variant", fusion_variant, "Fusion penalty: l2 or l2-squared")
        ->check(CLI::IsMember({"l2", "l2-squared"}));
    run->add_flag("--trace", options.trace, "Write trace.csv for the final joint solve");
    run->add_option("--lambda1-factors", options.grid.lambda1_factors, "Multiples of lambda1_max")->delimiter(',');
    run->add_option("--lambda2-values", options.grid.lambda2_values, "Absolute lambda2 values")->delimiter(',');
    run->add_option("--rho", options.solver.rho, "Initial ADMM penalty");
    run->add_option("--max-iter", options.solver.max_iter, "ADMM iteration limit");
    run->add_option("--eps-abs", options.solver.eps_abs, "ADMM absolute tolerance");
    run->add_option("--eps-rel", options.solver.eps_rel, "ADMM relative tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kData;
    }

    if (*synth)
        return guarded([&] { return cmd_synth(config_path, synth_out); });
    if (*bounds)
        return guarded([&] { return cmd_bounds(bounds_args); });
    if (*fit)
        return guarded([&] { return cmd_fit(fit_args); });
    if (*eval)
        return guarded([&] { return cmd_eval(eval_args, thetas_path); });
    if (*run)
        return guarded([&] {
            options.seed = seed;
            options.fusion = parse_fusion_variant(fusion_variant);
            return cmd_run(run_args, options);
        });
    return kOther;
}
