#include "fusedfir/pipeline.hpp"

#include "fusedfir/error.hpp"
#include "fusedfir/format.hpp"
#include "fusedfir/metrics.hpp"
#include "fusedfir/parallel.hpp"

#include <map>
#include <set>
#include <sstream>

namespace fusedfir {

std::vector<LsFit> refit_clusters(std::span<const RegressionProblem> problems, const ClusterAssignment& assignment)
{
    common_structure(problems);
    if (assignment.labels.size() != problems.size())
        throw DataError("refit: assignment covers " + std::to_string(assignment.labels.size()) + " conditions, got "
                        + std::to_string(problems.size()) + " problems");
    std::vector<LsFit> fits;
    for (const auto& members : assignment.members()) {
        if (members.empty())
            throw DataError("refit: empty category");
        std::vector<RegressionProblem> group;
        for (int m : members)
            group.push_back(problems[static_cast<std::size_t>(m)]);
        fits.push_back(pooled_ls_fit(group));
    }
    return fits;
}

std::vector<FitReport> cross_evaluate(std::span<const NamedModel> models, std::span<const NamedProblem> eval)
{
    for (const auto& m : models)
        for (const auto& e : eval)
            if (!(m.theta.structure() == e.problem.structure))
                throw DataError("cross-evaluation: model '" + m.source + "' and dataset '" + e.name
                                + "' have different structures");
    std::vector<FitReport> out;
    out.reserve(models.size() * eval.size());
    for (const auto& m : models) {
        for (const auto& e : eval) {
            FitReport r{m.method, m.source, e.name, std::nullopt};
            try {
                r.fit_percent = fit_metric(e.problem.y, predict(e.problem, m.theta));
            } catch (const DataError&) {
                // undefined cell
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

PipelineInputs load_pipeline_inputs(const std::filesystem::path& manifest_path)
{
    const auto manifest = load_manifest(manifest_path);
    PipelineInputs in;
    in.estimation = load_role(manifest_path, manifest, DatasetRole::estimation);
    in.validation = load_role(manifest_path, manifest, DatasetRole::validation);
    in.evaluation = load_role(manifest_path, manifest, DatasetRole::evaluation);
    return in;
}

namespace {

template <class Fn>
auto run_stage(std::string_view name, Fn&& fn) -> decltype(fn())
{
    const std::string prefix = "stage '" + std::string(name) + "': ";
    try {
        return fn();
    } catch (const DataError& e) {
        throw DataError(prefix + e.what());
    } catch (const PreconditionError& e) {
        throw PreconditionError(prefix + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += sep;
        out += parts[i];
    }
    return out;
}

std::string fmt(double v)
{
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

} // namespace

PipelineReport run_pipeline(const PipelineInputs& inputs, const ModelStructure& structure,
                            const PipelineOptions& options)
{
    PipelineReport report;
    report.structure = structure;
    report.seed = options.seed;
    report.literal_criterion = options.literal_criterion;
    auto emit = [&](std::string_view stage, const std::string& summary) {
        if (options.on_stage)
            options.on_stage(stage, summary);
    };

    std::vector<RegressionProblem> est, val;
    std::vector<NamedProblem> eval;
    run_stage("regressors", [&] {
        structure.validate();
        options.grid.validate();
        options.solver.validate();
        if (inputs.estimation.empty())
            throw DataError("no estimation datasets");
        std::map<std::string, const ConditionDataset*> validation_by_condition;
        for (const auto& ds : inputs.validation)
            if (!validation_by_condition.emplace(ds.condition(), &ds).second)
                throw DataError("two validation datasets for condition '" + ds.condition() + "'");
        std::set<std::string> seen;
        for (const auto& ds : inputs.estimation) {
            const auto cond = ds.condition();
            if (!seen.insert(cond).second)
                throw DataError("two estimation datasets for condition '" + cond + "'");
            const auto it = validation_by_condition.find(cond);
            if (it == validation_by_condition.end())
                throw DataError("no validation dataset for condition '" + cond + "'");
            est.push_back(build_regressor(ds, structure));
            val.push_back(build_regressor(*it->second, structure));
            report.conditions.push_back(cond);
            report.estimation_datasets.push_back(ds.name);
            report.validation_datasets.push_back(it->second->name);
            if (ds.name_warning)
                report.notes.push_back("dataset name '" + ds.name + "' does not follow <COND><speed>-<idx>");
        }
        const auto& eval_sets = inputs.evaluation.empty() ? inputs.validation : inputs.evaluation;
        if (inputs.evaluation.empty())
            report.notes.push_back("no evaluation datasets; FIT matrix uses validation data");
        for (const auto& ds : eval_sets) {
            eval.push_back({ds.name, build_regressor(ds, structure)});
            report.evaluation_datasets.push_back(ds.name);
        }
    });
    emit("regressors", std::to_string(est.size()) + " conditions, " + std::to_string(structure.n_theta())
                           + " parameters each, " + std::to_string(eval.size()) + " evaluation datasets");

    const bool fusion = est.size() >= 2;
    run_stage("bounds", [&] {
        report.lambda2_max = lambda2_max(est);
        if (fusion)
            report.bounds = compute_bounds(est);
        else
            report.notes.push_back("fusion undefined for a single condition; fusion stages skipped");
    });
    emit("bounds", fusion ? "lambda1_max=" + fmt(report.bounds->lambda1_max) + " lambda1_sufficient="
                                + fmt(report.bounds->lambda1_sufficient) + " lambda2_max=" + fmt(report.lambda2_max)
                          : "fusion undefined; lambda2_max=" + fmt(report.lambda2_max));

    run_stage("grid_search", [&] {
        GridSearchOptions gopts;
        gopts.fusion = options.fusion;
        gopts.literal_criterion = options.literal_criterion;
        gopts.threads = options.threads;
        if (report.bounds)
            gopts.lambda1_max = report.bounds->lambda1_max;
        SolverConfig cfg = options.solver;
        cfg.record_trace = false;
        report.grid = grid_search(est, val, options.grid, cfg, gopts);
        report.hp = report.grid.hp;
        for (const auto& pt : report.grid.table)
            if (!pt.converged)
                report.notes.push_back("grid point lambda1=" + format_double(pt.lambda1) + " lambda2="
                                       + format_double(pt.lambda2) + " did not converge");
    });
    emit("grid_search", std::to_string(report.grid.table.size()) + " points, selected lambda1="
                            + fmt(report.hp.lambda1) + " lambda2=" + fmt(report.hp.lambda2) + " score="
                            + fmt(report.grid.table[report.grid.selected].score));

    run_stage("joint_solve", [&] {
        SolverConfig cfg = options.solver;
        cfg.record_trace = options.trace;
        report.solve = solve(est, report.hp, cfg);
        report.merged_groups = merged_groups(report.solve.thetas);
        if (!report.solve.converged)
            report.notes.push_back("joint solve stopped at max_iter without converging");
    });
    emit("joint_solve", std::string(report.solve.converged ? "converged" : "NOT converged") + " in "
                            + std::to_string(report.solve.iterations) + " iterations, objective="
                            + fmt(report.solve.objective.total) + ", " + std::to_string(report.merged_groups.size())
                            + " distinct models");

    run_stage("kmeans", [&] {
        const int K = static_cast<int>(est.size());
        const auto seed = split_seed(options.seed, 1);
        int k = options.k_clusters;
        if (options.auto_k && K >= 3) {
            std::vector<Vector> points;
            for (const auto& t : report.solve.thetas)
                points.push_back(t.values());
            double best = -2.0;
            for (int cand = 2; cand <= K - 1; ++cand) {
                const auto trial = kmeans(report.solve.thetas, cand, seed, options.kmeans_restarts);
                const double sil = mean_silhouette(points, trial.labels);
                if (sil > best) {
                    best = sil;
                    k = cand;
                }
            }
            report.notes.push_back("k chosen by silhouette: " + std::to_string(k));
        } else if (options.auto_k) {
            k = std::min(k, K);
            report.notes.push_back("auto-k needs at least 3 conditions; using k=" + std::to_string(k));
        }
        if (!fusion)
            k = 1;
        if (k > K)
            throw PreconditionError("k = " + std::to_string(k) + " exceeds the number of conditions ("
                                    + std::to_string(K) + ")");
        report.clusters = kmeans(report.solve.thetas, k, seed, options.kmeans_restarts, report.conditions);
    });
    {
        std::string summary = "k=" + std::to_string(report.clusters.k) + ":";
        for (const auto& members : report.clusters.members()) {
            std::vector<std::string> names;
            for (int m : members)
                names.push_back(report.conditions[static_cast<std::size_t>(m)]);
            summary += " {" + join(names, ",") + "}";
        }
        emit("kmeans", summary);
    }

    run_stage("refit", [&] {
        for (const auto& p : est)
            report.per_condition_ls.push_back(ls_fit(p));
        const auto fits = refit_clusters(est, report.clusters);
        const auto members = report.clusters.members();
        for (std::size_t c = 0; c < fits.size(); ++c) {
            CategoryModel cm;
            for (int m : members[c])
                cm.members.push_back(report.estimation_datasets[static_cast<std::size_t>(m)]);
            cm.name = join(cm.members, "+");
            cm.fit = fits[c];
            report.categories.push_back(std::move(cm));
        }
    });
    emit("refit", std::to_string(report.categories.size()) + " category models");

    run_stage("cross_evaluate", [&] {
        std::vector<NamedModel> models;
        for (std::size_t k = 0; k < est.size(); ++k)
            models.push_back({"ls", report.estimation_datasets[k], report.per_condition_ls[k].theta});
        for (std::size_t k = 0; k < est.size(); ++k)
            models.push_back({"joint", report.estimation_datasets[k], report.solve.thetas[k]});
        for (const auto& c : report.categories)
            models.push_back({"category", c.name, c.fit.theta});
        report.fits = cross_evaluate(models, eval);
    });
    emit("cross_evaluate", std::to_string(report.fits.size()) + " FIT cells");
    return report;
}

} // namespace fusedfir
