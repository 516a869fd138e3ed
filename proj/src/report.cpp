#include "fusedfir/error.hpp"
#include "fusedfir/format.hpp"
#include "fusedfir/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

namespace fusedfir {
namespace {

using nlohmann::json;

json vec(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

json objective_json(const ObjectiveBreakdown& o)
{
    return {{"fit_term", o.fit_term},
            {"fusion_term", o.fusion_term},
            {"sparsity_term", o.sparsity_term},
            {"lambda1", o.lambda1},
            {"lambda2", o.lambda2},
            {"total", o.total}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

json to_json(const PipelineReport& r)
{
    json doc;
    doc["schema"] = 1;
    doc["seed"] = r.seed;
    doc["structure"] = {{"taps", r.structure.taps}, {"channels", r.structure.channels}, {"n_theta", r.structure.n_theta()}};
    doc["conditions"] = r.conditions;
    doc["datasets"] = {{"estimation", r.estimation_datasets},
                       {"validation", r.validation_datasets},
                       {"evaluation", r.evaluation_datasets}};
    doc["notes"] = r.notes;
    doc["bounds"] = r.bounds ? to_json(*r.bounds) : json(nullptr);
    doc["lambda2_max"] = r.lambda2_max;

    json table = json::array();
    for (const auto& pt : r.grid.table)
        table.push_back({{"lambda1_factor", pt.lambda1_factor},
                         {"lambda1", pt.lambda1},
                         {"lambda2", pt.lambda2},
                         {"score", finite_or_null(pt.score)},
                         {"converged", pt.converged},
                         {"iterations", pt.iterations}});
    doc["grid_search"] = {{"score", r.literal_criterion ? "literal_criterion" : "validation_fit"},
                          {"lambda1_max", r.grid.lambda1_max ? json(*r.grid.lambda1_max) : json(nullptr)},
                          {"table", table},
                          {"selected", r.grid.selected}};
    doc["hyperparameters"] = {{"lambda1", r.hp.lambda1},
                              {"lambda2", r.hp.lambda2},
                              {"fusion_variant", std::string(to_string(r.hp.fusion))}};

    json thetas = json::object();
    for (std::size_t k = 0; k < r.solve.thetas.size(); ++k)
        thetas[r.conditions[k]] = vec(r.solve.thetas[k].values());
    doc["solve"] = {{"converged", r.solve.converged},
                    {"iterations", r.solve.iterations},
                    {"primal_residual", r.solve.primal_residual},
                    {"dual_residual", r.solve.dual_residual},
                    {"rho", r.solve.rho},
                    {"objective", objective_json(r.solve.objective)},
                    {"merged_groups", r.merged_groups},
                    {"thetas", thetas}};

    json labels = json::object();
    for (std::size_t i = 0; i < r.clusters.names.size(); ++i)
        labels[r.clusters.names[i]] = r.clusters.labels[i];
    json centroids = json::array();
    for (const auto& c : r.clusters.centroids)
        centroids.push_back(vec(c.values()));
    doc["clusters"] = {{"k", r.clusters.k}, {"inertia", r.clusters.inertia}, {"labels", labels}, {"centroids", centroids}};

    json ls = json::object();
    for (std::size_t k = 0; k < r.per_condition_ls.size(); ++k)
        ls[r.estimation_datasets[k]] = {{"theta", vec(r.per_condition_ls[k].theta.values())},
                                        {"residual_norm_sq", r.per_condition_ls[k].residual_norm_sq},
                                        {"gram_positive_definite", r.per_condition_ls[k].gram_positive_definite}};
    doc["least_squares"] = ls;

    json cats = json::array();
    for (const auto& c : r.categories)
        cats.push_back({{"name", c.name},
                        {"members", c.members},
                        {"theta", vec(c.fit.theta.values())},
                        {"residual_norm_sq", c.fit.residual_norm_sq}});
    doc["categories"] = cats;

    json fits = json::array();
    for (const auto& f : r.fits)
        fits.push_back({{"method", f.method},
                        {"model_source", f.model_source},
                        {"eval_dataset", f.eval_dataset},
                        {"fit_percent", f.fit_percent ? json(*f.fit_percent) : json(nullptr)}});
    doc["fits"] = fits;
    return doc;
}

std::string thetas_csv(std::span<const NamedModel> models)
{
    if (models.empty())
        return "method,source\n";
    const auto& s = models.front().theta.structure();
    std::string out = "method,source";
    for (int j = 0; j < s.channels; ++j)
        for (int l = 0; l < s.taps; ++l)
            out += ",c" + std::to_string(j + 1) + "_lag" + std::to_string(l);
    out += "\n";
    for (const auto& m : models) {
        out += m.method + "," + m.source;
        for (double v : m.theta.values())
            out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

std::vector<NamedModel> parse_thetas_csv(const std::filesystem::path& path, const ModelStructure& structure)
{
    structure.validate();
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open theta file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("theta file '" + path.string() + "' is empty");
    std::vector<NamedModel> models;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t comma; (comma = line.find(',', start)) != std::string::npos; start = comma + 1)
            cells.push_back(line.substr(start, comma - start));
        cells.push_back(line.substr(start));
        if (cells.size() != static_cast<std::size_t>(2 + structure.n_theta()))
            throw DataError(path.filename().string() + ": row " + std::to_string(line_no) + " has "
                            + std::to_string(cells.size()) + " cells, expected "
                            + std::to_string(2 + structure.n_theta()));
        Vector values(structure.n_theta());
        for (Index i = 0; i < values.size(); ++i) {
            const auto& cell = cells[static_cast<std::size_t>(i) + 2];
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), values(i));
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(values(i)))
                throw DataError(path.filename().string() + ": bad number '" + cell + "' at row "
                                + std::to_string(line_no));
        }
        models.push_back({cells[0], cells[1], ParameterVector(structure, std::move(values))});
    }
    return models;
}

std::string fit_matrix_csv(std::span<const FitReport> fits)
{
    std::vector<std::string> eval_names;
    std::vector<std::pair<std::string, std::string>> rows;
    std::map<std::pair<std::string, std::string>, std::map<std::string, const FitReport*>> cells;
    for (const auto& f : fits) {
        if (std::find(eval_names.begin(), eval_names.end(), f.eval_dataset) == eval_names.end())
            eval_names.push_back(f.eval_dataset);
        const std::pair key{f.method, f.model_source};
        if (std::find(rows.begin(), rows.end(), key) == rows.end())
            rows.push_back(key);
        cells[key][f.eval_dataset] = &f;
    }
    std::string out = "method,model";
    for (const auto& e : eval_names)
        out += "," + e;
    out += "\n";
    for (const auto& key : rows) {
        out += key.first + "," + key.second;
        for (const auto& e : eval_names) {
            out += ",";
            const auto& row = cells[key];
            const auto it = row.find(e);
            if (it != row.end() && it->second->fit_percent)
                out += format_double(*it->second->fit_percent);
        }
        out += "\n";
    }
    return out;
}

void write_pipeline_outputs(const PipelineReport& report, const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw DataError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    write_text_file(out_dir / "report.json", to_json(report).dump(2) + "\n");

    std::vector<NamedModel> models;
    for (std::size_t k = 0; k < report.per_condition_ls.size(); ++k)
        models.push_back({"ls", report.estimation_datasets[k], report.per_condition_ls[k].theta});
    for (std::size_t k = 0; k < report.solve.thetas.size(); ++k)
        models.push_back({"joint", report.estimation_datasets[k], report.solve.thetas[k]});
    for (const auto& c : report.categories)
        models.push_back({"category", c.name, c.fit.theta});
    write_text_file(out_dir / "thetas.csv", thetas_csv(models));
    write_text_file(out_dir / "fit_matrix.csv", fit_matrix_csv(report.fits));
    if (!report.solve.trace.empty())
        write_trace_csv(out_dir / "trace.csv", report.solve.trace);
}

} // namespace fusedfir
