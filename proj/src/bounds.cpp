#include "fusedfir/bounds.hpp"

#include "fusedfir/error.hpp"
#include "fusedfir/least_squares.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace fusedfir {
namespace {

void require_fusion(std::span<const RegressionProblem> problems)
{
    common_structure(problems);
    if (problems.size() < 2)
        throw PreconditionError("fusion bound undefined for a single condition");
}

struct PooledGradients {
    ParameterVector theta_star;
    std::vector<Vector> g;
    double max_norm = 0.0;
};

PooledGradients pooled_gradients(std::span<const RegressionProblem> problems)
{
    PooledGradients out;
    out.theta_star = pooled_ls_fit(problems).theta;
    for (const auto& p : problems) {
        out.g.push_back(2.0 * p.phi.transpose() * (p.y - p.phi * out.theta_star.values()));
        out.max_norm = std::max(out.max_norm, out.g.back().norm());
    }
    return out;
}

} // namespace

BoundsReport compute_bounds(std::span<const RegressionProblem> problems)
{
    require_fusion(problems);
    auto pg = pooled_gradients(problems);
    const double K = static_cast<double>(problems.size());
    BoundsReport r;
    r.lambda1_max = pg.max_norm / (K - 1.0);
    r.lambda1_sufficient = 2.0 * pg.max_norm / K;
    r.lambda2_max = lambda2_max(problems);
    r.per_condition_gradients = std::move(pg.g);
    r.theta_star = std::move(pg.theta_star);
    for (const auto& p : problems)
        r.condition_names.push_back(p.condition_name);
    return r;
}

double lambda1_max(std::span<const RegressionProblem> problems)
{
    require_fusion(problems);
    return pooled_gradients(problems).max_norm / (static_cast<double>(problems.size()) - 1.0);
}

double lambda1_sufficient(std::span<const RegressionProblem> problems)
{
    require_fusion(problems);
    return 2.0 * pooled_gradients(problems).max_norm / static_cast<double>(problems.size());
}

double lambda2_max(std::span<const RegressionProblem> problems)
{
    common_structure(problems);
    double out = 0.0;
    for (const auto& p : problems)
        out = std::max(out, 2.0 * (p.phi.transpose() * p.y).lpNorm<Eigen::Infinity>());
    return out;
}

std::vector<double> kkt_necessary_margin(std::span<const RegressionProblem> problems, double lambda1)
{
    require_fusion(problems);
    const auto pg = pooled_gradients(problems);
    const double K = static_cast<double>(problems.size());
    std::vector<double> margins;
    for (const auto& g : pg.g)
        margins.push_back(lambda1 - g.norm() / (K - 1.0));
    return margins;
}

CoalescenceCertificate coalescence_certificate(std::span<const RegressionProblem> problems, double lambda1)
{
    require_fusion(problems);
    if (!(lambda1 > 0.0) || !std::isfinite(lambda1))
        throw PreconditionError("coalescence certificate needs a positive finite lambda1");
    const auto pg = pooled_gradients(problems);
    const auto K = pg.g.size();
    const double scale = lambda1 * static_cast<double>(K);

    CoalescenceCertificate cert;
    for (std::size_t k = 0; k < K; ++k) {
        Vector sum = Vector::Zero(pg.g[k].size());
        for (std::size_t i = 0; i < K; ++i) {
            if (i == k)
                continue;
            const Vector z_ki = (pg.g[k] - pg.g[i]) / scale;
            sum += z_ki;
            cert.z_norm_max = std::max(cert.z_norm_max, z_ki.norm());
        }
        cert.identity_residual = std::max(cert.identity_residual, (sum - pg.g[k] / lambda1).norm());
    }
    cert.certified = cert.z_norm_max <= 1.0;
    return cert;
}

nlohmann::json to_json(const BoundsReport& report)
{
    nlohmann::json grads = nlohmann::json::array();
    for (const auto& g : report.per_condition_gradients)
        grads.push_back(std::vector<double>(g.begin(), g.end()));
    const auto& ts = report.theta_star.values();
    return {{"lambda1_max", report.lambda1_max},
            {"lambda2_max", report.lambda2_max},
            {"lambda1_sufficient", report.lambda1_sufficient},
            {"conditions", report.condition_names},
            {"per_condition_gradients", grads},
            {"theta_star", std::vector<double>(ts.begin(), ts.end())}};
}

} // namespace fusedfir
