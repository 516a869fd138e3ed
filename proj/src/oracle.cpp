#include "fusedfir/solver.hpp"

#include "fusedfir/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <random>

// Dual of   0.5 theta^T H theta - b^T theta + c0 + max_{y in C} y^T D theta
// where H carries the data fit (and the squared fusion, if selected), the rows of D
// are lambda1 (theta_a - theta_b) per pair and lambda2 theta_k per condition, and C is
// a product of unit l2 balls (pairs) and unit boxes (l1). For fixed y the inner
// minimizer is theta(y) = H^{-1}(b - D^T y), so the dual is a smooth concave
// maximization over C solved by projected gradient with momentum.

namespace fusedfir {
namespace {

constexpr std::size_t kMaxConditions = 6;
constexpr Index kMaxParameters = 20;
constexpr Index kMaxRows = 100;
constexpr int kCheckEvery = 50;

void check_size(std::span<const RegressionProblem> problems)
{
    if (problems.size() > kMaxConditions)
        throw PreconditionError("oracle: at most 6 conditions (got " + std::to_string(problems.size()) + ")");
    const auto& s = common_structure(problems);
    if (s.n_theta() > kMaxParameters)
        throw PreconditionError("oracle: at most 20 parameters per condition (got " + std::to_string(s.n_theta()) + ")");
    for (const auto& p : problems)
        if (p.rows() > kMaxRows)
            throw PreconditionError("oracle: at most 100 rows per condition ('" + p.condition_name + "' has "
                                    + std::to_string(p.rows()) + ")");
}

} // namespace

OracleResult solve_oracle(std::span<const RegressionProblem> problems, const Hyperparameters& hp,
                          const OracleConfig& cfg)
{
    hp.validate();
    check_size(problems);
    if (cfg.iterations < 1)
        throw DataError("oracle: iterations must be >= 1");

    const auto& structure = problems.front().structure;
    const Index K = static_cast<Index>(problems.size());
    const Index p = structure.n_theta();
    const Index n = K * p;
    const bool squared = hp.fusion == FusionVariant::l2_squared;

    Matrix H = Matrix::Zero(n, n);
    Vector b(n);
    double c0 = 0.0;
    for (Index k = 0; k < K; ++k) {
        const auto& pr = problems[static_cast<std::size_t>(k)];
        H.block(k * p, k * p, p, p) = 2.0 * pr.phi.transpose() * pr.phi;
        b.segment(k * p, p) = 2.0 * pr.phi.transpose() * pr.y;
        c0 += pr.y.squaredNorm();
    }
    if (squared && hp.lambda1 > 0.0) {
        // lambda1 * sum_{a<b} ||theta_a - theta_b||^2 = 0.5 theta^T (2 lambda1 (K I - 1 1^T) (x) I) theta
        for (Index a = 0; a < K; ++a)
            for (Index c = 0; c < K; ++c) {
                const double w = 2.0 * hp.lambda1 * ((a == c ? static_cast<double>(K) : 0.0) - 1.0);
                H.block(a * p, c * p, p, p).diagonal().array() += w;
            }
    }
    Eigen::LLT<Matrix> h_llt(H);
    if (h_llt.info() != Eigen::Success)
        throw PreconditionError("oracle: Hessian of the smooth part is not positive definite");

    // Dual layout: [pair balls | l1 boxes].
    const bool use_pairs = !squared && hp.lambda1 > 0.0;
    const bool use_l1 = hp.lambda2 > 0.0;
    const Index n_pairs = use_pairs ? K * (K - 1) / 2 : 0;
    const Index m = n_pairs * p + (use_l1 ? n : 0);
    Matrix D = Matrix::Zero(m, n);
    {
        Index e = 0;
        for (Index a = 0; a < K && use_pairs; ++a)
            for (Index c = a + 1; c < K; ++c, ++e) {
                D.block(e * p, a * p, p, p).diagonal().setConstant(hp.lambda1);
                D.block(e * p, c * p, p, p).diagonal().setConstant(-hp.lambda1);
            }
        if (use_l1)
            D.block(n_pairs * p, 0, n, n).diagonal().setConstant(hp.lambda2);
    }

    const Vector h_inv_b = h_llt.solve(b);
    auto theta_of = [&](const Vector& y) -> Vector {
        return m == 0 ? h_inv_b : Vector(h_llt.solve(b - D.transpose() * y));
    };
    auto dual_value = [&](const Vector& y, const Vector& theta) {
        const Vector shifted = m == 0 ? b : Vector(b - D.transpose() * y);
        return c0 - 0.5 * shifted.dot(theta);
    };
    auto to_thetas = [&](const Vector& flat) {
        std::vector<ParameterVector> out;
        for (Index k = 0; k < K; ++k)
            out.emplace_back(structure, flat.segment(k * p, p));
        return out;
    };
    auto project = [&](Vector& y) {
        for (Index e = 0; e < n_pairs; ++e) {
            auto seg = y.segment(e * p, p);
            const double norm = seg.norm();
            if (norm > 1.0)
                seg /= norm;
        }
        if (use_l1)
            y.tail(n) = y.tail(n).cwiseMax(-1.0).cwiseMin(1.0);
    };

    OracleResult out;
    auto& res = out.solve;

    if (m == 0) {
        res.thetas = to_thetas(h_inv_b);
        res.objective = objective(problems, res.thetas, hp);
        res.iterations = 0;
        res.converged = true;
        out.duality_gap = std::max(0.0, res.objective.total - dual_value(Vector(), h_inv_b));
        return out;
    }

    const Matrix h_inv_dt = h_llt.solve(D.transpose());
    const Matrix curvature = D * h_inv_dt; // gradient of the dual: D theta(y) = D H^{-1} b - curvature y
    const Vector grad0 = D * h_inv_b;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(curvature, Eigen::EigenvaluesOnly);
    const double lipschitz = std::max(eig.eigenvalues().maxCoeff(), std::numeric_limits<double>::min());
    const double step = 1.0 / lipschitz;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    Vector y(m);
    for (Index i = 0; i < m; ++i)
        y(i) = unif(rng);
    project(y);

    Vector y_prev = y;
    Vector ext = y;
    double momentum = 1.0;
    double best_primal = std::numeric_limits<double>::infinity();
    double best_dual = -std::numeric_limits<double>::infinity();
    Vector best_theta = theta_of(y);

    int iter = 0;
    for (iter = 1; iter <= cfg.iterations; ++iter) {
        Vector y_next = ext + step * (grad0 - curvature * ext);
        project(y_next);

        const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        if ((ext - y_next).dot(y_next - y_prev) > 0.0) {
            // Momentum restart.
            momentum = 1.0;
            ext = y_next;
        } else {
            ext = y_next + ((momentum - 1.0) / momentum_next) * (y_next - y_prev);
            momentum = momentum_next;
        }
        y_prev = std::move(y_next);

        if (iter % kCheckEvery == 0 || iter == cfg.iterations) {
            const Vector theta = theta_of(y_prev);
            if (!theta.allFinite())
                throw NumericalError("oracle: non-finite iterate at iteration " + std::to_string(iter));
            const double primal = objective(problems, to_thetas(theta), hp).total;
            if (primal < best_primal) {
                best_primal = primal;
                best_theta = theta;
            }
            best_dual = std::max(best_dual, dual_value(y_prev, theta));
            if (best_primal - best_dual <= cfg.gap_tolerance * (1.0 + std::abs(best_primal))) {
                res.converged = true;
                break;
            }
        }
    }

    res.iterations = std::min(iter, cfg.iterations);
    res.thetas = to_thetas(best_theta);
    res.objective = objective(problems, res.thetas, hp);
    out.duality_gap = std::max(0.0, res.objective.total - best_dual);
    res.primal_residual = out.duality_gap;
    return out;
}

} // namespace fusedfir
