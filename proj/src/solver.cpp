#include "fusedfir/solver.hpp"

#include "fusedfir/error.hpp"
#include "fusedfir/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fusedfir {

void SolverConfig::validate() const
{
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw DataError("solver: rho must be positive and finite");
    if (!(eps_abs > 0.0) || !(eps_rel > 0.0))
        throw DataError("solver: tolerances must be positive");
    if (max_iter < 1)
        throw DataError("solver: max_iter must be >= 1");
    if (!(rho_balance > 1.0))
        throw DataError("solver: rho_balance must exceed 1");
    if (max_rho_updates < 0)
        throw DataError("solver: max_rho_updates must be >= 0");
}

namespace {

struct Pair {
    Index a; // a < b
    Index b;
};

class AdmmSolver {
public:
    AdmmSolver(std::span<const RegressionProblem> problems, const Hyperparameters& hp, const SolverConfig& cfg)
        : problems_(problems), hp_(hp), cfg_(cfg)
    {
        const auto& s = common_structure(problems);
        structure_ = s;
        K_ = static_cast<Index>(problems.size());
        p_ = s.n_theta();
        squared_ = hp.fusion == FusionVariant::l2_squared;
        // Pair copies only exist for the non-smooth fusion term.
        if (!squared_)
            for (Index a = 0; a < K_; ++a)
                for (Index b = a + 1; b < K_; ++b)
                    pairs_.push_back({a, b});
        const auto P = static_cast<Index>(pairs_.size());

        gram2_.resize(static_cast<std::size_t>(K_));
        rhs_data_ = Matrix(p_, K_);
        for (Index k = 0; k < K_; ++k) {
            const auto& pr = problems[static_cast<std::size_t>(k)];
            gram2_[static_cast<std::size_t>(k)] = 2.0 * pr.phi.transpose() * pr.phi;
            rhs_data_.col(k) = 2.0 * pr.phi.transpose() * pr.y;
        }

        theta_ = Matrix::Zero(p_, K_);
        za_ = Matrix::Zero(p_, P);
        zb_ = Matrix::Zero(p_, P);
        ua_ = Matrix::Zero(p_, P);
        ub_ = Matrix::Zero(p_, P);
        w_ = Matrix::Zero(p_, K_);
        v_ = Matrix::Zero(p_, K_);
        rho_ = cfg.rho;
    }

    void warm_start(std::span<const ParameterVector> initial)
    {
        if (initial.empty())
            return;
        if (static_cast<Index>(initial.size()) != K_)
            throw DataError("solver: initial point has " + std::to_string(initial.size()) + " vectors, expected "
                            + std::to_string(K_));
        for (Index k = 0; k < K_; ++k) {
            const auto& t = initial[static_cast<std::size_t>(k)];
            if (t.size() != p_ || !t.values().allFinite())
                throw DataError("solver: initial point has wrong length or non-finite entries");
            theta_.col(k) = t.values();
        }
        for (std::size_t e = 0; e < pairs_.size(); ++e) {
            za_.col(static_cast<Index>(e)) = theta_.col(pairs_[e].a);
            zb_.col(static_cast<Index>(e)) = theta_.col(pairs_[e].b);
        }
        w_ = theta_;
    }

    SolveResult run()
    {
        SolveResult result;
        factorize();
        int rho_updates = 0;
        const auto P = static_cast<Index>(pairs_.size());
        const double copies = static_cast<double>(2 * P + K_);
        const double sqrt_m = std::sqrt(copies * static_cast<double>(p_));
        const double sqrt_n = std::sqrt(static_cast<double>(K_ * p_));

        Matrix za_old, zb_old, w_old;
        int iter = 0;
        for (iter = 1; iter <= cfg_.max_iter; ++iter) {
            update_theta();
            if (!theta_.allFinite())
                throw NumericalError("solver: non-finite iterate at iteration " + std::to_string(iter));

            za_old = za_;
            zb_old = zb_;
            w_old = w_;
            update_copies();

            // Scaled dual ascent; primal residual r = A theta - z.
            double r2 = 0.0;
            for (Index e = 0; e < P; ++e) {
                const auto& pr = pairs_[static_cast<std::size_t>(e)];
                const Vector ra = theta_.col(pr.a) - za_.col(e);
                const Vector rb = theta_.col(pr.b) - zb_.col(e);
                ua_.col(e) += ra;
                ub_.col(e) += rb;
                r2 += ra.squaredNorm() + rb.squaredNorm();
            }
            const Matrix rw = theta_ - w_;
            v_ += rw;
            r2 += rw.squaredNorm();

            // Dual residual s = rho A^T (z - z_old), and A^T u for the tolerance.
            Matrix dz = w_ - w_old;
            Matrix at_u = v_;
            for (Index e = 0; e < P; ++e) {
                const auto& pr = pairs_[static_cast<std::size_t>(e)];
                dz.col(pr.a) += za_.col(e) - za_old.col(e);
                dz.col(pr.b) += zb_.col(e) - zb_old.col(e);
                at_u.col(pr.a) += ua_.col(e);
                at_u.col(pr.b) += ub_.col(e);
            }
            const double primal = std::sqrt(r2);
            const double dual = rho_ * dz.norm();

            const double ax_norm = std::sqrt(theta_.squaredNorm() * (squared_ ? 1.0 : static_cast<double>(K_)));
            const double z_norm = std::sqrt(za_.squaredNorm() + zb_.squaredNorm() + w_.squaredNorm());
            const double eps_pri = sqrt_m * cfg_.eps_abs + cfg_.eps_rel * std::max(ax_norm, z_norm);
            const double eps_dual = sqrt_n * cfg_.eps_abs + cfg_.eps_rel * rho_ * at_u.norm();

            result.primal_residual = primal;
            result.dual_residual = dual;
            if (cfg_.record_trace)
                result.trace.push_back({iter, objective(problems_, current(), hp_).total, primal, dual, rho_});

            if (primal <= eps_pri && dual <= eps_dual) {
                result.converged = true;
                break;
            }

            if (cfg_.adapt_rho && rho_updates < cfg_.max_rho_updates && iter % kRhoCheckInterval == 0) {
                double factor = 1.0;
                if (primal > cfg_.rho_balance * dual)
                    factor = 2.0;
                else if (dual > cfg_.rho_balance * primal)
                    factor = 0.5;
                if (factor != 1.0) {
                    rho_ *= factor;
                    ua_ /= factor;
                    ub_ /= factor;
                    v_ /= factor;
                    ++rho_updates;
                    factorize();
                }
            }
        }

        result.iterations = std::min(iter, cfg_.max_iter);
        result.rho = rho_;
        result.thetas = current();
        result.objective = objective(problems_, result.thetas, hp_);
        return result;
    }

private:
    static constexpr int kRhoCheckInterval = 25;

    std::vector<ParameterVector> current() const
    {
        std::vector<ParameterVector> out;
        out.reserve(static_cast<std::size_t>(K_));
        for (Index k = 0; k < K_; ++k)
            out.emplace_back(structure_, theta_.col(k));
        return out;
    }

    void factorize()
    {
        const Matrix I = Matrix::Identity(p_, p_);
        factors_.clear();
        factors_.reserve(static_cast<std::size_t>(K_));
        if (!squared_) {
            // K - 1 pair copies + 1 sparsity copy per condition.
            for (Index k = 0; k < K_; ++k)
                factors_.emplace_back(gram2_[static_cast<std::size_t>(k)] + rho_ * static_cast<double>(K_) * I);
            return;
        }
        // Blocks B_k = 2 G_k + (rho + 2 lambda1 K) I, coupled through -2 lambda1 * (sum of thetas).
        const double c = 2.0 * hp_.lambda1;
        Matrix sum_inv = Matrix::Zero(p_, p_);
        for (Index k = 0; k < K_; ++k) {
            factors_.emplace_back(gram2_[static_cast<std::size_t>(k)] + (rho_ + c * static_cast<double>(K_)) * I);
            if (c > 0.0)
                sum_inv += factors_.back().solve(I);
        }
        if (c > 0.0)
            coupling_ = Eigen::LLT<Matrix>(I - c * sum_inv);
    }

    void update_theta()
    {
        const auto P = static_cast<Index>(pairs_.size());
        Matrix rhs = rhs_data_ + rho_ * (w_ - v_);
        for (Index e = 0; e < P; ++e) {
            const auto& pr = pairs_[static_cast<std::size_t>(e)];
            rhs.col(pr.a) += rho_ * (za_.col(e) - ua_.col(e));
            rhs.col(pr.b) += rho_ * (zb_.col(e) - ub_.col(e));
        }
        if (squared_ && hp_.lambda1 > 0.0) {
            const double c = 2.0 * hp_.lambda1;
            Vector partial = Vector::Zero(p_);
            for (Index k = 0; k < K_; ++k)
                partial += factors_[static_cast<std::size_t>(k)].solve(rhs.col(k));
            const Vector total = coupling_.solve(partial);
            for (Index k = 0; k < K_; ++k)
                theta_.col(k) = factors_[static_cast<std::size_t>(k)].solve(rhs.col(k) + c * total);
            return;
        }
        for (Index k = 0; k < K_; ++k)
            theta_.col(k) = factors_[static_cast<std::size_t>(k)].solve(rhs.col(k));
    }

    void update_copies()
    {
        const double pair_tau = 2.0 * hp_.lambda1 / rho_;
        for (std::size_t e = 0; e < pairs_.size(); ++e) {
            const auto col = static_cast<Index>(e);
            const Vector alpha = theta_.col(pairs_[e].a) + ua_.col(col);
            const Vector beta = theta_.col(pairs_[e].b) + ub_.col(col);
            const Vector d = prox_block_l2(alpha - beta, pair_tau);
            const Vector s = alpha + beta;
            za_.col(col) = 0.5 * (s + d);
            zb_.col(col) = 0.5 * (s - d);
        }
        const double l1_tau = hp_.lambda2 / rho_;
        for (Index k = 0; k < K_; ++k)
            w_.col(k) = prox_l1(theta_.col(k) + v_.col(k), l1_tau);
    }

    std::span<const RegressionProblem> problems_;
    Hyperparameters hp_;
    SolverConfig cfg_;
    ModelStructure structure_;
    Index K_ = 0;
    Index p_ = 0;
    bool squared_ = false;
    std::vector<Pair> pairs_;
    std::vector<Matrix> gram2_;
    Matrix rhs_data_;
    std::vector<Eigen::LLT<Matrix>> factors_;
    Eigen::LLT<Matrix> coupling_;
    double rho_ = 1.0;

    Matrix theta_;
    Matrix za_, zb_, ua_, ub_; // pair copies and their scaled duals
    Matrix w_, v_;             // sparsity copies and their scaled duals
};

} // namespace

SolveResult solve(std::span<const RegressionProblem> problems, const Hyperparameters& hp, const SolverConfig& cfg,
                  std::span<const ParameterVector> initial)
{
    hp.validate();
    cfg.validate();
    AdmmSolver admm(problems, hp, cfg);
    admm.warm_start(initial);
    return admm.run();
}

double max_pairwise_distance(std::span<const ParameterVector> thetas)
{
    double best = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k)
        for (std::size_t i = k + 1; i < thetas.size(); ++i)
            best = std::max(best, (thetas[k].values() - thetas[i].values()).norm());
    return best;
}

double merge_scale(std::span<const ParameterVector> thetas)
{
    double m = 0.0;
    for (const auto& t : thetas)
        m = std::max(m, t.values().norm());
    return 1.0 + m;
}

bool all_coalesced(std::span<const ParameterVector> thetas, double rel_tol)
{
    return max_pairwise_distance(thetas) <= rel_tol * merge_scale(thetas);
}

std::vector<std::vector<int>> merged_groups(std::span<const ParameterVector> thetas, double rel_tol)
{
    const int K = static_cast<int>(thetas.size());
    const double threshold = rel_tol * merge_scale(thetas);
    std::vector<int> parent(static_cast<std::size_t>(K));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x)
            x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        return x;
    };
    for (int k = 0; k < K; ++k)
        for (int i = k + 1; i < K; ++i)
            if ((thetas[static_cast<std::size_t>(k)].values() - thetas[static_cast<std::size_t>(i)].values()).norm()
                <= threshold) {
                const int rk = find(k), ri = find(i);
                parent[static_cast<std::size_t>(std::max(rk, ri))] = std::min(rk, ri);
            }
    std::vector<std::vector<int>> groups;
    std::vector<int> slot(static_cast<std::size_t>(K), -1);
    for (int k = 0; k < K; ++k) {
        const int root = find(k);
        if (slot[static_cast<std::size_t>(root)] < 0) {
            slot[static_cast<std::size_t>(root)] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(slot[static_cast<std::size_t>(root)])].push_back(k);
    }
    return groups;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> trace)
{
    std::string out = "iter,objective,primal_res,dual_res,rho\n";
    for (const auto& row : trace)
        out += std::to_string(row.iteration) + "," + format_double(row.objective) + ","
               + format_double(row.primal_residual) + "," + format_double(row.dual_residual) + ","
               + format_double(row.rho) + "\n";
    write_text_file(path, out);
}

} // namespace fusedfir
