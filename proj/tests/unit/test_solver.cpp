#include "fusedfir/bounds.hpp"
#include "fusedfir/error.hpp"
#include "fusedfir/least_squares.hpp"
#include "fusedfir/solver.hpp"

#include "instances.hpp"

#include <doctest.h>

#include <cmath>

using namespace fusedfir;
using namespace fusedfir::testing;

namespace {

const std::vector<RegressionProblem>& scalar_pair()
{
    static const std::vector ps{scalar_problem({0.0}, 1.0, "C1"), scalar_problem({2.0}, 1.0, "C2")};
    return ps;
}

double rel_gap(double a, double b) { return std::abs(a - b) / (1 + std::abs(b)); }

} // namespace

TEST_CASE("solve: decoupled case matches per-condition least squares")
{
    const auto ps = random_instance({.conditions = 4, .n_theta = 5}, 31);
    const auto r = solve(ps, {0.0, 0.0});
    REQUIRE(r.converged);
    for (std::size_t k = 0; k < ps.size(); ++k)
        CHECK((r.thetas[k].values() - ls_fit(ps[k]).theta.values()).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("solve: fused scalar pair")
{
    const auto r = solve(scalar_pair(), {1.0, 0.0});
    REQUIRE(r.converged);
    CHECK(r.thetas[0].values()(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.thetas[1].values()(0) == doctest::Approx(1.5).epsilon(1e-6));

    const auto c = solve(scalar_pair(), {2.0, 0.0});
    REQUIRE(c.converged);
    CHECK(c.thetas[0].values()(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c.thetas[1].values()(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lambda1_max(scalar_pair()) == doctest::Approx(2.0));
}

TEST_CASE("solve: max_iter is reported, never silent")
{
    SolverConfig cfg;
    cfg.max_iter = 3;
    const auto r = solve(random_instance({}, 2), {0.5, 0.1}, cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
}

TEST_CASE("solve: non-finite data is a hard error")
{
    auto ps = random_instance({}, 3);
    ps[1].y(0) = std::nan("");
    CHECK_THROWS(solve(ps, {0.1, 0.0}));
}

TEST_CASE("oracle: scalar pair and decoupled case")
{
    const auto o = solve_oracle(scalar_pair(), {1.0, 0.0});
    const auto s = solve(scalar_pair(), {1.0, 0.0});
    CHECK(std::abs(o.solve.objective.total - s.objective.total) <= 1e-5);

    const auto ps = random_instance({.conditions = 2}, 5);
    double ls = 0.0;
    for (const auto& p : ps)
        ls += ls_fit(p).residual_norm_sq;
    CHECK(std::abs(solve_oracle(ps, {0.0, 0.0}).solve.objective.total - ls) <= 1e-6);
}

TEST_CASE("oracle: size guard")
{
    CHECK_THROWS_AS(solve_oracle(random_instance({.conditions = 7}, 1), {0.1, 0.0}), PreconditionError);
    CHECK_THROWS_AS(solve_oracle(random_instance({.n_theta = 21, .rows = 40}, 1), {0.1, 0.0}), PreconditionError);
}

TEST_CASE("solve agrees with the oracle on small random instances")
{
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto ps = random_instance({.conditions = 3, .n_theta = 4, .rows = 20}, 100 + seed);
        const Hyperparameters hp{0.5 * lambda1_max(ps), 0.25 * lambda2_max(ps)};
        const auto s = solve(ps, hp);
        const auto o = solve_oracle(ps, hp);
        REQUIRE(s.converged);
        CHECK(rel_gap(s.objective.total, o.solve.objective.total) <= 1e-5);
    }
}

TEST_CASE("squared fusion variant agrees with the oracle of its own objective")
{
    // Closed form for two scalars: minimize t1^2 + (2-t2)^2 + lam (t1-t2)^2.
    const double lam = 0.75;
    const auto r = solve(scalar_pair(), {lam, 0.0, FusionVariant::l2_squared});
    REQUIRE(r.converged);
    const double gap = 2.0 / (1.0 + 2.0 * lam);
    CHECK(r.thetas[1].values()(0) - r.thetas[0].values()(0) == doctest::Approx(gap).epsilon(1e-6));
    CHECK(r.thetas[1].values()(0) + r.thetas[0].values()(0) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("solve never does worse than the obvious candidates")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ps = random_instance({.conditions = 3, .n_theta = 5, .rows = 25}, 300 + seed);
        const Hyperparameters hp{0.3 * lambda1_max(ps), 0.1 * lambda2_max(ps)};
        const auto r = solve(ps, hp);
        std::vector<ParameterVector> ls, pooled;
        for (const auto& p : ps)
            ls.push_back(ls_fit(p).theta);
        const auto star = pooled_ls_fit(ps).theta;
        pooled.assign(ps.size(), star);
        CHECK(r.objective.total <= objective(ps, ls, hp).total + 1e-9);
        CHECK(r.objective.total <= objective(ps, pooled, hp).total + 1e-9);
    }
}

TEST_CASE("solver outputs satisfy the convexity inequality")
{
    const auto ps = random_instance({.conditions = 3}, 77);
    const Hyperparameters hp{0.4, 0.05};
    SolverConfig loose;
    loose.max_iter = 20; // two different points of the same criterion
    const auto a = solve(ps, hp, loose).thetas;
    const auto b = solve(ps, hp).thetas;
    const double fa = objective(ps, a, hp).total, fb = objective(ps, b, hp).total;
    for (double t : {0.25, 0.5, 0.75}) {
        std::vector<ParameterVector> mix;
        for (std::size_t k = 0; k < a.size(); ++k)
            mix.emplace_back(a[k].structure(), Vector(t * a[k].values() + (1 - t) * b[k].values()));
        CHECK(objective(ps, mix, hp).total <= t * fa + (1 - t) * fb + 1e-9);
    }
}

TEST_CASE("permuting conditions permutes the solution")
{
    const auto ps = random_instance({.conditions = 4}, 55);
    const Hyperparameters hp{0.3 * lambda1_max(ps), 0.0};
    const auto r = solve(ps, hp);
    const std::vector<int> perm{3, 1, 0, 2};
    std::vector<RegressionProblem> pp;
    for (int k : perm)
        pp.push_back(ps[k]);
    const auto q = solve(pp, hp);
    CHECK(std::abs(q.objective.total - r.objective.total) <= 1e-10 * (1 + r.objective.total) + 1e-8);
    for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK((q.thetas[i].values() - r.thetas[perm[i]].values()).norm() <= 1e-5);
}

TEST_CASE("solve is deterministic")
{
    const auto ps = random_instance({.conditions = 3}, 8);
    const auto a = solve(ps, {0.2, 0.01});
    const auto b = solve(ps, {0.2, 0.01});
    CHECK(a.iterations == b.iterations);
    for (std::size_t k = 0; k < a.thetas.size(); ++k)
        CHECK(a.thetas[k].values() == b.thetas[k].values());
}

TEST_CASE("trace is recorded on request")
{
    SolverConfig cfg;
    cfg.record_trace = true;
    const auto r = solve(random_instance({}, 6), {0.2, 0.0}, cfg);
    CHECK(r.trace.size() == static_cast<std::size_t>(r.iterations));
}

TEST_CASE("merge helpers")
{
    const ModelStructure s{1, 1};
    std::vector<ParameterVector> th{ParameterVector(s, Vector::Constant(1, 1.0)),
                                    ParameterVector(s, Vector::Constant(1, 1.0 + 1e-9)),
                                    ParameterVector(s, Vector::Constant(1, 3.0))};
    CHECK(max_pairwise_distance(th) == doctest::Approx(2.0));
    CHECK(merge_scale(th) == doctest::Approx(4.0));
    CHECK_FALSE(all_coalesced(th));
    const auto g = merged_groups(th);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == std::vector<int>{0, 1});
    CHECK(g[1] == std::vector<int>{2});
}
