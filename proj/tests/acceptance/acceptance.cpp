// Acceptance checks, one line per criterion. Exit status is the number of failures.

#include "fusedfir/bounds.hpp"
#include "fusedfir/criterion.hpp"
#include "fusedfir/format.hpp"
#include "fusedfir/least_squares.hpp"
#include "fusedfir/metrics.hpp"
#include "fusedfir/pipeline.hpp"
#include "fusedfir/solver.hpp"
#include "fusedfir/synthetic.hpp"

#include "instances.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace fusedfir;
using namespace fusedfir::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int g_failures = 0;

void run(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        o.pass = false;
        o.detail += " (over time budget " + format_double(budget_s) + " s)";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", secs);
    std::cout << "criterion " << id << " [" << (o.pass ? "PASS" : "FAIL") << "] " << title << ": " << o.detail
              << " [" << buf << " s]" << std::endl;
    if (!o.pass)
        ++g_failures;
}

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double max_inf(std::span<const ParameterVector> th)
{
    double m = 0.0;
    for (const auto& t : th)
        m = std::max(m, t.values().lpNorm<Eigen::Infinity>());
    return m;
}

// Criterion 1 ------------------------------------------------------------------------

Outcome prox_correctness()
{
    std::mt19937_64 rng(1001);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 8);
    auto block_obj = [](const Vector& x, const Vector& v, double tau) {
        return 0.5 * (x - v).squaredNorm() + tau * x.norm();
    };
    auto l1_obj = [](const Vector& x, const Vector& v, double tau) {
        return 0.5 * (x - v).squaredNorm() + tau * x.lpNorm<1>();
    };
    double worst = -1e300;
    int violations = 0;
    for (int c = 0; c < 200; ++c) {
        Vector v(dim(rng));
        for (auto& e : v)
            e = 2.0 * nd(rng);
        const double tau = 3.0 * ud(rng) * (c % 10 == 0 ? 0.0 : 1.0);
        const Vector xb = prox_block_l2(v, tau), xl = prox_l1(v, tau);
        const double fb = block_obj(xb, v, tau), fl = l1_obj(xl, v, tau);
        for (int p = 0; p < 1000; ++p) {
            const double scale = std::pow(10.0, -6.0 + 6.0 * ud(rng));
            Vector d(v.size());
            for (auto& e : d)
                e = scale * nd(rng);
            // half the candidates perturb the prox output, half perturb zero and v
            const Vector cb = p % 2 ? Vector(xb + d) : (p % 4 ? Vector(d) : Vector(v + d));
            const Vector cl = p % 2 ? Vector(xl + d) : (p % 4 ? Vector(d) : Vector(v + d));
            const double gb = fb - block_obj(cb, v, tau), gl = fl - l1_obj(cl, v, tau);
            worst = std::max({worst, gb, gl});
            violations += (gb > 1e-8) + (gl > 1e-8);
        }
    }
    return {violations == 0, "200 cases x 1000 candidates, largest candidate improvement " + sci(worst)
                                 + " (tolerance 1e-8), violations " + std::to_string(violations)};
}

// Criteria 2-4 -----------------------------------------------------------------------

struct OracleCase {
    std::vector<RegressionProblem> problems;
    Hyperparameters hp;
};

std::vector<OracleCase> oracle_cases()
{
    std::vector<OracleCase> out;
    std::mt19937_64 rng(2002);
    for (int i = 0; i < 20; ++i) {
        InstanceSpec spec;
        spec.conditions = 2 + i % 3;
        spec.n_theta = 2 + static_cast<int>(rng() % 9); // 2..10
        spec.rows = spec.n_theta + 5 + static_cast<int>(rng() % (46 - spec.n_theta)); // <= 50
        spec.noise = 0.1;
        spec.spread = 0.5;
        auto ps = random_instance(spec, 5000 + static_cast<std::uint64_t>(i));
        const double l1 = (i / 3) % 2 ? 0.5 * lambda1_max(ps) : 0.0;
        const double l2 = (i / 6) % 2 || i % 5 == 0 ? 0.5 * lambda2_max(ps) : 0.0;
        out.push_back({std::move(ps), {l1, l2}});
    }
    return out;
}

Outcome solver_oracle(const std::vector<OracleCase>& cases)
{
    double worst = 0.0, worst_gap = 0.0;
    int bad = 0, combos[2][2] = {};
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const auto s = solve(c.problems, c.hp);
        OracleConfig ocfg;
        ocfg.seed = i;
        const auto o = solve_oracle(c.problems, c.hp, ocfg);
        const double gap = std::abs(s.objective.total - o.solve.objective.total) / (1.0 + o.solve.objective.total);
        worst = std::max(worst, gap);
        worst_gap = std::max(worst_gap, o.duality_gap / (1.0 + o.solve.objective.total));
        bad += !(gap <= 1e-5) || !s.converged;
        combos[c.hp.lambda1 > 0][c.hp.lambda2 > 0]++;
    }
    return {bad == 0, "20 instances (lambda grid cells " + std::to_string(combos[0][0]) + "/"
                          + std::to_string(combos[0][1]) + "/" + std::to_string(combos[1][0]) + "/"
                          + std::to_string(combos[1][1]) + "), worst relative objective gap " + sci(worst)
                          + " (tolerance 1e-5), worst oracle duality gap " + sci(worst_gap)};
}

Outcome decoupling(const std::vector<OracleCase>& cases)
{
    double worst = 0.0;
    bool conv = true;
    for (const auto& c : cases) {
        const auto s = solve(c.problems, {0.0, 0.0});
        conv = conv && s.converged;
        for (std::size_t k = 0; k < c.problems.size(); ++k)
            worst = std::max(worst,
                             (s.thetas[k].values() - ls_fit(c.problems[k]).theta.values()).lpNorm<Eigen::Infinity>());
    }
    return {conv && worst <= 1e-6, "largest parameter gap to per-condition least squares " + sci(worst)
                                       + " (tolerance 1e-6) over " + std::to_string(cases.size()) + " instances"};
}

Outcome lambda2_bound(const std::vector<OracleCase>& cases)
{
    double worst_zero = 0.0, weakest_active = 1e300;
    int checked = 0;
    for (const auto& c : cases) {
        const double l2max = lambda2_max(c.problems);
        worst_zero = std::max(worst_zero, max_inf(solve(c.problems, {0.0, 1.01 * l2max}).thetas));
        if (l2max > 0.0) {
            weakest_active = std::min(weakest_active, max_inf(solve(c.problems, {0.0, 0.5 * l2max}).thetas));
            ++checked;
        }
    }
    return {worst_zero <= 1e-6 && weakest_active > 1e-4,
            "at 1.01*lambda2_max largest |theta| " + sci(worst_zero) + " (<= 1e-6); at 0.5*lambda2_max smallest max|theta| "
                + sci(weakest_active) + " (> 1e-4) on " + std::to_string(checked) + " instances"};
}

// Criteria 5-6 -----------------------------------------------------------------------

std::vector<std::vector<RegressionProblem>> coalescence_instances()
{
    std::vector<std::vector<RegressionProblem>> out;
    for (int i = 0; i < 12; ++i) {
        InstanceSpec spec;
        spec.conditions = 2 + i % 4;
        spec.n_theta = 3 + i % 4;
        spec.rows = 30;
        spec.noise = 0.1;
        spec.spread = 0.5;
        out.push_back(random_instance(spec, 7000 + static_cast<std::uint64_t>(i)));
    }
    return out;
}

SolverConfig tight()
{
    SolverConfig cfg;
    cfg.eps_abs = 1e-10;
    cfg.eps_rel = 1e-9;
    cfg.max_iter = 200'000;
    return cfg;
}

Outcome coalescence_behavior(const std::vector<std::vector<RegressionProblem>>& instances)
{
    double a_spread = 0.0, a_match = 0.0, b_min_dist = 1e300, b_max_margin = -1e300;
    bool a_ok = true, b_ok = true;
    for (const auto& ps : instances) {
        const auto b = compute_bounds(ps);
        const double scale = 1.0 + b.theta_star.values().norm();
        const auto sa = solve(ps, {1.05 * b.lambda1_sufficient, 0.0}, tight());
        const double spread = max_pairwise_distance(sa.thetas) / scale;
        double match = 0.0;
        for (const auto& t : sa.thetas)
            match = std::max(match, (t.values() - b.theta_star.values()).lpNorm<Eigen::Infinity>());
        a_spread = std::max(a_spread, spread);
        a_match = std::max(a_match, match);
        a_ok = a_ok && sa.converged && spread <= 1e-5 && match <= 1e-5;

        const auto margins = kkt_necessary_margin(ps, 0.9 * b.lambda1_max);
        const double min_margin = *std::min_element(margins.begin(), margins.end());
        const auto sb = solve(ps, {0.9 * b.lambda1_max, 0.0}, tight());
        const double dist = max_pairwise_distance(sb.thetas) / scale;
        b_max_margin = std::max(b_max_margin, min_margin);
        b_min_dist = std::min(b_min_dist, dist);
        b_ok = b_ok && min_margin < 0.0 && dist > 1e-3;
    }

    // (c) K = 2: bisect the solver's coalescence indicator.
    double c_worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const auto ps = random_instance({.conditions = 2, .n_theta = 3 + i % 3, .rows = 30, .noise = 0.1, .spread = 0.5},
                                        9000 + static_cast<std::uint64_t>(i));
        const double lmax = lambda1_max(ps);
        double lo = 0.5 * lmax, hi = 1.5 * lmax;
        for (int it = 0; it < 30; ++it) {
            const double mid = 0.5 * (lo + hi);
            (all_coalesced(solve(ps, {mid, 0.0}, tight()).thetas) ? hi : lo) = mid;
        }
        c_worst = std::max(c_worst, std::abs(0.5 * (lo + hi) - lmax) / lmax);
    }
    const bool c_ok = c_worst <= 0.01;
    return {a_ok && b_ok && c_ok,
            "(a) spread/(1+|theta*|) " + sci(a_spread) + ", distance to theta* " + sci(a_match) + " (<= 1e-5) "
                + (a_ok ? "ok" : "FAILED") + "; (b) largest min margin " + sci(b_max_margin)
                + " (< 0), smallest spread " + sci(b_min_dist) + " (> 1e-3) " + (b_ok ? "ok" : "FAILED")
                + "; (c) K=2 bisection worst relative error " + sci(c_worst) + " (<= 1%) "
                + (c_ok ? "ok" : "FAILED")};
}

Outcome certificate_identity(const std::vector<std::vector<RegressionProblem>>& instances)
{
    double worst = 0.0;
    bool certified = true;
    for (const auto& ps : instances) {
        const auto b = compute_bounds(ps);
        for (double lam : {0.5 * b.lambda1_max, 0.9 * b.lambda1_max, b.lambda1_max, b.lambda1_sufficient,
                           1.05 * b.lambda1_sufficient, 10.0 * b.lambda1_sufficient}) {
            const auto c = coalescence_certificate(ps, lam);
            worst = std::max(worst, c.identity_residual);
            if (lam >= b.lambda1_sufficient)
                certified = certified && c.certified;
        }
    }
    return {worst <= 1e-10 && certified, "largest identity residual " + sci(worst) + " (<= 1e-10), "
                                             + (certified ? "certified" : "NOT certified")
                                             + " at every lambda1 >= lambda1_sufficient"};
}

// Criterion 7 ------------------------------------------------------------------------

Outcome fit_cases()
{
    Vector y(3), y_bad(3);
    y << 1, 2, 3;
    y_bad << 1, 2, 5;
    const double a = fit_metric(y, y), b = fit_metric(y, Vector::Constant(3, y.mean())), c = fit_metric(y, y_bad);
    return {a == 100.0 && b == 0.0 && c == -100.0,
            "FIT values " + format_double(a) + ", " + format_double(b) + ", " + format_double(c)};
}

// Criteria 8-9 -----------------------------------------------------------------------

struct EndToEnd {
    SyntheticScenario scenario;
    PipelineInputs inputs;
    PipelineOptions options;
};

EndToEnd end_to_end_setup()
{
    EndToEnd e;
    e.scenario = scenario_from_json(nlohmann::json::parse(read_text_file(FUSEDFIR_CONFIGS "/two_groups.json")));
    for (const auto& ds : generate_synthetic(e.scenario))
        (ds.name.ends_with("-1") ? e.inputs.estimation : e.inputs.validation).push_back(ds);
    // Held-out evaluation data: a fresh draw of the same conditions.
    auto fresh = e.scenario;
    fresh.seed = split_seed(e.scenario.seed, 99);
    for (auto ds : generate_synthetic(fresh)) {
        if (!ds.name.ends_with("-1"))
            continue;
        ds.name.back() = '3';
        e.inputs.evaluation.push_back(std::move(ds));
    }
    e.options.k_clusters = 2;
    e.options.seed = 20240917;
    return e;
}

Outcome recovery(const EndToEnd& e, const PipelineReport& rep)
{
    std::map<std::string, int> group;
    for (const auto& [name, g] : e.scenario.assignment)
        group[name] = g;
    std::vector<int> truth;
    for (const auto& c : rep.conditions)
        truth.push_back(group.at(c));
    const double ari = adjusted_rand_index(rep.clusters.labels, truth);

    // Irrelevant block relative to the largest relevant block, for joint and category models.
    double ratio = 0.0;
    auto check_block = [&](const ParameterVector& t) {
        double rel = 0.0, irr = 0.0;
        for (int j = 0; j < t.structure().channels; ++j) {
            double& slot = e.scenario.irrelevant_channels.count(j) ? irr : rel;
            slot = std::max(slot, t.block(j).lpNorm<Eigen::Infinity>());
        }
        ratio = std::max(ratio, irr / rel);
    };
    for (const auto& t : rep.solve.thetas)
        check_block(t);
    for (const auto& c : rep.categories)
        check_block(c.fit.theta);

    // Category of each evaluation dataset's condition.
    std::map<std::string, int> category_group;
    for (std::size_t c = 0; c < rep.categories.size(); ++c) {
        const auto cond = rep.categories[c].members.front();
        category_group[rep.categories[c].name] = group.at(cond.substr(0, cond.rfind('-')));
    }
    double own_min = 1e300, margin_min = 1e300;
    for (const auto& ev : rep.evaluation_datasets) {
        const int g = group.at(ev.substr(0, ev.rfind('-')));
        double own = -1e300, cross = -1e300;
        for (const auto& f : rep.fits) {
            if (f.method != "category" || f.eval_dataset != ev || !f.fit_percent)
                continue;
            double& slot = category_group.at(f.model_source) == g ? own : cross;
            slot = std::max(slot, *f.fit_percent);
        }
        own_min = std::min(own_min, own);
        margin_min = std::min(margin_min, own - cross);
    }
    const bool ok = ari == 1.0 && ratio <= 0.05 && own_min >= 70.0 && margin_min >= 20.0;
    return {ok, "ARI " + format_double(ari) + ", irrelevant/relevant block ratio " + sci(ratio)
                    + " (<= 0.05), lowest own-group FIT " + sci(own_min) + "% (>= 70), smallest own-minus-cross gap "
                    + sci(margin_min) + " points (>= 20); selected lambda1 " + sci(rep.hp.lambda1) + ", lambda2 "
                    + sci(rep.hp.lambda2)};
}

std::string serialize(const PipelineReport& rep)
{
    std::vector<NamedModel> models;
    for (std::size_t k = 0; k < rep.solve.thetas.size(); ++k)
        models.push_back({"joint", rep.estimation_datasets[k], rep.solve.thetas[k]});
    return to_json(rep).dump(2) + thetas_csv(models) + fit_matrix_csv(rep.fits);
}

} // namespace

int main()
{
    std::cout << "acceptance suite" << std::endl;
    run(1, "prox correctness", 5, prox_correctness);

    const auto cases = oracle_cases();
    run(2, "solver vs oracle", 120, [&] { return solver_oracle(cases); });
    run(3, "decoupling at lambda1 = lambda2 = 0", 60, [&] { return decoupling(cases); });
    run(4, "lambda2 bound", 60, [&] { return lambda2_bound(cases); });

    const auto coal = coalescence_instances();
    run(5, "coalescence behavior", 180, [&] { return coalescence_behavior(coal); });
    run(6, "certificate identity", 10, [&] { return certificate_identity(coal); });
    run(7, "FIT hand cases", 1, fit_cases);

    const auto e2e = end_to_end_setup();
    std::string first_run;
    run(8, "end-to-end recovery", 300, [&] {
        const auto rep = run_pipeline(e2e.inputs, e2e.scenario.structure, e2e.options);
        first_run = serialize(rep);
        return recovery(e2e, rep);
    });
    run(9, "determinism", 300, [&] {
        const auto again = serialize(run_pipeline(e2e.inputs, e2e.scenario.structure, e2e.options));
        const bool same = !first_run.empty() && again == first_run;
        return Outcome{same, same ? "rerun byte-identical (" + std::to_string(again.size()) + " bytes)"
                                  : "rerun differs from the first run"};
    });

    std::cout << (g_failures ? std::to_string(g_failures) + " criteria failed" : "all criteria passed") << std::endl;
    return g_failures;
}
