#include "fusedfir/kmeans.hpp"

#include "fusedfir/error.hpp"

#include <cassert>
#include <limits>
#include <random>

namespace fusedfir {

int ClusterAssignment::category_of(const std::string& name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return labels[i];
    throw DataError("no cluster label for '" + name + "'");
}

std::vector<std::vector<int>> ClusterAssignment::members() const
{
    std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
    return out;
}

namespace {

struct Run {
    std::vector<int> labels;
    Matrix centroids; // p x k
    double inertia = 0.0;
};

Matrix seed_plus_plus(const Matrix& X, int k, std::mt19937_64& rng)
{
    const Index n = X.cols();
    Matrix centers(X.rows(), k);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    Index first = pick(rng);
    centers.col(0) = X.col(first);
    chosen[static_cast<std::size_t>(first)] = true;

    Vector d2 = (X.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index next = -1;
        if (total > 0.0) {
            const double target = unif(rng) * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= target && d2(i) > 0.0) {
                    next = i;
                    break;
                }
            }
            if (next < 0) // rounding at the top end
                for (Index i = n - 1; i >= 0 && next < 0; --i)
                    if (d2(i) > 0.0)
                        next = i;
        }
        if (next < 0) // all remaining points coincide with a center
            for (Index i = 0; i < n && next < 0; ++i)
                if (!chosen[static_cast<std::size_t>(i)])
                    next = i;
        centers.col(c) = X.col(next);
        chosen[static_cast<std::size_t>(next)] = true;
        d2 = d2.cwiseMin((X.colwise() - centers.col(c)).colwise().squaredNorm().transpose());
    }
    return centers;
}

Run lloyd(const Matrix& X, Matrix centers)
{
    const Index n = X.cols();
    const int k = static_cast<int>(centers.cols());
    Run run;
    run.labels.assign(static_cast<std::size_t>(n), -1);
#ifndef NDEBUG
    double last_inertia = std::numeric_limits<double>::infinity();
#endif

    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = false;
        Vector dist(n);
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            const double d = (centers.colwise() - X.col(i)).colwise().squaredNorm().minCoeff(&best);
            dist(i) = d;
            if (run.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
                run.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }

        // Empty clusters take the point farthest from its centroid among clusters with >1 member.
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int l : run.labels)
            ++sizes[static_cast<std::size_t>(l)];
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0)
                continue;
            Index far = -1;
            for (Index i = 0; i < n; ++i)
                if (sizes[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])] > 1
                    && (far < 0 || dist(i) > dist(far)))
                    far = i;
            --sizes[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(far)])];
            run.labels[static_cast<std::size_t>(far)] = c;
            sizes[static_cast<std::size_t>(c)] = 1;
            dist(far) = 0.0;
            changed = true;
        }

        centers.setZero();
        for (Index i = 0; i < n; ++i)
            centers.col(run.labels[static_cast<std::size_t>(i)]) += X.col(i);
        for (int c = 0; c < k; ++c)
            centers.col(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);

        double inertia = 0.0;
        for (Index i = 0; i < n; ++i)
            inertia += (X.col(i) - centers.col(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
#ifndef NDEBUG
        assert(inertia <= last_inertia * (1.0 + 1e-12) + 1e-300);
        last_inertia = inertia;
#endif
        run.inertia = inertia;
        if (!changed)
            break;
    }
    run.centroids = std::move(centers);
    return run;
}

} // namespace

ClusterAssignment kmeans(std::span<const ParameterVector> thetas, int k, std::uint64_t seed, int restarts,
                         std::vector<std::string> names)
{
    if (thetas.empty())
        throw DataError("kmeans: no points");
    if (k < 1 || k > static_cast<int>(thetas.size()))
        throw PreconditionError("kmeans: k = " + std::to_string(k) + " must be in [1, "
                                + std::to_string(thetas.size()) + "]");
    if (restarts < 1)
        throw DataError("kmeans: restarts must be >= 1");
    const auto& structure = thetas.front().structure();
    const Index p = thetas.front().size();
    Matrix X(p, static_cast<Index>(thetas.size()));
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (thetas[i].size() != p)
            throw DataError("kmeans: points have different dimensions");
        X.col(static_cast<Index>(i)) = thetas[i].values();
    }
    if (names.empty())
        for (std::size_t i = 0; i < thetas.size(); ++i)
            names.push_back(std::to_string(i));
    if (names.size() != thetas.size())
        throw DataError("kmeans: names and points differ in count");

    std::mt19937_64 rng(seed);
    Run best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Run run = lloyd(X, seed_plus_plus(X, k, rng));
        if (run.inertia < best.inertia)
            best = std::move(run);
    }

    // Relabel by first appearance.
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int l : best.labels)
        if (remap[static_cast<std::size_t>(l)] < 0)
            remap[static_cast<std::size_t>(l)] = next++;
    ClusterAssignment out;
    out.names = std::move(names);
    out.k = k;
    out.inertia = best.inertia;
    out.centroids.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        out.centroids[static_cast<std::size_t>(remap[static_cast<std::size_t>(c)])] =
            ParameterVector(structure, best.centroids.col(c));
    for (int l : best.labels)
        out.labels.push_back(remap[static_cast<std::size_t>(l)]);
    return out;
}

} // namespace fusedfir
