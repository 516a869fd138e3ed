#include "fusedfir/metrics.hpp"

#include "fusedfir/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace fusedfir {

double fit_metric(const Vector& y, const Vector& y_hat)
{
    if (y.size() != y_hat.size())
        throw DataError("FIT: lengths differ (" + std::to_string(y.size()) + " vs " + std::to_string(y_hat.size()) + ")");
    if (y.size() < 2)
        throw DataError("FIT: need at least 2 samples");
    const double denom = (y.array() - y.mean()).matrix().squaredNorm();
    if (!(denom > 0.0))
        throw DataError("undefined FIT (zero variance)");
    return (1.0 - (y - y_hat).squaredNorm() / denom) * 100.0;
}

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

} // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b)
{
    if (a.size() != b.size())
        throw DataError("ARI: labelings differ in length");
    const double n = static_cast<double>(a.size());
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, count] : joint)
        index += choose2(count);
    for (const auto& [key, count] : rows)
        sum_rows += choose2(count);
    for (const auto& [key, count] : cols)
        sum_cols += choose2(count);
    const double total = choose2(n);
    const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected)
        return 1.0; // both partitions trivial in the same way
    return (index - expected) / (max_index - expected);
}

double mean_silhouette(std::span<const Vector> points, std::span<const int> labels)
{
    if (points.size() != labels.size())
        throw DataError("silhouette: size mismatch");
    const std::size_t n = points.size();
    if (n == 0)
        return 0.0;
    std::map<int, std::size_t> sizes;
    for (int l : labels)
        ++sizes[l];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] <= 1)
            continue;
        std::map<int, double> dist_sum;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                dist_sum[labels[j]] += (points[i] - points[j]).norm();
        const double a = dist_sum[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, sum] : dist_sum)
            if (label != labels[i])
                b = std::min(b, sum / static_cast<double>(sizes[label]));
        if (!std::isfinite(b))
            continue;
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

} // namespace fusedfir
