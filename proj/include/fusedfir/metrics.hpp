#pragma once

#include "fusedfir/types.hpp"

#include <span>
#include <vector>

namespace fusedfir {

/// Goodness of fit in percent: 100 (1 - ||Y - Y_hat||^2 / ||Y - mean(Y)||^2).
/// Throws DataError on length mismatch, fewer than 2 samples, or constant Y.
double fit_metric(const Vector& y, const Vector& y_hat);

/// Adjusted Rand index between two labelings of the same items (1 = identical partitions).
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Mean silhouette coefficient of a labeling of `points` under Euclidean distance.
/// Singleton clusters contribute 0.
double mean_silhouette(std::span<const Vector> points, std::span<const int> labels);

} // namespace fusedfir
