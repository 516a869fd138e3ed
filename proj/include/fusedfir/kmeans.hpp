#pragma once

#include "fusedfir/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fusedfir {

/// Partition of conditions into model categories. Labels are 0-based and numbered
/// in order of first appearance, so equal partitions always print identically.
struct ClusterAssignment {
    std::vector<std::string> names;
    std::vector<int> labels;
    std::vector<ParameterVector> centroids;
    int k = 0;
    double inertia = 0.0;

    int category_of(const std::string& name) const;
    std::vector<std::vector<int>> members() const;
};

/// Lloyd's algorithm with k-means++ seeding, best inertia over `restarts` runs.
/// Deterministic in `seed`. `names` defaults to "0", "1", ...
ClusterAssignment kmeans(std::span<const ParameterVector> thetas, int k, std::uint64_t seed, int restarts = 10,
                         std::vector<std::string> names = {});

} // namespace fusedfir
