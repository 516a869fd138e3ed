#pragma once

#include "fusedfir/dataset.hpp"
#include "fusedfir/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fusedfir {

/// Ground truth for a synthetic multi-condition experiment. Conditions sharing a
/// group share one true FIR model; channels in `irrelevant_channels` have zero
/// coefficients in every truth.
struct SyntheticScenario {
    ModelStructure structure;
    std::vector<ParameterVector> group_truths;
    /// condition name -> group index, in generation order
    std::vector<std::pair<std::string, int>> assignment;
    double noise_sigma = 0.0;
    std::set<int> irrelevant_channels;
    int samples_per_condition = 100; // L
    std::uint64_t seed = 0;
    /// First-order AR coloring of the inputs; 0 gives white inputs.
    double ar_coefficient = 0.0;

    void validate() const;
};

/// Two datasets per condition, "<cond>-1" (estimation) then "<cond>-2" (validation),
/// in assignment order. Deterministic in `seed`.
std::vector<ConditionDataset> generate_synthetic(const SyntheticScenario& scn);

/// Random group truths: coefficients ~ N(0, scale^2) with irrelevant blocks zeroed.
std::vector<ParameterVector> random_group_truths(const ModelStructure& structure, int groups,
                                                 const std::set<int>& irrelevant_channels, double scale,
                                                 std::uint64_t seed);

/// Parses a scenario config. Either `group_truths` (arrays of n_theta numbers) or
/// `groups` (a count; truths drawn from the seed) must be present.
SyntheticScenario scenario_from_json(const nlohmann::json& config);
nlohmann::json scenario_to_json(const SyntheticScenario& scn);

} // namespace fusedfir
