#include "fusedfir/synthetic.hpp"

#include "fusedfir/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

namespace fusedfir {

void SyntheticScenario::validate() const
{
    structure.validate();
    if (group_truths.empty())
        throw DataError("scenario: no group truths");
    if (assignment.empty())
        throw DataError("scenario: no conditions");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw DataError("scenario: noise_sigma must be finite and >= 0");
    if (samples_per_condition < structure.taps)
        throw DataError("scenario: samples_per_condition must be >= taps");
    if (!(std::abs(ar_coefficient) < 1.0))
        throw DataError("scenario: |ar_coefficient| must be < 1");
    for (int ch : irrelevant_channels)
        if (ch < 0 || ch >= structure.channels)
            throw DataError("scenario: irrelevant channel " + std::to_string(ch) + " out of range");
    for (std::size_t g = 0; g < group_truths.size(); ++g) {
        const auto& truth = group_truths[g];
        if (!(truth.structure() == structure))
            throw DataError("scenario: group " + std::to_string(g) + " truth has wrong structure");
        for (int ch : irrelevant_channels)
            if (truth.block(ch).cwiseAbs().maxCoeff() != 0.0)
                throw DataError("scenario: group " + std::to_string(g) + " has nonzero coefficients on irrelevant channel "
                                + std::to_string(ch));
    }
    std::set<std::string> names;
    for (const auto& [name, group] : assignment) {
        if (group < 0 || group >= static_cast<int>(group_truths.size()))
            throw DataError("scenario: condition '" + name + "' maps to invalid group " + std::to_string(group));
        if (!names.insert(name).second)
            throw DataError("scenario: duplicate condition '" + name + "'");
    }
}

namespace {

ConditionDataset simulate(const SyntheticScenario& scn, const std::string& name, const ParameterVector& truth,
                          std::uint64_t input_seed, std::uint64_t noise_seed)
{
    const Index L = scn.samples_per_condition;
    const Index J = scn.structure.channels;
    const Index n = scn.structure.taps;

    std::mt19937_64 input_rng(input_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(L, J);
    const double a = scn.ar_coefficient;
    const double innovation_scale = std::sqrt(1.0 - a * a);
    for (Index j = 0; j < J; ++j) {
        double prev = 0.0;
        for (Index t = 0; t < L; ++t) {
            const double e = normal(input_rng);
            const double v = (t == 0 || a == 0.0) ? e : a * prev + innovation_scale * e;
            x(t, j) = v;
            prev = v;
        }
    }

    // Zero pre-history before t = 0.
    Vector y = Vector::Zero(L);
    const auto& theta = truth.values();
    for (Index t = 0; t < L; ++t) {
        double acc = 0.0;
        for (Index j = 0; j < J; ++j)
            for (Index lag = 0; lag < n && lag <= t; ++lag)
                acc += theta(j * n + lag) * x(t - lag, j);
        y(t) = acc;
    }

    if (scn.noise_sigma > 0.0) {
        std::mt19937_64 noise_rng(noise_seed);
        for (Index t = 0; t < L; ++t)
            y(t) += scn.noise_sigma * normal(noise_rng);
    }

    std::vector<std::string> channel_names;
    for (Index j = 0; j < J; ++j)
        channel_names.push_back("s" + std::to_string(j + 1));
    return make_dataset(name, std::move(x), std::move(y), std::move(channel_names), "y");
}

} // namespace

std::vector<ConditionDataset> generate_synthetic(const SyntheticScenario& scn)
{
    scn.validate();
    std::vector<ConditionDataset> out;
    out.reserve(scn.assignment.size() * 2);
    for (std::size_t c = 0; c < scn.assignment.size(); ++c) {
        const auto& [condition, group] = scn.assignment[c];
        const auto& truth = scn.group_truths[static_cast<std::size_t>(group)];
        for (int role = 1; role <= 2; ++role) {
            const std::uint64_t stream = 4 * c + 2 * static_cast<std::uint64_t>(role - 1);
            out.push_back(simulate(scn, condition + "-" + std::to_string(role), truth,
                                   split_seed(scn.seed, stream), split_seed(scn.seed, stream + 1)));
        }
    }
    return out;
}

std::vector<ParameterVector> random_group_truths(const ModelStructure& structure, int groups,
                                                 const std::set<int>& irrelevant_channels, double scale,
                                                 std::uint64_t seed)
{
    structure.validate();
    if (groups < 1)
        throw DataError("scenario: need at least one group");
    std::mt19937_64 rng(split_seed(seed, 0xC0FFEE));
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<ParameterVector> truths;
    for (int g = 0; g < groups; ++g) {
        ParameterVector theta(structure);
        for (Index i = 0; i < theta.size(); ++i)
            theta.values()(i) = normal(rng);
        for (int ch : irrelevant_channels)
            theta.set_block(ch, Vector::Zero(structure.taps));
        truths.push_back(std::move(theta));
    }
    return truths;
}

SyntheticScenario scenario_from_json(const nlohmann::json& config)
{
    try {
        SyntheticScenario scn;
        scn.structure.taps = config.at("taps").get<int>();
        scn.structure.channels = config.at("channels").get<int>();
        scn.structure.validate();
        scn.noise_sigma = config.value("noise_sigma", 0.0);
        scn.samples_per_condition = config.at("samples_per_condition").get<int>();
        scn.seed = config.value("seed", std::uint64_t{0});
        scn.ar_coefficient = config.value("ar_coefficient", 0.0);
        for (int ch : config.value("irrelevant_channels", std::vector<int>{}))
            scn.irrelevant_channels.insert(ch);
        for (int ch : scn.irrelevant_channels)
            if (ch < 0 || ch >= scn.structure.channels)
                throw DataError("scenario: irrelevant channel " + std::to_string(ch) + " out of range");

        if (config.contains("group_truths")) {
            for (const auto& row : config.at("group_truths")) {
                const auto values = row.get<std::vector<double>>();
                scn.group_truths.emplace_back(scn.structure,
                                              Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())));
            }
        } else if (config.contains("groups")) {
            scn.group_truths = random_group_truths(scn.structure, config.at("groups").get<int>(),
                                                   scn.irrelevant_channels, config.value("truth_scale", 1.0), scn.seed);
        } else {
            throw DataError("scenario: need 'group_truths' or 'groups'");
        }

        for (const auto& c : config.at("conditions"))
            scn.assignment.emplace_back(c.at("name").get<std::string>(), c.at("group").get<int>());
        scn.validate();
        return scn;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("scenario config: ") + e.what());
    }
}

nlohmann::json scenario_to_json(const SyntheticScenario& scn)
{
    nlohmann::json truths = nlohmann::json::array();
    for (const auto& t : scn.group_truths)
        truths.push_back(std::vector<double>(t.values().begin(), t.values().end()));
    nlohmann::json conditions = nlohmann::json::array();
    for (const auto& [name, group] : scn.assignment)
        conditions.push_back({{"name", name}, {"group", group}});
    return {{"taps", scn.structure.taps},
            {"channels", scn.structure.channels},
            {"noise_sigma", scn.noise_sigma},
            {"samples_per_condition", scn.samples_per_condition},
            {"seed", scn.seed},
            {"ar_coefficient", scn.ar_coefficient},
            {"irrelevant_channels", std::vector<int>(scn.irrelevant_channels.begin(), scn.irrelevant_channels.end())},
            {"group_truths", truths},
            {"conditions", conditions}};
}

} // namespace fusedfir
