#include "fusedfir/regressor.hpp"

#include "fusedfir/error.hpp"

namespace fusedfir {

void RegressionProblem::validate() const
{
    structure.validate();
    if (phi.rows() != y.size())
        throw DataError("problem '" + condition_name + "': Phi has " + std::to_string(phi.rows())
                        + " rows but Y has " + std::to_string(y.size()));
    if (phi.cols() != structure.n_theta())
        throw DataError("problem '" + condition_name + "': Phi has " + std::to_string(phi.cols())
                        + " columns, structure needs " + std::to_string(structure.n_theta()));
    if (y.size() < 1)
        throw DataError("problem '" + condition_name + "': no rows");
    if (!phi.allFinite() || !y.allFinite())
        throw DataError("problem '" + condition_name + "': non-finite entries");
}

RegressionProblem build_regressor(const ConditionDataset& ds, const ModelStructure& structure)
{
    structure.validate();
    ds.validate();
    if (ds.channels() != structure.channels)
        throw DataError("dataset '" + ds.name + "' has " + std::to_string(ds.channels())
                        + " channels, structure expects " + std::to_string(structure.channels));
    const Index n = structure.taps;
    const Index L = ds.sample_count();
    if (L < n)
        throw DataError("dataset '" + ds.name + "': series shorter than tap count (" + std::to_string(L)
                        + " < " + std::to_string(n) + ")");

    const Index M = L - n + 1;
    RegressionProblem p;
    p.structure = structure;
    p.condition_name = ds.condition();
    p.y = ds.output.tail(M);
    p.phi.resize(M, structure.n_theta());
    for (Index j = 0; j < structure.channels; ++j) {
        const auto x = ds.inputs.col(j);
        for (Index lag = 0; lag < n; ++lag)
            p.phi.col(j * n + lag) = x.segment(n - 1 - lag, M);
    }
    return p;
}

Vector predict(const RegressionProblem& p, const ParameterVector& theta)
{
    if (theta.size() != p.phi.cols())
        throw DataError("parameter length " + std::to_string(theta.size()) + " does not match Phi columns "
                        + std::to_string(p.phi.cols()));
    return p.phi * theta.values();
}

const ModelStructure& common_structure(std::span<const RegressionProblem> problems)
{
    if (problems.empty())
        throw DataError("no regression problems given");
    const auto& s = problems.front().structure;
    for (const auto& p : problems) {
        if (!(p.structure == s))
            throw DataError("structure mismatch: '" + p.condition_name + "' has " + to_string(p.structure)
                            + ", expected " + to_string(s));
        p.validate();
    }
    return s;
}

RegressionProblem stack_problems(std::span<const RegressionProblem> problems)
{
    const auto& s = common_structure(problems);
    Index total = 0;
    for (const auto& p : problems)
        total += p.rows();
    RegressionProblem stacked;
    stacked.structure = s;
    stacked.condition_name = "stacked";
    stacked.y.resize(total);
    stacked.phi.resize(total, s.n_theta());
    Index offset = 0;
    for (const auto& p : problems) {
        stacked.y.segment(offset, p.rows()) = p.y;
        stacked.phi.middleRows(offset, p.rows()) = p.phi;
        offset += p.rows();
    }
    return stacked;
}

} // namespace fusedfir
