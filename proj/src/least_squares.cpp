#include "fusedfir/least_squares.hpp"

#include "fusedfir/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace fusedfir {

LsFit ls_fit(const RegressionProblem& p)
{
    p.validate();
    const Index n_theta = p.phi.cols();

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(p.phi);
    const Vector theta = cod.solve(p.y);

    LsFit fit;
    fit.theta = ParameterVector(p.structure, theta);
    fit.residual_norm_sq = (p.y - p.phi * theta).squaredNorm();

    const Matrix gram = p.phi.transpose() * p.phi;
    if (n_theta <= kGramEigenLimit) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
        const auto& ev = eig.eigenvalues();
        fit.gram_min_eig = ev(0);
        const double scale = std::max(ev(ev.size() - 1), 1.0);
        fit.gram_positive_definite = cod.rank() == n_theta
            && ev(0) > static_cast<double>(n_theta) * std::numeric_limits<double>::epsilon() * scale;
    } else {
        fit.gram_min_eig = std::numeric_limits<double>::quiet_NaN();
        Eigen::LLT<Matrix> llt(gram);
        fit.gram_positive_definite = cod.rank() == n_theta && llt.info() == Eigen::Success;
    }
    return fit;
}

LsFit pooled_ls_fit(std::span<const RegressionProblem> problems)
{
    return ls_fit(stack_problems(problems));
}

} // namespace fusedfir
