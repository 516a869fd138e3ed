#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fusedfir {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// FIR model layout: `taps` lags (0..taps-1) for each of `channels` inputs.
struct ModelStructure {
    int taps = 1;
    int channels = 1;

    int n_theta() const noexcept { return taps * channels; }
    void validate() const;

    friend bool operator==(const ModelStructure&, const ModelStructure&) = default;
};

std::string to_string(const ModelStructure& s);

/// Parameter vector of one condition, channel-major: all lags of channel 0,
/// then all lags of channel 1, and so on.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(ModelStructure structure);
    ParameterVector(ModelStructure structure, Vector values);

    const Vector& values() const noexcept { return values_; }
    Vector& values() noexcept { return values_; }
    const ModelStructure& structure() const noexcept { return structure_; }
    Index size() const noexcept { return values_.size(); }

    /// Coefficients of channel `j` (0-based), indices [j*taps, (j+1)*taps).
    Vector block(int j) const;
    void set_block(int j, const Vector& coefficients);

private:
    int checked_channel(int j) const;

    ModelStructure structure_{};
    Vector values_{};
};

/// Coefficients of channel `j` (0-based) of a raw vector laid out per `s`.
Vector block(const Vector& values, const ModelStructure& s, int j);

/// SplitMix64 step, used to derive independent per-stage seeds from one seed.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

} // namespace fusedfir
