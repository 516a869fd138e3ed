#include "fusedfir/types.hpp"

#include "fusedfir/error.hpp"
#include "fusedfir/format.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fusedfir {

void ModelStructure::validate() const
{
    if (taps < 1)
        throw DataError("model structure: taps must be >= 1, got " + std::to_string(taps));
    if (channels < 1)
        throw DataError("model structure: channels must be >= 1, got " + std::to_string(channels));
}

std::string to_string(const ModelStructure& s)
{
    return "taps=" + std::to_string(s.taps) + " channels=" + std::to_string(s.channels);
}

ParameterVector::ParameterVector(ModelStructure structure)
    : structure_(structure)
{
    structure_.validate();
    values_ = Vector::Zero(structure_.n_theta());
}

ParameterVector::ParameterVector(ModelStructure structure, Vector values)
    : structure_(structure), values_(std::move(values))
{
    structure_.validate();
    if (values_.size() != structure_.n_theta())
        throw DataError("parameter vector has " + std::to_string(values_.size())
                        + " entries, structure needs " + std::to_string(structure_.n_theta()));
}

int ParameterVector::checked_channel(int j) const
{
    if (j < 0 || j >= structure_.channels)
        throw DataError("channel index " + std::to_string(j) + " out of range [0, "
                        + std::to_string(structure_.channels) + ")");
    return j;
}

Vector ParameterVector::block(int j) const
{
    return values_.segment(static_cast<Index>(checked_channel(j)) * structure_.taps, structure_.taps);
}

void ParameterVector::set_block(int j, const Vector& coefficients)
{
    if (coefficients.size() != structure_.taps)
        throw DataError("block needs " + std::to_string(structure_.taps) + " coefficients");
    values_.segment(static_cast<Index>(checked_channel(j)) * structure_.taps, structure_.taps) = coefficients;
}

Vector block(const Vector& values, const ModelStructure& s, int j)
{
    return ParameterVector(s, values).block(j);
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string format_double(double value)
{
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(len));
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw DataError("write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace fusedfir
