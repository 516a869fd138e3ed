#include "fusedfir/dataset.hpp"

#include "fusedfir/error.hpp"
#include "fusedfir/format.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace fusedfir {
namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable parse_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open dataset '" + path.string() + "'");

    const std::string where = path.filename().string();
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF"))
            view.remove_prefix(3);
        if (trim(view).empty())
            continue;
        const auto cells = split_csv_line(view);
        if (!have_header) {
            std::set<std::string> seen;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (cells[c].empty())
                    throw DataError(where + ": empty header name in column " + std::to_string(c + 1));
                if (!seen.insert(std::string(cells[c])).second)
                    throw DataError(where + ": duplicate header '" + std::string(cells[c]) + "' in column "
                                    + std::to_string(c + 1));
                table.header.emplace_back(cells[c]);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw DataError(where + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size())
                            + " cells, header has " + std::to_string(table.header.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto cell = cells[c];
            const auto* first = cell.data();
            const auto* last = cell.data() + cell.size();
            if (!cell.empty() && *first == '+')
                ++first;
            const auto [ptr, ec] = std::from_chars(first, last, row[c]);
            if (cell.empty() || ec != std::errc() || ptr != last)
                throw DataError(where + ": non-numeric cell '" + std::string(cell) + "' at row "
                                + std::to_string(line_no) + ", column '" + table.header[c] + "'");
            if (!std::isfinite(row[c]))
                throw DataError(where + ": non-finite cell '" + std::string(cell) + "' at row "
                                + std::to_string(line_no) + ", column '" + table.header[c] + "'");
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header)
        throw DataError(where + ": empty file (header row required)");
    if (table.header.front() != "t")
        throw DataError(where + ": first header column must be 't', got '" + table.header.front() + "'");
    if (table.header.size() < 3)
        throw DataError(where + ": need at least columns t, one input and one output");
    if (table.rows.empty())
        throw DataError(where + ": no data rows");
    return table;
}

std::size_t column_of(const CsvTable& table, const std::string& name, const std::string& where)
{
    for (std::size_t c = 1; c < table.header.size(); ++c)
        if (table.header[c] == name)
            return c;
    throw DataError(where + ": missing header '" + name + "'");
}

ConditionDataset assemble(const CsvTable& table, std::string name, const std::vector<std::size_t>& input_cols,
                          std::size_t output_col)
{
    const auto L = static_cast<Index>(table.rows.size());
    Matrix inputs(L, static_cast<Index>(input_cols.size()));
    Vector output(L);
    for (Index r = 0; r < L; ++r) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < input_cols.size(); ++j)
            inputs(r, static_cast<Index>(j)) = row[input_cols[j]];
        output(r) = row[output_col];
    }
    std::vector<std::string> channel_names;
    for (auto c : input_cols)
        channel_names.push_back(table.header[c]);
    return make_dataset(std::move(name), std::move(inputs), std::move(output), std::move(channel_names),
                        table.header[output_col]);
}

} // namespace

std::optional<DatasetName> parse_dataset_name(std::string_view name)
{
    static const std::regex pattern(R"(^([A-Za-z]+)([0-9]+)-([0-9]+)$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(name.begin(), name.end(), m, pattern))
        return std::nullopt;
    DatasetName parsed;
    parsed.mode = m[1].str();
    parsed.speed = std::stoi(m[2].str());
    parsed.index = std::stoi(m[3].str());
    parsed.condition = m[1].str() + m[2].str();
    return parsed;
}

std::string ConditionDataset::condition() const
{
    if (auto parsed = parse_dataset_name(name))
        return parsed->condition;
    return name;
}

void ConditionDataset::validate() const
{
    if (inputs.cols() < 1)
        throw DataError("dataset '" + name + "': needs at least one input channel");
    if (output.size() < 1)
        throw DataError("dataset '" + name + "': no samples");
    if (inputs.rows() != output.size())
        throw DataError("dataset '" + name + "': inputs have " + std::to_string(inputs.rows())
                        + " rows but output has " + std::to_string(output.size()));
    if (!inputs.allFinite() || !output.allFinite())
        throw DataError("dataset '" + name + "': non-finite sample");
    if (!channel_names.empty() && channel_names.size() != static_cast<std::size_t>(inputs.cols()))
        throw DataError("dataset '" + name + "': channel name count does not match input columns");
}

ConditionDataset make_dataset(std::string name, Matrix inputs, Vector output,
                              std::vector<std::string> channel_names, std::string output_name)
{
    ConditionDataset ds;
    ds.name = std::move(name);
    ds.inputs = std::move(inputs);
    ds.output = std::move(output);
    if (channel_names.empty())
        for (Index j = 0; j < ds.inputs.cols(); ++j)
            channel_names.push_back("s" + std::to_string(j + 1));
    ds.channel_names = std::move(channel_names);
    ds.output_name = std::move(output_name);
    ds.name_warning = !parse_dataset_name(ds.name).has_value();
    ds.validate();
    return ds;
}

std::string_view to_string(DatasetRole role)
{
    switch (role) {
    case DatasetRole::estimation: return "estimation";
    case DatasetRole::validation: return "validation";
    case DatasetRole::evaluation: return "evaluation";
    }
    return "estimation";
}

DatasetRole parse_role(std::string_view text)
{
    if (text == "estimation") return DatasetRole::estimation;
    if (text == "validation") return DatasetRole::validation;
    if (text == "evaluation") return DatasetRole::evaluation;
    throw DataError("unknown dataset role '" + std::string(text) + "'");
}

Manifest load_manifest(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw DataError("manifest '" + path.string() + "' does not exist");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest '" + path.string() + "': " + e.what());
    }
    if (!doc.is_array())
        throw DataError("manifest '" + path.string() + "' must be a JSON array");

    Manifest manifest;
    std::set<std::string> names;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        const auto where = "manifest entry " + std::to_string(i);
        try {
            ManifestEntry entry;
            entry.name = item.at("name").get<std::string>();
            entry.file = item.at("file").get<std::string>();
            entry.role = parse_role(item.at("role").get<std::string>());
            entry.channels = item.at("channels").get<std::vector<std::string>>();
            entry.output = item.at("output").get<std::string>();
            if (entry.channels.empty())
                throw DataError(where + ": no channels listed");
            if (!names.insert(entry.name).second)
                throw DataError(where + ": duplicate dataset name '" + entry.name + "'");
            manifest.push_back(std::move(entry));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest)
{
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : manifest) {
        doc.push_back({{"name", e.name},
                       {"file", e.file.generic_string()},
                       {"role", std::string(to_string(e.role))},
                       {"channels", e.channels},
                       {"output", e.output}});
    }
    write_text_file(path, doc.dump(2) + "\n");
}

ConditionDataset load_dataset(const std::filesystem::path& base_dir, const ManifestEntry& entry)
{
    const auto path = entry.file.is_absolute() ? entry.file : base_dir / entry.file;
    const auto table = parse_csv(path);
    const auto where = path.filename().string();
    std::vector<std::size_t> input_cols;
    for (const auto& ch : entry.channels)
        input_cols.push_back(column_of(table, ch, where));
    return assemble(table, entry.name, input_cols, column_of(table, entry.output, where));
}

ConditionDataset read_dataset_csv(const std::filesystem::path& path, std::string name)
{
    const auto table = parse_csv(path);
    std::vector<std::size_t> input_cols;
    for (std::size_t c = 1; c + 1 < table.header.size(); ++c)
        input_cols.push_back(c);
    return assemble(table, std::move(name), input_cols, table.header.size() - 1);
}

void write_dataset_csv(const std::filesystem::path& path, const ConditionDataset& ds)
{
    ds.validate();
    std::string out = "t";
    for (const auto& ch : ds.channel_names)
        out += "," + ch;
    out += "," + ds.output_name + "\n";
    for (Index r = 0; r < ds.sample_count(); ++r) {
        out += std::to_string(r + 1);
        for (Index j = 0; j < ds.inputs.cols(); ++j)
            out += "," + format_double(ds.inputs(r, j));
        out += "," + format_double(ds.output(r)) + "\n";
    }
    write_text_file(path, out);
}

std::vector<ConditionDataset> load_role(const std::filesystem::path& manifest_path, const Manifest& manifest,
                                        DatasetRole role)
{
    const auto base = manifest_path.parent_path();
    std::vector<ConditionDataset> out;
    for (const auto& entry : manifest)
        if (entry.role == role)
            out.push_back(load_dataset(base, entry));
    return out;
}

} // namespace fusedfir
