#include "coresat/csv.hpp"

#include "coresat/common.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

namespace coresat::csv {

std::vector<std::string> split_record(std::string_view line)
{
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

Table read_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#')
            continue;
        auto fields = split_record(stripped);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
        } else {
            table.rows.emplace_back(line_no, std::move(fields));
        }
    }
    if (!have_header)
        throw Error("'" + path.string() + "' has no header row");
    return table;
}

std::size_t column_index(const Table& table, std::string_view name,
                         const std::filesystem::path& source)
{
    const std::string wanted = to_lower(name);
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (to_lower(table.header[i]) == wanted)
            return i;
    throw Error("'" + source.string() + "' has no column '" + std::string(name) + "'");
}

std::string escape(std::string_view field)
{
    if (field.find_first_of(",\"\n") == std::string_view::npos)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

double parse_number(std::string_view text)
{
    const std::string s = trim(text);
    if (s.empty())
        throw Error("empty numeric field");
    char* end = nullptr;
    const double value = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(value))
        throw Error("malformed number '" + s + "'");
    return value;
}

} // namespace coresat::csv
