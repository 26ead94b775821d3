#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace coresat::csv {

/// Splits one CSV record on commas. Double-quoted fields may contain commas.
std::vector<std::string> split_record(std::string_view line);

struct Table {
    std::vector<std::string> header;
    /// Data rows with their 1-based line numbers in the source file.
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

/// Reads a headed CSV file, skipping blank lines and lines starting with '#'.
Table read_file(const std::filesystem::path& path);

/// Index of a header column, matched case-insensitively; throws Error when absent.
std::size_t column_index(const Table& table, std::string_view name,
                         const std::filesystem::path& source);

/// Quotes a field when it contains a comma, a quote or a newline.
std::string escape(std::string_view field);

double parse_number(std::string_view text);

} // namespace coresat::csv
