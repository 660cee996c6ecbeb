#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace heps {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// %.12g, the precision used by every CSV the toolkit emits.
std::string format_number(double v);

/// Minimal CSV table: one header row, comma separated, no quoting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    std::string to_string() const;
    static CsvTable parse(std::string_view text);
};

}  // namespace heps
