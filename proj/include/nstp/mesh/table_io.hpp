#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace nstp {

/// Column table written as CSV with a header row. Values use the shortest
/// text that reads back as the same double.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> values);
    std::size_t rows() const;
};

void write_csv(const std::filesystem::path& path, const Table& table);
std::string format_double(double x);

}  // namespace nstp
