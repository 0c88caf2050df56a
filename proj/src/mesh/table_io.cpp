#include "nstp/mesh/table_io.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace nstp {

void Table::add(std::string name, std::vector<double> values) {
    if (!columns.empty() && values.size() != columns.front().size())
        throw std::invalid_argument("Table: column '" + name + "' has the wrong length");
    header.push_back(std::move(name));
    columns.push_back(std::move(values));
}

std::size_t Table::rows() const { return columns.empty() ? 0 : columns.front().size(); }

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const Table& table) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    for (std::size_t c = 0; c < table.header.size(); ++c) os << (c ? "," : "") << table.header[c];
    os << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            os << (c ? "," : "") << format_double(table.columns[c][r]);
        os << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace nstp
