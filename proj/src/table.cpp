#include "sphoton/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>
#include <unistd.h>

#include "sphoton/errors.hpp"

namespace sphoton {

Table::Table(std::string schema, std::vector<std::string> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size())
        throw InvalidArgument("Table: row has " + std::to_string(row.size()) + " cells, expected " +
                              std::to_string(columns_.size()));
    rows_.push_back(std::move(row));
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string cell_text(const Cell &c) {
    if (const auto *d = std::get_if<double>(&c))
        return format_double(*d);
    if (const auto *i = std::get_if<long long>(&c))
        return std::to_string(*i);
    return std::get<std::string>(c);
}

} // namespace

std::string Table::to_csv() const {
    std::ostringstream os;
    os << "# schema: " << schema_ << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i)
        os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto &row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
    return os.str();
}

std::string Table::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto &row : rows_) {
        nlohmann::ordered_json rec = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            const Cell &c = row[i];
            if (const auto *d = std::get_if<double>(&c))
                rec[columns_[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json();
            else if (const auto *n = std::get_if<long long>(&c))
                rec[columns_[i]] = *n;
            else
                rec[columns_[i]] = std::get<std::string>(c);
        }
        arr.push_back(std::move(rec));
    }
    return arr.dump(1) + "\n";
}

TableFormat parse_format(const std::string &name) {
    if (name == "csv")
        return TableFormat::csv;
    if (name == "json")
        return TableFormat::json;
    throw InvalidArgument("unknown output format '" + name + "' (csv or json)");
}

void write_text_atomic(const std::filesystem::path &path, const std::string &text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
        out.flush();
        if (!out)
            throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

void write_table(const std::filesystem::path &path, const Table &table, TableFormat format) {
    write_text_atomic(path, format == TableFormat::csv ? table.to_csv() : table.to_json());
}

} // namespace sphoton
