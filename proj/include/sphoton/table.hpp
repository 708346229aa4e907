#pragma once

// Row tables written as CSV (with a '# schema:' comment line) or as a JSON
// array of records. Files are written to a temporary sibling and renamed.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace sphoton {

using Cell = std::variant<double, long long, std::string>;

enum class TableFormat { csv, json };

class Table {
  public:
    Table(std::string schema, std::vector<std::string> columns);

    void add_row(std::vector<Cell> row);

    const std::string &schema() const noexcept { return schema_; }
    const std::vector<std::string> &columns() const noexcept { return columns_; }
    const std::vector<std::vector<Cell>> &rows() const noexcept { return rows_; }

    std::string to_csv() const;
    std::string to_json() const;

  private:
    std::string schema_;
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

/// Shortest text that round-trips the double (printf %.17g).
std::string format_double(double x);

TableFormat parse_format(const std::string &name);

/// Atomic write. Throws IoError naming the path on failure.
void write_text_atomic(const std::filesystem::path &path, const std::string &text);
void write_table(const std::filesystem::path &path, const Table &table, TableFormat format);

} // namespace sphoton
