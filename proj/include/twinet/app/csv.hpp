#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace twinet::app {

using Cell = std::variant<std::int64_t, double, std::string>;
using Row = std::vector<Cell>;

enum class ColumnType { Int, Real, Text };

struct Column {
    std::string name;
    ColumnType type = ColumnType::Real;
    int precision = 6;        // digits after the point for Real
    bool wall_clock = false;  // excluded from reproducibility comparisons
};

using Schema = std::vector<Column>;

struct Table {
    Schema schema;
    std::vector<Row> rows;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws CsvError on the first row whose arity or cell types disagree with the schema.
void check_rows(const std::vector<Row>& rows, const Schema& schema);

/// Header line plus one line per row, each '\n'-terminated.
std::string render_csv(const std::vector<Row>& rows, const Schema& schema);

/// Validates everything before touching the file. Throws CsvError on
/// mismatch or I/O failure.
void write_metrics_csv(const std::vector<Row>& rows, const Schema& schema, const std::filesystem::path& path);
inline void write_metrics_csv(const Table& t, const std::filesystem::path& path) {
    write_metrics_csv(t.rows, t.schema, path);
}

/// Same table with the wall-clock columns removed.
Table without_wall_clock(const Table& t);

}  // namespace twinet::app
