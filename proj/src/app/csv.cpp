#include "twinet/app/csv.hpp"

#include <fmt/format.h>

#include <fstream>

namespace twinet::app {

namespace {

bool fits(const Cell& c, ColumnType t) {
    switch (t) {
        case ColumnType::Int: return std::holds_alternative<std::int64_t>(c);
        case ColumnType::Real: return std::holds_alternative<double>(c);
        case ColumnType::Text: return std::holds_alternative<std::string>(c);
    }
    return false;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

std::string format_cell(const Cell& c, const Column& col) {
    if (auto* i = std::get_if<std::int64_t>(&c)) return fmt::format("{}", *i);
    if (auto* d = std::get_if<double>(&c)) {
        const std::string s = fmt::format("{:.{}f}", *d, col.precision);
        // "-0.000" and "0.000" must not differ between runs
        return s.find_first_not_of("-0.") == std::string::npos ? s.substr(s.front() == '-' ? 1 : 0) : s;
    }
    return quote(std::get<std::string>(c));
}

}  // namespace

void check_rows(const std::vector<Row>& rows, const Schema& schema) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != schema.size()) {
            throw CsvError(fmt::format("row {} has {} cells, schema has {}", r, rows[r].size(), schema.size()));
        }
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (!fits(rows[r][c], schema[c].type)) {
                throw CsvError(fmt::format("row {} column '{}' has the wrong type", r, schema[c].name));
            }
        }
    }
}

std::string render_csv(const std::vector<Row>& rows, const Schema& schema) {
    check_rows(rows, schema);
    std::string out;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (c) out += ',';
        out += quote(schema[c].name);
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (c) out += ',';
            out += format_cell(row[c], schema[c]);
        }
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const std::vector<Row>& rows, const Schema& schema, const std::filesystem::path& path) {
    const std::string text = render_csv(rows, schema);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CsvError(fmt::format("cannot open '{}' for writing", path.string()));
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    f.close();
    if (!f) throw CsvError(fmt::format("failed writing '{}'", path.string()));
}

Table without_wall_clock(const Table& t) {
    Table out;
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < t.schema.size(); ++c) {
        if (!t.schema[c].wall_clock) {
            keep.push_back(c);
            out.schema.push_back(t.schema[c]);
        }
    }
    for (const auto& row : t.rows) {
        Row r;
        for (auto c : keep) r.push_back(row.at(c));
        out.rows.push_back(std::move(r));
    }
    return out;
}

}  // namespace twinet::app
