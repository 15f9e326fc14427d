#include "dialogcore/csv.hpp"

#include <fstream>

#include "dialogcore/error.hpp"

namespace dialogcore::csv {

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << escape(row[i]);
    }
    out << '\n';
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ValidationError("CSV is missing column '" + std::string(name) + "'");
}

namespace {

// Reads one logical record; quoted fields may span lines. False at EOF.
bool read_record(std::istream& in, Row& row, std::size_t& line_no, std::string_view source) {
    row.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            ++line_no;
            row.push_back(std::move(field));
            return true;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (in_quotes) throw ValidationError(std::string(source) + ": unterminated quoted field");
    if (!any) return false;
    row.push_back(std::move(field));
    return true;
}

}  // namespace

Table read(std::istream& in, std::string_view source_name) {
    Table table;
    std::size_t line_no = 0;
    if (!read_record(in, table.header, line_no, source_name))
        throw ValidationError(std::string(source_name) + ": empty CSV (no header)");
    Row row;
    while (read_record(in, row, line_no, source_name)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != table.header.size())
            throw ValidationError(std::string(source_name) + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, got " + std::to_string(row.size()));
        table.rows.push_back(row);
    }
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open CSV file '" + path + "'");
    return read(in, path);
}

}  // namespace dialogcore::csv
