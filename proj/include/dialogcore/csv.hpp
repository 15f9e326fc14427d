#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dialogcore::csv {

using Row = std::vector<std::string>;

// RFC 4180 style: fields containing comma, quote, CR or LF are quoted.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

struct Table {
    Row header;
    std::vector<Row> rows;

    // Index of a header column; throws ValidationError when absent.
    std::size_t column(std::string_view name) const;
};

// Reads a table with a header line. Every row must have the header's arity.
Table read(std::istream& in, std::string_view source_name);
Table read_file(const std::string& path);

}  // namespace dialogcore::csv
