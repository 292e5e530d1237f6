#pragma once

#include <string>
#include <vector>

namespace jema::csv {

using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;

    int column(const std::string& name) const;  // -1 if absent
};

// Minimal RFC-4180 subset: comma-separated, double-quote escaping.
Table read_file(const std::string& path);
void write_file(const std::string& path, const Table& table);

std::string escape_field(const std::string& field);
Row parse_line(const std::string& line);

}  // namespace jema::csv
