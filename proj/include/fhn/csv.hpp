#pragma once

#include <string>
#include <vector>

namespace fhn {

// Shortest decimal form that round-trips a double exactly (17 significant
// digits maximum, plain "nan"/"inf" spellings).
std::string format_double(double x);

// Minimal comma-separated table, no quoting (none of our fields contain
// commas). Used for emitted study tables so that parse -> serialize is the
// identity.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
    void write(const std::string& path) const;
    static CsvTable read(const std::string& path);
    static CsvTable parse(const std::string& text);

    int column(const std::string& name) const;  // -1 if absent
};

} // namespace fhn
