#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lfp::detail {

/// Shortest decimal string that reads back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// RFC 4180 field quoting.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

/// Writes header + rows with CRLF line endings; empty optionals become empty fields.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), columns_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << csv_field(header[i]);
        os_ << "\r\n";
    }
    void row(const std::vector<std::optional<double>>& values) {
        for (std::size_t i = 0; i < columns_; ++i) {
            if (i) os_ << ',';
            if (i < values.size() && values[i]) os_ << format_double(*values[i]);
        }
        os_ << "\r\n";
    }

private:
    std::ostream& os_;
    std::size_t columns_;
};

}  // namespace lfp::detail
