#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

namespace tractosurv {

// Shortest round-trip decimal form via std::to_chars: locale-independent and
// stable across runs, which the byte-identical output contract relies on.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string join_csv(const std::vector<std::string>& cells) {
    std::string out;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

// Splits one CSV line; no quoting support, the formats here never emit commas
// inside cells.
std::vector<std::string> split_csv_line(const std::string& line);

// Whole-file helpers. Writes go through a temp file + rename so a crashed run
// never leaves a half-written artifact behind.
std::string read_text_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);
std::vector<uint8_t> read_binary_file(const std::string& path);
void write_binary_atomic(const std::string& path, const void* data, size_t size);

double parse_double(const std::string& s, const std::string& what);
long long parse_int(const std::string& s, const std::string& what);

} // namespace tractosurv
