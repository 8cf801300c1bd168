#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dbs {

/// RFC-4180 style writer: header row, '.' decimal separator, CRLF-free
/// ("\n") line ends, fields quoted only when they need it.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header);

    CsvWriter& field(std::string_view s);
    CsvWriter& field(const char* s) { return field(std::string_view(s)); }
    CsvWriter& field(const std::string& s) { return field(std::string_view(s)); }
    CsvWriter& field(double v);
    CsvWriter& field(long long v);
    CsvWriter& field(unsigned long long v);
    CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(unsigned long v) { return field(static_cast<unsigned long long>(v)); }
    CsvWriter& field(bool v) { return field(static_cast<long long>(v ? 1 : 0)); }
    void end_row();

    const std::string& str() const { return out_; }

private:
    void sep();
    std::string out_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
};

/// Shortest round-trip decimal representation of v.
std::string format_double(double v);

/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace dbs
