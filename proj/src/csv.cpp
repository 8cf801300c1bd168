#include "dbs/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace dbs {

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
    for (const auto& h : header) field(h);
    end_row();
}

void CsvWriter::sep() {
    if (in_row_ == columns_) throw std::logic_error("too many CSV fields in row");
    if (in_row_++ > 0) out_ += ',';
}

CsvWriter& CsvWriter::field(std::string_view s) {
    sep();
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
        out_ += s;
        return *this;
    }
    out_ += '"';
    for (char c : s) {
        if (c == '"') out_ += '"';
        out_ += c;
    }
    out_ += '"';
    return *this;
}

CsvWriter& CsvWriter::field(double v) {
    sep();
    out_ += format_double(v);
    return *this;
}

CsvWriter& CsvWriter::field(long long v) {
    sep();
    out_ += std::to_string(v);
    return *this;
}

CsvWriter& CsvWriter::field(unsigned long long v) {
    sep();
    out_ += std::to_string(v);
    return *this;
}

void CsvWriter::end_row() {
    if (in_row_ != columns_) throw std::logic_error("CSV row has the wrong number of fields");
    out_ += '\n';
    in_row_ = 0;
}

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace dbs
