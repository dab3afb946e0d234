#include "crashprob/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace crashprob {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_int(std::int64_t v) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

CsvReader::CsvReader(std::string path, std::string content)
    : path_(std::move(path)), content_(std::move(content)) {
    std::vector<std::string_view> row;
    if (!next_row(row)) {
        throw ValidationError(path_ + ": empty file, expected a header row");
    }
    for (auto f : row) header_.emplace_back(f);
}

CsvReader CsvReader::from_file(const std::string& path) {
    return CsvReader(path, read_file(path));
}

std::size_t CsvReader::column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) return i;
    }
    throw ValidationError(path_ + ": missing required column '" + name + "'");
}

bool CsvReader::next_row(std::vector<std::string_view>& out) {
    while (pos_ < content_.size()) {
        std::size_t eol = content_.find('\n', pos_);
        std::string_view line;
        if (eol == std::string::npos) {
            line = std::string_view(content_).substr(pos_);
            pos_ = content_.size();
        } else {
            line = std::string_view(content_).substr(pos_, eol - pos_);
            pos_ = eol + 1;
        }
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_;
        if (line.empty()) continue;
        out = split_fields(line);
        if (!header_.empty() && out.size() != header_.size()) {
            throw ValidationError(path_ + ":" + std::to_string(line_) + ": expected " +
                                  std::to_string(header_.size()) + " fields, got " +
                                  std::to_string(out.size()));
        }
        return true;
    }
    return false;
}

void CsvReader::fail(const std::string& column_name, const std::string& message) const {
    throw ValidationError(path_ + ":" + std::to_string(line_) + ": column '" + column_name +
                          "': " + message);
}

double CsvReader::parse_double(std::string_view field, const std::string& column_name) const {
    double value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        fail(column_name, "expected a number, got '" + std::string(field) + "'");
    }
    return value;
}

std::int64_t CsvReader::parse_int(std::string_view field, const std::string& column_name) const {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        fail(column_name, "expected an integer, got '" + std::string(field) + "'");
    }
    return value;
}

std::optional<std::int64_t> CsvReader::parse_optional_int(std::string_view field,
                                                          const std::string& column_name) const {
    if (field.empty()) return std::nullopt;
    return parse_int(field, column_name);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : n_columns_(header.size()) {
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    if (fields.size() != n_columns_) {
        throw std::logic_error("csv row width mismatch");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ += ',';
        out_ += fields[i];
    }
    out_ += '\n';
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace crashprob
