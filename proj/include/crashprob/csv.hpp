#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crashprob {

/// Raised on malformed or contract-violating input; maps to CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical procedure cannot proceed; maps to CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

std::string format_int(std::int64_t v);

/// Strict comma-separated reader: one mandatory header row, no quoting,
/// every data row must have exactly the header's column count.
class CsvReader {
  public:
    CsvReader(std::string path, std::string content);

    static CsvReader from_file(const std::string& path);

    const std::vector<std::string>& header() const { return header_; }

    /// Column index for `name`; throws ValidationError if missing.
    std::size_t column(const std::string& name) const;

    /// Reads the next data row into `out`. Returns false at end of input.
    bool next_row(std::vector<std::string_view>& out);

    /// 1-based line number of the row most recently returned.
    std::size_t line() const { return line_; }

    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& column_name, const std::string& message) const;

    double parse_double(std::string_view field, const std::string& column_name) const;
    std::int64_t parse_int(std::string_view field, const std::string& column_name) const;
    std::optional<std::int64_t> parse_optional_int(std::string_view field,
                                                   const std::string& column_name) const;

  private:
    std::string path_;
    std::string content_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
    std::vector<std::string> header_;
};

/// Buffered line writer producing LF-terminated UTF-8 text.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(const std::vector<std::string>& fields);

    const std::string& str() const { return out_; }

  private:
    std::size_t n_columns_;
    std::string out_;
};

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace crashprob
