#ifndef EPILATENT_CSV_HPP
#define EPILATENT_CSV_HPP

#include <string>
#include <vector>

namespace epilatent {

/// Minimal comma-separated table with a mandatory header row. Fields may not
/// contain commas; UTF-8 passes through untouched. Numeric conversion errors
/// report file, line, and column.
class CsvTable {
public:
    static CsvTable read_file(const std::string& path);
    static CsvTable from_string(const std::string& text, const std::string& origin = "<string>");

    CsvTable() = default;
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row);
    void write_file(const std::string& path) const;
    std::string to_string() const;

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }

    /// Column index for `name`; throws ParseError if absent.
    int column(const std::string& name) const;
    /// -1 if absent.
    int column_if_present(const std::string& name) const;

    const std::string& cell(std::size_t row, int col) const;
    long long cell_int(std::size_t row, int col) const;
    double cell_double(std::size_t row, int col) const;

    /// 1-based data line number in the source file (for error messages).
    std::size_t source_line(std::size_t row) const { return row + 2; }
    const std::string& origin() const { return origin_; }

private:
    std::string origin_ = "<memory>";
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Atomic file write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string format_double(double x);

}  // namespace epilatent

#endif
