#include "epilatent/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "epilatent/errors.hpp"

namespace epilatent {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

CsvTable CsvTable::read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

CsvTable CsvTable::from_string(const std::string& text, const std::string& origin) {
    CsvTable t;
    t.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            t.header_ = std::move(fields);
            have_header = true;
        } else {
            if (fields.size() != t.header_.size())
                throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(t.header_.size()) + " fields, got " +
                                 std::to_string(fields.size()));
            t.rows_.push_back(std::move(fields));
        }
    }
    if (!have_header) throw ParseError(origin + ": missing header row");
    return t;
}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw ShapeError("CsvTable::add_row: field count mismatch");
    rows_.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
    return out.str();
}

void CsvTable::write_file(const std::string& path) const { write_file_atomic(path, to_string()); }

int CsvTable::column(const std::string& name) const {
    const int c = column_if_present(name);
    if (c < 0) throw ParseError(origin_ + ": missing required column '" + name + "'");
    return c;
}

int CsvTable::column_if_present(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return static_cast<int>(i);
    return -1;
}

const std::string& CsvTable::cell(std::size_t row, int col) const { return rows_[row][col]; }

long long CsvTable::cell_int(std::size_t row, int col) const {
    const std::string& s = rows_[row][col];
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0')
        throw ParseError(origin_ + ":" + std::to_string(source_line(row)) + ": '" + s +
                         "' is not an integer (column " + header_[col] + ")");
    return v;
}

double CsvTable::cell_double(std::size_t row, int col) const {
    const std::string& s = rows_[row][col];
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end == s.c_str() || *end != '\0')
        throw ParseError(origin_ + ":" + std::to_string(source_line(row)) + ": '" + s +
                         "' is not a number (column " + header_[col] + ")");
    return v;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open for writing: " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw ParseError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace epilatent
