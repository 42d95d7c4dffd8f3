#include "supou/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace supou {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string to_csv(const std::vector<std::string>& header, const Matrix& rows) {
    if (!header.empty() && static_cast<Eigen::Index>(header.size()) != rows.cols() && rows.rows() > 0)
        throw DomainError("CSV header does not match the column count");
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ',';
        out += header[j];
    }
    out += '\n';
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            if (j) out += ',';
            out += format_double(rows(i, j));
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& rows) {
    write_text(path, to_csv(header, rows));
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
    if (s == "nan") {
        out = std::nan("");
        return true;
    }
    if (s == "inf" || s == "-inf") {
        out = s[0] == '-' ? -HUGE_VAL : HUGE_VAL;
        return true;
    }
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && first != last;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (t.header.empty()) {
            for (auto& c : cells) t.header.push_back(trim(c));
            continue;
        }
        if (cells.size() != t.header.size())
            throw IoError("CSV line " + std::to_string(line_no) + ": expected " +
                          std::to_string(t.header.size()) + " columns, found " + std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (!parse_number(trim(cells[j]), row[j]))
                throw IoError("CSV line " + std::to_string(line_no) + ", column " + std::to_string(j + 1) + " (" +
                              t.header[j] + "): not a number: '" + trim(cells[j]) + "'");
        }
        rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw IoError("CSV is empty");
    t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) t.data(i, j) = rows[i][j];
    return t;
}

CsvTable read_csv(const std::string& path) {
    try {
        return parse_csv(read_text(path));
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json to_json(const Vector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(number(v(i)));
    return j;
}

Json to_json(const Matrix& m) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
        j.push_back(std::move(row));
    }
    return j;
}

Vector vector_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(where + "[" + std::to_string(i) + "]: expected a number");
        v(i) = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    Matrix m;
    for (std::size_t i = 0; i < rows; ++i) {
        const Vector r = vector_from_json(j[i], where + "[" + std::to_string(i) + "]");
        if (i == 0) m.resize(rows, r.size());
        if (r.size() != m.cols()) throw ConfigError(where + ": rows have different lengths");
        m.row(i) = r.transpose();
    }
    return m;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace supou
