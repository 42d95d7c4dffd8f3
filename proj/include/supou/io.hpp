#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "supou/common.hpp"

namespace supou {

using Json = nlohmann::json;

/// Shortest round-trip text for a double: 17 significant digits, "nan"/"inf"/"-inf" otherwise.
std::string format_double(double x);

struct CsvTable {
    std::vector<std::string> header;
    Matrix data;
};

/// Comma-separated, header row, LF line endings.
std::string to_csv(const std::vector<std::string>& header, const Matrix& rows);
void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& rows);

/// Parses numeric CSV with a header row. Errors name the 1-based line and column.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

std::string read_text(const std::string& path);
/// Writes atomically enough for our purposes: creates parent directories, truncates.
void write_text(const std::string& path, const std::string& text);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
/// Non-finite numbers become null.
Json number(double x);

Vector vector_from_json(const Json& j, const std::string& where);
Matrix matrix_from_json(const Json& j, const std::string& where);

/// Pretty-printed JSON with sorted keys and a trailing newline.
std::string dump(const Json& j);

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace supou
