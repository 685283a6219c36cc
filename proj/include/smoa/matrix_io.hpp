#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "smoa/matrix.hpp"

namespace smoa::io {

// SMOA-MAT v1: "SMOA-MAT", version byte 0x01, rows and cols as u64 LE, then
// rows*cols f64 LE in row-major order.
inline constexpr std::string_view kMatrixMagic = "SMOA-MAT";
inline constexpr unsigned char kMatrixVersion = 0x01;

std::string encode_binary(const Matrix& m);
Matrix decode_binary(std::string_view bytes);

/// First line "rows,cols", then one comma-separated row per line. Values use
/// the shortest decimal form that parses back to the same double.
std::string encode_csv(const Matrix& m);
Matrix decode_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Reads either format, detected from the leading magic bytes.
Matrix read_matrix(const std::filesystem::path& path);
/// Format chosen by extension: ".csv" writes CSV, anything else SMOA-MAT.
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
/// Digest of the canonical SMOA-MAT encoding, independent of on-disk format.
std::string matrix_hash(const Matrix& m);

std::string format_double(double v);

}  // namespace smoa::io
