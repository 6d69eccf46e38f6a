#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "kgfit/matrix.hpp"

namespace kgfit::io {

/// Binary matrix container shared by embedding files, checkpoints and the
/// precompute sidecar:
///
///   "KGFE" | u16 version (=1) | u64 rows | u32 cols | rows*cols f32
///
/// All integers and floats little-endian, rows stored contiguously.
inline constexpr std::uint16_t kMatrixFormatVersion = 1;

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

/// Whole-file helpers.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace kgfit::io
