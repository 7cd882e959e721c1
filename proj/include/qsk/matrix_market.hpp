#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "qsk/matrix.hpp"

namespace qsk {

/// Matrix Market exchange (real/integer fields, general/symmetric, array and
/// coordinate formats). Symmetric storage is expanded on read. Writers emit
/// the array format with 17 significant digits so reads round-trip exactly,
/// and replace the target atomically (temp file + rename).
DenseMatrix mm_parse(std::istream& in);
DenseMatrix mm_read(const std::filesystem::path& path);

/// Reads an m x 1 (or 1 x n) object as a vector.
Vector mm_read_vector(const std::filesystem::path& path);

void mm_format(std::ostream& out, const DenseMatrix& a);
void mm_write(const std::filesystem::path& path, const DenseMatrix& a);
void mm_write(const std::filesystem::path& path, std::span<const double> v);

/// Writes `contents` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace qsk
